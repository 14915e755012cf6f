#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cit/core.hpp"
#include "cit/push_planner.hpp"

namespace cit::oracle {

/// Randomized quasi-static pusher. Lengths in mm.
struct PushOracleConfig {
  double object_radius = 25.0;  // a, mass center to the farthest body point
  double c_min = 0.0;           // contact-distance range sampled per micro-step
  double c_max = 12.5;
  double micro_step = 0.5;
  std::uint64_t seed = 1;
};

/// Largest rotation of the object for pusher travel m.
double peshkin_delta_beta(double a, double c, double beta0, double m);

/// Pusher travel left after first contact with the bounding circle of radius r.
/// Negative when the pusher never reaches the circle.
double travel_after_contact(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                            double d_push);

/// Net object displacement for one straight push.
///
/// `heading` is the object's world orientation (radians, two-fold symmetric)
/// and is advanced by the rotation during the push; when null a random
/// orientation is drawn. Head-on (beta = pi/2) means heading equals the push
/// direction. Throws NoContact when the pusher stops short of the bounding circle.
Vec2 simulate_push(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                   double d_push, const PushOracleConfig& cfg, std::mt19937_64& rng,
                   double* heading = nullptr);
Vec2 simulate_push(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                   double d_push, const PushOracleConfig& cfg);

struct PushRollout {
  std::vector<Vec2> positions;  // index t is the position at waypoint t
  double max_error = 0.0;
  double mean_error = 0.0;
};

/// Tracking error of a position sequence against the trajectory it follows.
void score_rollout(PushRollout& r, const std::vector<Vec2>& trajectory);

/// Executes an open-loop plan against the oracle pusher.
PushRollout rollout_push_plan(const ActionSequence& plan, const push::PushProblem& problem,
                              Vec2 q0, const PushOracleConfig& cfg);

/// Pusher held behind the reference point, parallel to the path, stepping
/// along it with no feedback.
PushRollout rollout_naive_pusher(const push::PushProblem& problem, Vec2 q0,
                                 const PushOracleConfig& cfg);

struct PControllerConfig {
  double gain = 0.5;
  double cap = 20.0;         // mm per push
  double noise_sigma = 0.0;  // mm, per axis
  bool lag = false;          // with p = 0.5 observe a position 0.5 s or 1 s old
  double step_period = 0.1;  // s per waypoint
};

/// Push command (mm vector) from an observed position toward the closest waypoint.
Vec2 p_controller_step(Vec2 observed, const std::vector<Vec2>& waypoints, double gain,
                       double cap);

/// Closed-loop baseline: each step pushes the object toward the next waypoint.
PushRollout rollout_p_controller(const push::PushProblem& problem, Vec2 q0,
                                 const PushOracleConfig& cfg, const PControllerConfig& pc);

}  // namespace cit::oracle
