#pragma once

#include <optional>
#include <vector>

#include "cit/core.hpp"
#include "cit/run_log.hpp"

namespace cit::push {

/// Quasi-static pushing task with a line pusher and a circular moving cage.
/// Lengths are in millimeters.
struct PushProblem {
  double object_radius = 25.0;  // bounding-circle radius r
  double cage_size = 20.0;      // R - r
  int num_candidates = 32;      // K
  double d_push = 20.0;
  double pusher_length = 100.0;
  double resolution = 1.0;      // mm per cell
  double lambda1 = 1.0;         // weight on normalized area behind the pusher
  double lambda2 = 1.0;         // weight on squared normalized depth behind the pusher
  int top_candidates = 5;
  /// Contacted states must advance at least d_con minus this along the push.
  double penetration_tolerance = 3.0;
  bool enforce_waypoint_spacing = true;
  /// Check candidates by one-step propagation and take the first (in heuristic
  /// order) that keeps the set caged; off gives the pure heuristic choice.
  bool lookahead = true;
  /// How many times the planner may undo a step and try its next option when
  /// no candidate keeps the set caged. Zero plans greedily.
  int max_backtracks = 2000;
  std::vector<Vec2> trajectory;

  double outer_radius() const { return object_radius + cage_size; }
  int grid_size() const;
  void validate() const;
};

struct PusherPose {
  Vec2 center;
  Vec2 direction;  // unit push direction, toward the cage center
  double half_length = 0.0;

  Vec2 tangent() const { return perp(direction); }
  PusherPose advanced(double distance) const {
    return {center + distance * direction, direction, half_length};
  }
};

/// Candidate angle theta_k = 2 k pi / K wrapped to [0, 2 pi).
double candidate_angle(int k, int num_candidates);

PusherPose pusher_pose(Vec2 cage_center_next, double outer_radius, double theta,
                       double half_length);

double distance_to_segment(Vec2 q, const PusherPose& pose);

/// Displacements allowed for one state under one push: the closed half
/// ellipse with semi-axes (d_con, d_con / 2) opening along the push direction.
struct SemiEllipseMotionSet {
  double d_con = 0.0;
  Vec2 push_direction{1.0, 0.0};
  bool is_null = true;

  bool contains(Vec2 displacement, double tol = 1e-9) const;
};

SemiEllipseMotionSet motion_set(Vec2 q, const PusherPose& pose, double object_radius,
                                double d_push);

PSSGrid propagate_pss(const PSSGrid& pss, std::optional<double> theta,
                      Vec2 cage_center_next, const PushProblem& problem);

/// Potential object area: the possible-state set dilated by the object disk.
struct POA {
  PSSGrid grid;
};

POA compute_poa(const PSSGrid& pss, double object_radius);

struct HeuristicTerms {
  double s_out = 0.0;  // mm^2 of POA behind the pusher line
  double d_out = 0.0;  // mm, deepest POA cell behind the pusher line
  double score = 0.0;
};

HeuristicTerms heuristic_terms(const POA& poa, double theta, const CageCircle& cage_next,
                               double object_radius, double lambda1, double lambda2);

inline double heuristic_score(const POA& poa, double theta, const CageCircle& cage_next,
                              double object_radius, double lambda1, double lambda2) {
  return heuristic_terms(poa, theta, cage_next, object_radius, lambda1, lambda2).score;
}

/// Shortest angular distance on the circle.
double angular_distance(double a, double b);

/// Every candidate push in heuristic order: the top set by closeness to the
/// previous push, then the rest by score.
std::vector<PushAngle> ranked_pushes(const PSSGrid& pss, const PushProblem& problem,
                                    const CageCircle& cage_next,
                                    std::optional<double> prev_action);

/// Picks the next push, or nullopt when the set already fits the next cage.
std::optional<PushAngle> find_push(const PSSGrid& pss, const PushProblem& problem,
                                   const CageCircle& cage_next,
                                   std::optional<double> prev_action);

struct PushPlan {
  ActionSequence actions;
  VerificationResult result;
  RunLog log;
  /// Possible-state set after each step (index 0 is the initial set).
  std::vector<PSSGrid> pss_history;
};

PSSGrid initial_pss(const PushProblem& problem, Vec2 initial_position);

PushPlan plan_push(const PushProblem& problem, Vec2 initial_position);

/// Replays a plan through the generic verification loop.
VerificationResult verify_push_plan(const PushProblem& problem, Vec2 initial_position,
                                    const ActionSequence& actions);

}  // namespace cit::push
