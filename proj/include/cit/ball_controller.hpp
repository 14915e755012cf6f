#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cit/ball_model.hpp"
#include "cit/core.hpp"
#include "cit/run_log.hpp"

namespace cit::ball {

struct ControlParams {
  double gamma = 5.0;      // class-K gain, 1/s
  double c = 1.0;          // CLF rate, 1/s
  double lambda = 1e3;     // slack weight
  double k_s = 1e-3;       // entropy weight, J
  double dtheta_min = -3.0;
  double dtheta_max = 3.0;  // rad/s
  double beta_max = 25.0;   // rad/s^2
  double dt = 0.02;
  double probe = 0.01;  // rad/s, finite-difference step for the control derivative
  int preview = 15;     // steps over which the derivatives are measured

  void validate() const;
};

/// Plate center positions sampled every dt; each entry has n+1 components,
/// the last one vertical.
struct PlateTrajectory {
  int n = 1;
  double dt = 0.02;
  std::vector<Eigen::VectorXd> positions;

  /// Central second differences, ends copied from their neighbors.
  std::vector<Eigen::VectorXd> accelerations() const;
};

PlateTrajectory stationary_plate(int n, double duration, double dt);
/// Figure eight of half-width A: in the x-z plane for n = 1, x-y for n = 2.
PlateTrajectory lemniscate_plate(int n, double amplitude, double period, int loops, double dt);
/// Waypoints in meters traversed at constant speed, then Gaussian-smoothed
/// in time so corners give finite accelerations.
PlateTrajectory polyline_plate(int n, const std::vector<Vec2>& points, double speed,
                               double smoothing, double dt);
/// Retreat for catching (n = 1): a raised-cosine plate acceleration pulse of
/// total -dv along x, which slows a ball rolling toward +x by dv, then a
/// slower pulse of +dv that stops the plate, then rest.
PlateTrajectory catch_plate(double dv, double pulse, double settle, double rest, double dt);

struct LieDerivatives {
  double lf_h = 0.0;
  Eigen::VectorXd lg_h;
  double lf_v = 0.0;
  Eigen::VectorXd lg_v;
  double h = 0.0;
  double v = 0.0;
};

/// Finite-difference Lie derivatives of the barrier and Lyapunov values,
/// measured over `params.preview` steps with the probed rate applied in the
/// first and then braked to zero at the slew bound. Tilt acts on position through two integrations, so a single step
/// barely registers it. Values are taken on continuous states, never
/// snapped to cells. `accel_ahead` holds the plate accelerations after the
/// current step; its last entry is reused past the end. The affine model is
/// exact at `rate_now`, the rate currently applied.
LieDerivatives lie_derivatives(const ProbGrid& grid, const PlateState& plate,
                               const Eigen::VectorXd& rate_now,
                               const std::vector<Eigen::VectorXd>& accel_ahead,
                               const BallParams& ball, const UncertaintyModel& unc,
                               const EnergyModel& model, const ControlParams& params);

struct DynamicPlan {
  ActionSequence actions;
  VerificationResult result;
  RunLog log;
  std::vector<Eigen::VectorXd> thetas;  // tilt at each step, index 0 initial
  std::vector<ProbGrid> grids;          // filled when requested
  double mean_step_ms = 0.0;
};

/// The plate half length is taken from the grid's position extent.
DynamicPlan dynamic_control(const ProbGrid& initial, const PlateTrajectory& trajectory,
                            const BallParams& ball, const UncertaintyModel& unc,
                            const EnergyModel& model, const ControlParams& params,
                            bool keep_grids = false);

/// Replays tilt rates through the generic verification loop with the energy cage.
VerificationResult verify_dynamic_plan(const ProbGrid& initial,
                                       const PlateTrajectory& trajectory,
                                       const ActionSequence& actions, const BallParams& ball,
                                       const UncertaintyModel& unc, const EnergyModel& model,
                                       const ControlParams& params);

/// Tilt after each action, starting flat.
std::vector<Eigen::VectorXd> integrate_tilt(int n, const ActionSequence& actions, double dt);

}  // namespace cit::ball
