#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cit/ball_controller.hpp"
#include "cit/ball_model.hpp"
#include "cit/core.hpp"

namespace cit::oracle {

struct BallOracleConfig {
  int substeps = 10;  // integrator steps per control step
  int rollouts = 20;
  std::uint64_t seed = 1;
  bool keep_traces = false;
};

struct BallRollout {
  double max_abs = 0.0;   // largest |x_i| over time and axes, m
  double mean_abs = 0.0;  // time average of |x|, m
  bool contained = true;
  std::vector<Eigen::VectorXd> trace;  // (x, xdot) per control step, if kept
};

struct BallRolloutSummary {
  double success_rate = 0.0;
  double mean_abs = 0.0;  // over all rollouts
  double worst_abs = 0.0;
  std::vector<BallRollout> rollouts;
};

/// One RK4 integration of the continuous dynamics from state s over a single
/// control step: tilt is linear between the endpoints, plate acceleration too.
/// Noise values are fixed for the step.
Eigen::VectorXd integrate_step(const Eigen::VectorXd& s, const ball::PlateState& from,
                               const ball::PlateState& to, const ball::BallParams& ball,
                               double eta_m, const Eigen::VectorXd& eta_p, double eta_mu,
                               double dt, int substeps);

/// Open-loop execution of a tilt-rate plan. Each rollout draws its start
/// from the initial grid (cell by probability, uniform inside the cell),
/// one mass and one friction error, and a fresh plate-acceleration error
/// every control step. All draws are truncated at three standard deviations.
/// Success means |x_i| <= l on every axis at every integrator step.
BallRolloutSummary rollout_ball(const ActionSequence& plan, const ball::PlateTrajectory& trajectory,
                                const ball::ProbGrid& initial, const ball::BallParams& ball,
                                const ball::UncertaintyModel& unc, const BallOracleConfig& cfg);

/// Catching set-up shared by the sweep and the CLI.
struct CatchTask {
  double x0 = -0.05;        // m, mean start position
  double x0_spread = 0.01;  // full width of the position box
  double pulse = 0.25;      // s
  double settle = 0.6;      // s
  double rest = 1.0;        // s
  int cells = 81;
  double v_max = 1.5;
  double half_length = 0.08;
};

/// Retreat sized so the ball's mean speed relative to the plate is taken out
/// by the first pulse (the ball feels the plate through its rolling factor).
ball::PlateTrajectory catch_trajectory(const CatchTask& task, double v0,
                                       const ball::BallParams& ball, double dt);

/// Initial grid uniform over [x0 +- spread/2] x [v0 +- dv0/2].
ball::ProbGrid catch_grid(const CatchTask& task, double x0, double v0, double dv0,
                          double half_length);

struct SweepCell {
  double v0 = 0.0;
  double dv0 = 0.0;
  double beta_max = 0.0;
  double success_rate = 0.0;
};

/// Planning success over a (v0, dv0, beta_max) grid. Each trial draws the
/// start position in [x0 +- 0.01] and the mean speed in [v0 +- 0.02].
std::vector<SweepCell> sensitivity_sweep(const std::vector<double>& v0s,
                                         const std::vector<double>& dv0s,
                                         const std::vector<double>& betas, int trials,
                                         const CatchTask& task, const ball::BallParams& ball,
                                         const ball::UncertaintyModel& unc,
                                         const ball::EnergyModel& model,
                                         const ball::ControlParams& params, std::uint64_t seed);

void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells);
void write_trace_csv(const std::string& path, const BallRollout& rollout, double dt);

}  // namespace cit::oracle
