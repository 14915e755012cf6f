#include "cit/ball_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace cit::oracle {

using ball::PlateState;

namespace {

double truncated_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (;;) {
    const double z = nd(rng);
    if (std::fabs(z) <= 3.0) return z;
  }
}

PlateState blend(const PlateState& a, const PlateState& b, double s) {
  PlateState p = a;
  p.theta = (1.0 - s) * a.theta + s * b.theta;
  p.accel = (1.0 - s) * a.accel + s * b.accel;
  return p;
}

Eigen::VectorXd rate(const Eigen::VectorXd& s, const PlateState& plate,
                     const ball::BallParams& ball, double eta_m, const Eigen::VectorXd& eta_p,
                     double eta_mu) {
  const int n = plate.n;
  Eigen::VectorXd d(2 * n);
  d.head(n) = s.tail(n);
  d.tail(n) = ball::ball_accel(s.tail(n), ball::plate_frame_accels(plate), ball, eta_m, eta_p,
                               eta_mu);
  return d;
}

PlateState plate_at(int n, double l, const Eigen::VectorXd& theta, const Eigen::VectorXd& acc) {
  PlateState p;
  p.n = n;
  p.half_length = l;
  p.theta = theta;
  p.accel = acc;
  return p;
}

}  // namespace

Eigen::VectorXd integrate_step(const Eigen::VectorXd& s0, const PlateState& from,
                               const PlateState& to, const ball::BallParams& ball, double eta_m,
                               const Eigen::VectorXd& eta_p, double eta_mu, double dt,
                               int substeps) {
  const double h = dt / substeps;
  Eigen::VectorXd s = s0;
  for (int k = 0; k < substeps; ++k) {
    const double a = static_cast<double>(k) / substeps;
    const double b = static_cast<double>(k + 1) / substeps;
    const PlateState p0 = blend(from, to, a);
    const PlateState pm = blend(from, to, 0.5 * (a + b));
    const PlateState p1 = blend(from, to, b);
    const Eigen::VectorXd k1 = rate(s, p0, ball, eta_m, eta_p, eta_mu);
    const Eigen::VectorXd k2 = rate(s + 0.5 * h * k1, pm, ball, eta_m, eta_p, eta_mu);
    const Eigen::VectorXd k3 = rate(s + 0.5 * h * k2, pm, ball, eta_m, eta_p, eta_mu);
    const Eigen::VectorXd k4 = rate(s + h * k3, p1, ball, eta_m, eta_p, eta_mu);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

BallRolloutSummary rollout_ball(const ActionSequence& plan, const ball::PlateTrajectory& trajectory,
                                const ball::ProbGrid& initial, const ball::BallParams& ball,
                                const ball::UncertaintyModel& unc, const BallOracleConfig& cfg) {
  const int n = initial.n();
  const double l = initial.x_max();
  const double dt = trajectory.dt;
  if (cfg.substeps < 10) throw Error(ErrorCode::BadConfig, "need at least 10 substeps per step");
  if (plan.size() + 1 > trajectory.positions.size()) {
    throw Error(ErrorCode::BadConfig, "plan is longer than the trajectory");
  }
  const auto acc = trajectory.accelerations();
  const auto thetas = ball::integrate_tilt(n, plan, dt);

  // Cholesky with a tiny jitter so a singular covariance still factors.
  const Eigen::MatrixXd sp =
      unc.sigma_p.size() ? unc.sigma_p : Eigen::MatrixXd::Zero(n + 1, n + 1);
  const Eigen::MatrixXd chol =
      (sp + 1e-15 * Eigen::MatrixXd::Identity(n + 1, n + 1)).llt().matrixL();

  const auto support = initial.support();
  std::vector<double> weights;
  for (const auto i : support) weights.push_back(initial.values()[i]);

  std::mt19937_64 rng(cfg.seed);
  BallRolloutSummary out;
  int ok = 0;
  double mean_sum = 0.0;
  for (int r = 0; r < cfg.rollouts; ++r) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    Eigen::VectorXd s = initial.state(support[pick(rng)]);
    for (int d = 0; d < n; ++d) {
      s(d) += jitter(rng) * initial.dx();
      s(n + d) += jitter(rng) * initial.dv();
    }
    const double eta_m = unc.sigma_m * truncated_normal(rng);
    Eigen::VectorXd z(n + 1);
    const double eta_mu = unc.sigma_mu * truncated_normal(rng);

    BallRollout ro;
    double abs_sum = s.head(n).norm();
    ro.max_abs = s.head(n).cwiseAbs().maxCoeff();
    if (cfg.keep_traces) ro.trace.push_back(s);
    for (std::size_t t = 0; t < plan.size(); ++t) {
      for (int d = 0; d <= n; ++d) z(d) = truncated_normal(rng);
      const Eigen::VectorXd eta_p = chol * z;
      const PlateState from = plate_at(n, l, thetas[t], acc[t]);
      const PlateState to = plate_at(n, l, thetas[t + 1], acc[t + 1]);
      // Check every substep, not only the control instants.
      const double h = dt / cfg.substeps;
      const ball::BallParams& b = ball;
      for (int k = 0; k < cfg.substeps; ++k) {
        const double a0 = static_cast<double>(k) / cfg.substeps;
        const double a1 = static_cast<double>(k + 1) / cfg.substeps;
        s = integrate_step(s, blend(from, to, a0), blend(from, to, a1), b, eta_m, eta_p, eta_mu,
                           h, 1);
        ro.max_abs = std::max(ro.max_abs, s.head(n).cwiseAbs().maxCoeff());
      }
      abs_sum += s.head(n).norm();
      if (cfg.keep_traces) ro.trace.push_back(s);
    }
    ro.mean_abs = abs_sum / static_cast<double>(plan.size() + 1);
    ro.contained = ro.max_abs <= l;
    ok += ro.contained ? 1 : 0;
    mean_sum += ro.mean_abs;
    out.worst_abs = std::max(out.worst_abs, ro.max_abs);
    out.rollouts.push_back(std::move(ro));
  }
  out.success_rate = cfg.rollouts > 0 ? static_cast<double>(ok) / cfg.rollouts : 0.0;
  out.mean_abs = cfg.rollouts > 0 ? mean_sum / cfg.rollouts : 0.0;
  return out;
}

ball::ProbGrid catch_grid(const CatchTask& task, double x0, double v0, double dv0,
                          double half_length) {
  Eigen::VectorXd lo(2), hi(2);
  lo << x0 - 0.5 * task.x0_spread, v0 - 0.5 * dv0;
  hi << x0 + 0.5 * task.x0_spread, v0 + 0.5 * dv0;
  return ball::ProbGrid::uniform_box(1, task.cells, half_length, task.v_max, lo, hi);
}

ball::PlateTrajectory catch_trajectory(const CatchTask& task, double v0,
                                       const ball::BallParams& ball, double dt) {
  return ball::catch_plate(v0 / ball.rolling_factor(), task.pulse, task.settle, task.rest, dt);
}

std::vector<SweepCell> sensitivity_sweep(const std::vector<double>& v0s,
                                         const std::vector<double>& dv0s,
                                         const std::vector<double>& betas, int trials,
                                         const CatchTask& task, const ball::BallParams& ball,
                                         const ball::UncertaintyModel& unc,
                                         const ball::EnergyModel& model,
                                         const ball::ControlParams& params, std::uint64_t seed) {
  if (v0s.empty() || dv0s.empty() || betas.empty() || trials < 1) {
    throw Error(ErrorCode::BadSpec, "sweep grids must be nonempty and trials positive");
  }
  const double l = task.half_length;
  std::vector<SweepCell> cells;
  for (const double beta : betas) {
    ball::ControlParams p = params;
    p.beta_max = beta;
    for (const double v0 : v0s) {
      for (const double dv0 : dv0s) {
        // Same draws for every cell so rows differ only by the swept values.
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> ux(-0.01, 0.01);
        std::uniform_real_distribution<double> uv(-0.02, 0.02);
        int ok = 0;
        for (int k = 0; k < trials; ++k) {
          const double x0 = task.x0 + ux(rng);
          const double v = v0 + uv(rng);
          const auto grid = catch_grid(task, x0, v, dv0, l);
          const auto traj = catch_trajectory(task, v, ball, p.dt);
          if (grid.empty()) continue;
          const auto plan = ball::dynamic_control(grid, traj, ball, unc, model, p);
          ok += plan.result.success ? 1 : 0;
        }
        cells.push_back({v0, dv0, beta, static_cast<double>(ok) / trials});
      }
    }
  }
  return cells;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  f << "v0,dv0,beta_max,success_rate\n";
  for (const auto& c : cells) {
    f << c.v0 << ',' << c.dv0 << ',' << c.beta_max << ',' << c.success_rate << '\n';
  }
}

void write_trace_csv(const std::string& path, const BallRollout& rollout, double dt) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  if (rollout.trace.empty()) return;
  const int n = static_cast<int>(rollout.trace.front().size() / 2);
  f << (n == 1 ? "t,x\n" : "t,x,y\n");
  for (std::size_t t = 0; t < rollout.trace.size(); ++t) {
    f << t * dt;
    for (int d = 0; d < n; ++d) f << ',' << rollout.trace[t](d);
    f << '\n';
  }
}

}  // namespace cit::oracle
