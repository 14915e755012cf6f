#include "cit/ball_controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "cit/qp_solver.hpp"
#include "cit/trajectory.hpp"

namespace cit::ball {

void ControlParams::validate() const {
  if (!(gamma > 0.0 && c > 0.0 && lambda > 0.0 && dt > 0.0)) {
    throw Error(ErrorCode::BadConfig, "gamma, c, lambda and dt must be positive");
  }
  if (!(dtheta_min < dtheta_max)) throw Error(ErrorCode::BadConfig, "need dtheta_min < dtheta_max");
  if (dtheta_min > 0.0 || dtheta_max < 0.0) {
    throw Error(ErrorCode::BadConfig, "tilt-rate box must contain zero");
  }
  if (beta_max < 0.0 || k_s < 0.0) throw Error(ErrorCode::BadConfig, "beta_max, k_s must be >= 0");
  if (!(probe > 0.0)) throw Error(ErrorCode::BadConfig, "probe step must be positive");
  if (preview < 1) throw Error(ErrorCode::BadConfig, "preview needs at least one step");
}

std::vector<Eigen::VectorXd> PlateTrajectory::accelerations() const {
  const std::size_t T = positions.size();
  std::vector<Eigen::VectorXd> acc(T, Eigen::VectorXd::Zero(n + 1));
  if (T < 3) return acc;
  for (std::size_t t = 1; t + 1 < T; ++t) {
    acc[t] = (positions[t + 1] - 2.0 * positions[t] + positions[t - 1]) / (dt * dt);
  }
  acc[0] = acc[1];
  acc[T - 1] = acc[T - 2];
  return acc;
}

PlateTrajectory stationary_plate(int n, double duration, double dt) {
  PlateTrajectory tr{n, dt, {}};
  const int steps = std::max(1, static_cast<int>(std::lround(duration / dt)));
  tr.positions.assign(steps + 1, Eigen::VectorXd::Zero(n + 1));
  return tr;
}

PlateTrajectory lemniscate_plate(int n, double amplitude, double period, int loops, double dt) {
  if (!(amplitude > 0.0 && period > 0.0 && loops > 0 && dt > 0.0)) {
    throw Error(ErrorCode::BadSpec, "lemniscate needs positive amplitude, period, loops and dt");
  }
  // Phase speed ramps in and out over half a period so the plate starts and
  // ends at rest.
  const double w = 2.0 * std::numbers::pi / period;
  const double ramp = 0.5 * period;
  const double total = period * loops + ramp;
  const auto ramp_phase = [&](double t) {
    return w * (0.5 * t - ramp / (2.0 * std::numbers::pi) * std::sin(std::numbers::pi * t / ramp));
  };
  const auto phase = [&](double t) {
    if (t <= ramp) return ramp_phase(t);
    if (t >= total - ramp) return 2.0 * std::numbers::pi * loops - ramp_phase(total - t);
    return ramp_phase(ramp) + w * (t - ramp);
  };
  PlateTrajectory tr{n, dt, {}};
  const int steps = static_cast<int>(std::lround(total / dt));
  for (int i = 0; i <= steps; ++i) {
    const double s = phase(std::min(i * dt, total));
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n + 1);
    p(0) = amplitude * std::sin(s);
    p(1) = amplitude * std::sin(s) * std::cos(s);
    tr.positions.push_back(p);
  }
  return tr;
}

PlateTrajectory polyline_plate(int n, const std::vector<Vec2>& points, double speed,
                               double smoothing, double dt) {
  if (!(speed > 0.0 && dt > 0.0 && smoothing >= 0.0)) {
    throw Error(ErrorCode::BadSpec, "polyline plate needs positive speed and dt");
  }
  const auto path = traj::resample_polyline(points, speed * dt);
  // Hold both ends so the smoothing window starts and ends at rest.
  const int hold = static_cast<int>(std::ceil(3.0 * smoothing / dt)) + 1;
  std::vector<Vec2> raw(hold, path.front());
  raw.insert(raw.end(), path.begin(), path.end());
  raw.insert(raw.end(), hold, path.back());

  std::vector<Vec2> smooth = raw;
  if (smoothing > 0.0) {
    const double sd = smoothing / dt;
    const int half = static_cast<int>(std::ceil(3.0 * sd));
    std::vector<double> kernel(2 * half + 1);
    double total = 0.0;
    for (int k = -half; k <= half; ++k) {
      kernel[k + half] = std::exp(-0.5 * (k / sd) * (k / sd));
      total += kernel[k + half];
    }
    const int len = static_cast<int>(raw.size());
    for (int i = 0; i < len; ++i) {
      Vec2 acc{};
      for (int k = -half; k <= half; ++k) {
        const int j = std::clamp(i + k, 0, len - 1);
        acc += (kernel[k + half] / total) * raw[j];
      }
      smooth[i] = acc;
    }
  }
  PlateTrajectory tr{n, dt, {}};
  for (const Vec2 p : smooth) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n + 1);
    q(0) = p.x;
    q(1) = p.y;  // vertical for n = 1, lateral for n = 2
    tr.positions.push_back(q);
  }
  return tr;
}

PlateTrajectory catch_plate(double dv, double pulse, double settle, double rest, double dt) {
  if (!(pulse > 0.0 && settle > 0.0 && rest >= 0.0 && dt > 0.0)) {
    throw Error(ErrorCode::BadSpec, "catch motion needs positive durations");
  }
  const auto accel = [&](double t) {
    if (t < pulse) return -dv / pulse * (1.0 - std::cos(2.0 * std::numbers::pi * t / pulse));
    t -= pulse;
    if (t < settle) return dv / settle * (1.0 - std::cos(2.0 * std::numbers::pi * t / settle));
    return 0.0;
  };
  PlateTrajectory tr{1, dt, {}};
  const int steps = static_cast<int>(std::lround((pulse + settle + rest) / dt));
  const int sub = 50;
  const double h = dt / sub;
  double x = 0.0;
  double v = 0.0;
  double t = 0.0;
  for (int i = 0; i <= steps; ++i) {
    Eigen::VectorXd p(2);
    p << x, 0.0;
    tr.positions.push_back(p);
    for (int k = 0; k < sub; ++k) {
      const double a0 = accel(t);
      const double a1 = accel(t + h);
      x += v * h + (2.0 * a0 + a1) / 6.0 * h * h;
      v += 0.5 * (a0 + a1) * h;
      t += h;
    }
  }
  return tr;
}

namespace {

PlateState make_plate(int n, double l, const Eigen::VectorXd& theta, const Eigen::VectorXd& acc) {
  PlateState p;
  p.n = n;
  p.half_length = l;
  p.theta = theta;
  p.accel = acc;
  return p;
}

Eigen::VectorXd rate_of(const Action& a, int n) {
  if (const auto* r = std::get_if<TiltRate>(&a)) {
    return Eigen::Map<const Eigen::VectorXd>(r->rate.data(), static_cast<long>(r->rate.size()));
  }
  return Eigen::VectorXd::Zero(n);
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

LieDerivatives lie_derivatives(const ProbGrid& grid, const PlateState& plate,
                               const Eigen::VectorXd& rate_now,
                               const std::vector<Eigen::VectorXd>& accel_ahead,
                               const BallParams& ball, const UncertaintyModel& unc,
                               const EnergyModel& model, const ControlParams& params) {
  if (accel_ahead.empty()) throw Error(ErrorCode::BadConfig, "need the next plate acceleration");
  const int n = grid.n();
  const double dt = params.dt;
  const int steps = params.preview;
  const double horizon = steps * dt;
  const auto support = grid.support();
  const auto accel_at = [&](int k) -> const Eigen::VectorXd& {
    return k == 0 ? plate.accel
                  : accel_ahead[std::min<std::size_t>(k - 1, accel_ahead.size() - 1)];
  };

  LieDerivatives out;
  out.h = cbf_value(grid, plate, model);
  out.v = clf_value(grid, plate, model, params.k_s);
  const double s_next = entropy(propagate_prob(grid, plate, ball, unc, dt).grid);

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> wts;
  // Barrier and Lyapunov values at the end of the preview: the first step
  // runs the full noisy image at the probed rate, later steps carry each
  // image point along the mean dynamics while the rate brakes to zero.
  const auto ahead = [&](const Eigen::VectorXd& u, double& h, double& v) {
    PlateState p = plate;
    p.theta = plate.theta + dt * u;
    pts.clear();
    wts.clear();
    for_each_image(grid, support, p, ball, unc, dt, [&](const Eigen::VectorXd& s, double w) {
      pts.push_back(s);
      wts.push_back(w);
    });
    Eigen::VectorXd rate = u;
    for (int k = 1; k < steps; ++k) {
      // Brake the rate to zero as fast as the slew bound allows.
      for (int i = 0; i < n; ++i) {
        const double mag = std::max(0.0, std::fabs(rate(i)) - params.beta_max * dt);
        rate(i) = std::copysign(mag, rate(i));
      }
      p.theta += dt * rate;
      p.accel = accel_at(k);
      const Eigen::VectorXd drive = ball.rolling_factor() * plate_frame_accels(p).a_eff;
      for (auto& s : pts) {
        const Eigen::VectorXd acc = drive - ball.rolling_friction * s.tail(n);
        s.head(n) += dt * s.tail(n) + 0.5 * dt * dt * acc;
        s.tail(n) += dt * acc;
      }
    }
    p.accel = accel_at(steps);
    const Eigen::VectorXd a = plate_frame_accels(p).a_eff;
    double top = -std::numeric_limits<double>::infinity();
    double expected = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double e = energy(pts[j].head(n), pts[j].tail(n), a, model);
      top = std::max(top, e);
      expected += wts[j] * e;
    }
    h = e_max(p, model) - top;
    v = expected - params.k_s * s_next;
  };

  // Linearize about the current rate; the braking makes the preview
  // nonlinear in u and zero may lie outside the reachable box.
  const Eigen::VectorXd u0 = rate_now.size() == n ? rate_now : Eigen::VectorXd::Zero(n);
  double h0 = 0.0;
  double v0 = 0.0;
  ahead(u0, h0, v0);
  out.lg_h = Eigen::VectorXd::Zero(n);
  out.lg_v = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd u = u0;
    u(i) += params.probe;
    double hp = 0.0, vp = 0.0, hm = 0.0, vm = 0.0;
    ahead(u, hp, vp);
    u(i) -= 2.0 * params.probe;
    ahead(u, hm, vm);
    out.lg_h(i) = (hp - hm) / (2.0 * params.probe * horizon);
    out.lg_v(i) = (vp - vm) / (2.0 * params.probe * horizon);
  }
  out.lf_h = (h0 - out.h) / horizon - out.lg_h.dot(u0);
  out.lf_v = (v0 - out.v) / horizon - out.lg_v.dot(u0);
  return out;
}

DynamicPlan dynamic_control(const ProbGrid& initial, const PlateTrajectory& trajectory,
                            const BallParams& ball, const UncertaintyModel& unc,
                            const EnergyModel& model, const ControlParams& params,
                            bool keep_grids) {
  params.validate();
  ball.validate();
  const int n = initial.n();
  unc.validate(n);
  if (trajectory.n != n) throw Error(ErrorCode::BadConfig, "trajectory and grid differ in n");
  if (trajectory.positions.size() < 2) throw Error(ErrorCode::BadSpec, "trajectory needs 2+ points");
  if (std::fabs(trajectory.dt - params.dt) > 1e-12) {
    throw Error(ErrorCode::BadConfig, "trajectory sample time must equal the control step");
  }
  if (initial.empty()) throw Error(ErrorCode::EmptyInitialPSS, "initial probability grid is empty");

  const double l = initial.x_max();
  const double dt = params.dt;
  const auto acc = trajectory.accelerations();
  const std::size_t steps = trajectory.positions.size() - 1;

  DynamicPlan plan;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prev_rate = Eigen::VectorXd::Zero(n);
  ProbGrid grid = initial;
  plan.thetas.push_back(theta);
  if (keep_grids) plan.grids.push_back(grid);

  {
    const PlateState p0 = make_plate(n, l, theta, acc[0]);
    if (!(max_energy(grid, p0, model) < e_max(p0, model))) {
      plan.result = VerificationResult::fail(0, FailureReason::EscapedCage);
      return plan;
    }
  }

  double total_ms = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const PlateState now = make_plate(n, l, theta, acc[t]);
    const std::vector<Eigen::VectorXd> ahead(
        acc.begin() + static_cast<long>(t + 1),
        acc.begin() + static_cast<long>(std::min(t + 1 + params.preview, acc.size())));
    const LieDerivatives ld = lie_derivatives(grid, now, prev_rate, ahead, ball, unc, model, params);

    qp::CbfClfQP q;
    q.n = n;
    q.lf_h = ld.lf_h;
    q.lg_h = ld.lg_h;
    q.alpha_h = params.gamma * ld.h;
    q.lf_v = ld.lf_v;
    q.lg_v = ld.lg_v;
    q.c_v = params.c * ld.v;
    q.lambda = params.lambda;
    q.lo = Eigen::VectorXd(n);
    q.hi = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
      q.lo(i) = std::max(params.dtheta_min, prev_rate(i) - params.beta_max * dt);
      q.hi(i) = std::min(params.dtheta_max, prev_rate(i) + params.beta_max * dt);
      if (!(q.lo(i) < q.hi(i))) {
        // No slew room left: the rate is pinned.
        q.lo(i) = std::clamp(prev_rate(i), params.dtheta_min, params.dtheta_max) - 1e-12;
        q.hi(i) = q.lo(i) + 2e-12;
      }
    }
    const qp::QPSolution sol = qp::solve(q);
    const Eigen::VectorXd rate = sol.dtheta;
    const Eigen::VectorXd theta_next = theta + dt * rate;

    RunLogRecord rec;
    rec.t = static_cast<int>(t);
    rec.action = TiltRate{to_vec(rate)};
    rec.extra["dtheta"] = to_vec(rate);
    rec.extra["theta"] = to_vec(theta_next);
    rec.extra["qp_feasible"] = sol.feasible;
    plan.actions.push_back(TiltRate{to_vec(rate)});

    bool tilt_ok = true;
    for (int i = 0; i < n; ++i) tilt_ok = tilt_ok && std::fabs(theta_next(i)) < std::numbers::pi / 2;
    if (!sol.feasible || !tilt_ok) {
      rec.contained = false;
      plan.log.push_back(rec);
      plan.result = VerificationResult::fail(t, FailureReason::InfeasibleAction);
      total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      plan.mean_step_ms = total_ms / static_cast<double>(t + 1);
      return plan;
    }

    const PlateState during = make_plate(n, l, theta_next, acc[t]);
    Propagated next = propagate_prob(grid, during, ball, unc, dt);
    const PlateState after = make_plate(n, l, theta_next, acc[t + 1]);
    const double emax = e_max(after, model);
    const double top = max_energy(next.grid, after, model);
    const bool contained = top < emax;

    const auto t1 = std::chrono::steady_clock::now();
    total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();

    rec.contained = contained;
    rec.pss_cells = next.grid.support().size();
    rec.extra["E_max"] = emax;
    rec.extra["max_E"] = top;
    rec.extra["h"] = emax - top;
    rec.extra["V"] = clf_value(next.grid, after, model, params.k_s);
    rec.extra["entropy"] = entropy(next.grid);
    rec.extra["lost_mass"] = next.lost_mass;
    double mass = 0.0;
    for (const auto i : next.grid.support()) mass += next.grid.values()[i];
    rec.extra["mass"] = mass;
    if (next.lost_mass > 1e-3) rec.extra["warning"] = "lost_mass above 1e-3";
    plan.log.push_back(rec);

    grid = std::move(next.grid);
    theta = theta_next;
    prev_rate = rate;
    plan.thetas.push_back(theta);
    if (keep_grids) plan.grids.push_back(grid);

    if (!contained) {
      plan.result = VerificationResult::fail(t, FailureReason::EscapedCage);
      plan.mean_step_ms = total_ms / static_cast<double>(t + 1);
      return plan;
    }
  }
  plan.mean_step_ms = steps > 0 ? total_ms / static_cast<double>(steps) : 0.0;
  plan.result = VerificationResult::ok();
  return plan;
}

std::vector<Eigen::VectorXd> integrate_tilt(int n, const ActionSequence& actions, double dt) {
  std::vector<Eigen::VectorXd> thetas{Eigen::VectorXd::Zero(n)};
  for (const auto& a : actions) thetas.push_back(thetas.back() + dt * rate_of(a, n));
  return thetas;
}

VerificationResult verify_dynamic_plan(const ProbGrid& initial,
                                       const PlateTrajectory& trajectory,
                                       const ActionSequence& actions, const BallParams& ball,
                                       const UncertaintyModel& unc, const EnergyModel& model,
                                       const ControlParams& params) {
  const int n = initial.n();
  const double l = initial.x_max();
  const double dt = params.dt;
  const auto acc = trajectory.accelerations();
  if (actions.size() + 1 > acc.size()) {
    throw Error(ErrorCode::BadConfig, "plan is longer than the trajectory");
  }
  const auto thetas = integrate_tilt(n, actions, dt);
  const double tol = 1e-9;

  return verify_caging_in_time(
      initial, std::span<const Action>(actions),
      [&](std::size_t t) { return make_plate(n, l, thetas[t], acc[t]); },
      [&](const ProbGrid& g, const Action&, std::size_t t) {
        return propagate_prob(g, make_plate(n, l, thetas[t + 1], acc[t]), ball, unc, dt).grid;
      },
      [&](const ProbGrid& g, const PlateState& plate) {
        return max_energy(g, plate, model) < e_max(plate, model);
      },
      [&](const Action& a, std::size_t t) {
        const Eigen::VectorXd r = rate_of(a, n);
        const Eigen::VectorXd prev = t > 0 ? rate_of(actions[t - 1], n) : Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
          if (r(i) < params.dtheta_min - tol || r(i) > params.dtheta_max + tol) return false;
          if (std::fabs(r(i) - prev(i)) > params.beta_max * dt + tol) return false;
          if (!(std::fabs(thetas[t + 1](i)) < std::numbers::pi / 2)) return false;
        }
        return true;
      });
}

}  // namespace cit::ball
