#include "cit/push_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cit::oracle {

namespace {

// Wraps into (-pi/2, pi/2]; the oracle object looks the same turned by pi.
double wrap_half_turn(double a) {
  a = std::fmod(a, std::numbers::pi);
  if (a > std::numbers::pi / 2) a -= std::numbers::pi;
  if (a <= -std::numbers::pi / 2) a += std::numbers::pi;
  return a;
}

}  // namespace

double peshkin_delta_beta(double a, double c, double beta0, double m) {
  return c * std::sin(beta0) / (a * a + c * c) * m;
}

double travel_after_contact(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                            double d_push) {
  const Vec2 rel = q0 - pose.center;
  const double f = dot(rel, pose.direction);
  const double w = std::fabs(dot(rel, pose.tangent()));
  if (f < 0.0) return -1.0;  // behind the pusher, it moves away
  double s;
  if (w <= pose.half_length) {
    s = f - bounding_radius;
  } else {
    const double dw = w - pose.half_length;
    if (dw >= bounding_radius) return -1.0;
    s = f - std::sqrt(bounding_radius * bounding_radius - dw * dw);
  }
  // Already overlapping at the start: contact is immediate.
  s = std::max(0.0, s);
  return d_push - s;
}

Vec2 simulate_push(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                   double d_push, const PushOracleConfig& cfg, std::mt19937_64& rng,
                   double* heading) {
  const double d_con = travel_after_contact(q0, pose, bounding_radius, d_push);
  if (d_con <= 0.0) throw Error(ErrorCode::NoContact, "pusher never reaches the object");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> contact(cfg.c_min, cfg.c_max);
  const double push_angle = std::atan2(pose.direction.y, pose.direction.x);
  double beta = heading != nullptr
                    ? std::numbers::pi / 2 + wrap_half_turn(*heading - push_angle)
                    : std::numbers::pi * unit(rng);
  // The object turns away from the side its mass center sits on.
  double side = std::cos(beta) > 1e-12 ? 1.0 : (std::cos(beta) < -1e-12 ? -1.0 : 0.0);
  if (side == 0.0) side = unit(rng) < 0.5 ? -1.0 : 1.0;

  const int n = std::max(1, static_cast<int>(std::ceil(d_con / cfg.micro_step)));
  const double step = d_con / n;
  const double a = cfg.object_radius;
  double forward = 0.0;
  double lateral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double frac = unit(rng);
    const double c = contact(rng);
    const double dbeta = frac * peshkin_delta_beta(a, c, beta, step);
    // Mass center swings about the contact; each micro-step stays on the
    // half ellipse of semi-axes (step, step / 2).
    const double lat = std::min(c * dbeta, 0.5 * step);
    forward += std::sqrt(std::max(0.0, step * step - 4.0 * lat * lat));
    lateral += side * lat;
    beta = std::clamp(beta - side * dbeta, 1e-6, std::numbers::pi - 1e-6);
  }
  if (heading != nullptr) *heading = push_angle + beta - std::numbers::pi / 2;
  return forward * pose.direction + lateral * pose.tangent();
}

Vec2 simulate_push(Vec2 q0, const push::PusherPose& pose, double bounding_radius,
                   double d_push, const PushOracleConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return simulate_push(q0, pose, bounding_radius, d_push, cfg, rng);
}

void score_rollout(PushRollout& r, const std::vector<Vec2>& trajectory) {
  r.max_error = 0.0;
  double sum = 0.0;
  const std::size_t n = std::min(r.positions.size(), trajectory.size());
  for (std::size_t t = 0; t < n; ++t) {
    const double e = distance(r.positions[t], trajectory[t]);
    r.max_error = std::max(r.max_error, e);
    sum += e;
  }
  r.mean_error = n > 0 ? sum / static_cast<double>(n) : 0.0;
}

namespace {

// Applies one push, treating a missed contact as no motion.
Vec2 push_object(Vec2 q, const push::PusherPose& pose, double bounding_radius, double d,
                 const PushOracleConfig& cfg, std::mt19937_64& rng, double& heading) {
  try {
    return q + simulate_push(q, pose, bounding_radius, d, cfg, rng, &heading);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoContact) throw;
    return q;
  }
}

double initial_heading(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, std::numbers::pi)(rng);
}

}  // namespace

PushRollout rollout_push_plan(const ActionSequence& plan, const push::PushProblem& problem,
                              Vec2 q0, const PushOracleConfig& cfg) {
  const auto& traj = problem.trajectory;
  if (plan.size() + 1 > traj.size()) {
    throw Error(ErrorCode::BadConfig, "plan is longer than the trajectory");
  }
  std::mt19937_64 rng(cfg.seed);
  double heading = initial_heading(rng);
  PushRollout r;
  Vec2 q = q0;
  r.positions.push_back(q);
  for (std::size_t t = 0; t < plan.size(); ++t) {
    if (const auto* p = std::get_if<PushAngle>(&plan[t])) {
      const auto pose = push::pusher_pose(traj[t + 1], problem.outer_radius(), p->theta,
                                          0.5 * problem.pusher_length);
      q = push_object(q, pose, problem.object_radius, problem.d_push, cfg, rng, heading);
    }
    r.positions.push_back(q);
  }
  score_rollout(r, traj);
  return r;
}

PushRollout rollout_naive_pusher(const push::PushProblem& problem, Vec2 q0,
                                 const PushOracleConfig& cfg) {
  const auto& traj = problem.trajectory;
  std::mt19937_64 rng(cfg.seed);
  double heading = initial_heading(rng);
  PushRollout r;
  Vec2 q = q0;
  r.positions.push_back(q);
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    const Vec2 delta = traj[t + 1] - traj[t];
    const double len = norm(delta);
    if (len > 0.0) {
      const Vec2 u = (1.0 / len) * delta;
      const push::PusherPose pose{traj[t] - problem.object_radius * u, u,
                                  0.5 * problem.pusher_length};
      q = push_object(q, pose, problem.object_radius, len, cfg, rng, heading);
    }
    r.positions.push_back(q);
  }
  score_rollout(r, traj);
  return r;
}

Vec2 p_controller_step(Vec2 observed, const std::vector<Vec2>& waypoints, double gain,
                       double cap) {
  if (waypoints.empty()) return {};
  const auto nearest = std::min_element(
      waypoints.begin(), waypoints.end(),
      [&](Vec2 a, Vec2 b) { return distance(a, observed) < distance(b, observed); });
  Vec2 cmd = gain * (*nearest - observed);
  const double len = norm(cmd);
  if (len > cap) cmd = (cap / len) * cmd;
  return cmd;
}

PushRollout rollout_p_controller(const push::PushProblem& problem, Vec2 q0,
                                 const PushOracleConfig& cfg, const PControllerConfig& pc) {
  const auto& traj = problem.trajectory;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double heading = initial_heading(rng);
  const int lag_short = static_cast<int>(std::lround(0.5 / pc.step_period));
  const int lag_long = static_cast<int>(std::lround(1.0 / pc.step_period));

  PushRollout r;
  Vec2 q = q0;
  r.positions.push_back(q);
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    std::size_t seen = t;
    if (pc.lag && unit(rng) < 0.5) {
      const int back = unit(rng) < 0.5 ? lag_short : lag_long;
      seen = t >= static_cast<std::size_t>(back) ? t - back : 0;
    }
    Vec2 obs = r.positions[seen];
    if (pc.noise_sigma > 0.0) {
      obs += Vec2{pc.noise_sigma * noise(rng), pc.noise_sigma * noise(rng)};
    }
    const Vec2 cmd = p_controller_step(obs, {traj[t + 1]}, pc.gain, pc.cap);
    const double len = norm(cmd);
    if (len > 1e-9) {
      const Vec2 u = (1.0 / len) * cmd;
      // The pusher is placed just touching the observed bounding circle.
      const push::PusherPose pose{obs - problem.object_radius * u, u,
                                  0.5 * problem.pusher_length};
      q = push_object(q, pose, problem.object_radius, len, cfg, rng, heading);
    }
    r.positions.push_back(q);
  }
  score_rollout(r, traj);
  return r;
}

}  // namespace cit::oracle
