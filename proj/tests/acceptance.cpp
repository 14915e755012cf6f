// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "cit/ball_controller.hpp"
#include "cit/ball_model.hpp"
#include "cit/ball_oracle.hpp"
#include "cit/config.hpp"
#include "cit/push_oracle.hpp"
#include "cit/push_planner.hpp"
#include "cit/qp_solver.hpp"
#include "cit/trajectory.hpp"
#include "support/brute_qp.hpp"

using namespace cit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%2d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / xs.size();
}

// ---------------------------------------------------------------- pushing

push::PushProblem circle_problem(double cage, int K) {
  push::PushProblem p;
  p.cage_size = cage;
  p.num_candidates = K;
  p.d_push = cage == 10.0 ? 15.0 : 20.0;
  p.trajectory = traj::circle({150.0, 200, {}});
  return p;
}

struct PushCell {
  bool planned = false;
  bool verified = false;
  double worst = 0.0;
  double mae = 0.0;
};

std::vector<oracle::PushRollout> push_rollouts(const ActionSequence& plan,
                                               const push::PushProblem& p, int count) {
  std::vector<oracle::PushRollout> out;
  for (int s = 1; s <= count; ++s) {
    oracle::PushOracleConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    out.push_back(oracle::rollout_push_plan(plan, p, p.trajectory.front(), cfg));
  }
  return out;
}

std::map<std::pair<int, int>, PushCell> push_grid;

void criterion_1() {
  const auto t0 = Clock::now();
  int bad = 0;
  std::string where;
  for (int cage : {10, 20, 30, 40}) {
    for (int K : {16, 32, 64, 128}) {
      const auto p = circle_problem(cage, K);
      const auto plan = push::plan_push(p, p.trajectory.front());
      PushCell c;
      c.planned = plan.result.success;
      c.verified = push::verify_push_plan(p, p.trajectory.front(), plan.actions).success;
      std::vector<double> maes;
      for (const auto& r : push_rollouts(plan.actions, p, 100)) {
        c.worst = std::max(c.worst, r.max_error);
        maes.push_back(r.mean_error);
      }
      c.mae = mean(maes);
      push_grid[{cage, K}] = c;
      if (!(c.planned && c.verified && c.worst <= cage)) {
        ++bad;
        where += fmt(" cage%d/K%d(worst %.2f)", cage, K, c.worst);
      }
    }
  }
  const double s = seconds_since(t0);
  report(1, "push containment over cage x K", bad == 0 && s < 600,
         fmt("%d/16 cells planned, verified and contained in 100 rollouts; %.0f s", 16 - bad, s) + where);
}

void criterion_2() {
  bool ok = !push_grid.empty();
  std::string d;
  for (int cage : {10, 20, 30, 40}) {
    const double a = push_grid[{cage, 128}].mae, b = push_grid[{cage, 16}].mae;
    ok = ok && a < b;
    d += fmt(" c%d:K128 %.2f<K16 %.2f", cage, a, b);
  }
  for (int K : {16, 32, 64, 128}) {
    const double a = push_grid[{40, K}].mae, b = push_grid[{10, K}].mae;
    ok = ok && a > b;
    d += fmt(" K%d:c40 %.2f>c10 %.2f", K, a, b);
  }
  report(2, "MAE trends", ok, "mm," + d);
}

void criterion_3() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const oracle::PushOracleConfig cfg;
  int runs = 0;
  double worst_lat = -1e9, worst_len = -1e9;
  while (runs < 10000) {
    const double th = ang(rng);
    const Vec2 center{u(rng) * 50, u(rng) * 50};
    const auto pose = push::pusher_pose(center, 45.0, th, 100.0);
    // object somewhere ahead of the pusher
    const Vec2 q = center + Vec2{u(rng) * 20, u(rng) * 20};
    const double d_con = oracle::travel_after_contact(q, pose, 25.0, 20.0);
    if (d_con <= 0) continue;
    const Vec2 d = oracle::simulate_push(q, pose, 25.0, 20.0, cfg, rng, nullptr);
    const Vec2 dir = pose.direction;
    const double lateral = std::fabs(d.x * dir.y - d.y * dir.x);
    worst_lat = std::max(worst_lat, lateral - d_con / 2);
    worst_len = std::max(worst_len, norm(d) - d_con);
    ++runs;
  }
  const double pb = oracle::peshkin_delta_beta(25, 25, std::numbers::pi / 2, 20);
  const bool ok = worst_lat <= 0.1 && worst_len <= 0.1 && std::fabs(pb - 0.4) < 1e-15;
  report(3, "Peshkin bound", ok,
         fmt("%d pushes, max lateral excess %.3g mm, max length excess %.3g mm, delta_beta %.17g",
             runs, worst_lat, worst_len, pb));
}

double mean_mae(const std::vector<oracle::PushRollout>& rs) {
  std::vector<double> m;
  for (const auto& r : rs) m.push_back(r.mean_error);
  return mean(m);
}

double p_mae(const push::PushProblem& p, const oracle::PControllerConfig& pc, int count) {
  std::vector<oracle::PushRollout> rs;
  for (int s = 1; s <= count; ++s) {
    oracle::PushOracleConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    rs.push_back(oracle::rollout_p_controller(p, p.trajectory.front(), cfg, pc));
  }
  return mean_mae(rs);
}

void criterion_4() {
  const auto p = circle_problem(20, 32);
  const auto plan = push::plan_push(p, p.trajectory.front());
  const double caging = mean_mae(push_rollouts(plan.actions, p, 20));
  oracle::PControllerConfig clean;
  oracle::PControllerConfig noisy;
  noisy.noise_sigma = 10.0;
  oracle::PControllerConfig lagged;
  lagged.lag = true;
  const double a = p_mae(p, clean, 20), b = p_mae(p, noisy, 20), c = p_mae(p, lagged, 20);
  report(4, "P-controller baseline", plan.result.success && a <= caging && b > caging && c > caging,
         fmt("MAE caging %.2f, P clean %.2f, P noise 10 mm %.2f, P lag %.2f", caging, a, b, c));
}

void criterion_5() {
  push::PushProblem p;
  p.trajectory = traj::lemniscate({100.0, 200, 10});
  const auto t0 = Clock::now();
  const auto plan = push::plan_push(p, p.trajectory.front());
  int naive_lost = 0;
  int caged_ok = 0;
  double caged_worst = 0.0;
  for (int s = 1; s <= 20; ++s) {
    oracle::PushOracleConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    if (oracle::rollout_naive_pusher(p, p.trajectory.front(), cfg).max_error > p.cage_size) ++naive_lost;
    if (plan.result.success) {
      const auto r = oracle::rollout_push_plan(plan.actions, p, p.trajectory.front(), cfg);
      caged_worst = std::max(caged_worst, r.max_error);
      if (r.max_error <= p.cage_size) ++caged_ok;
    }
  }
  report(5, "naive pusher loses the object", naive_lost >= 1 && caged_ok == 20,
         fmt("naive lost %d/20 seeds, caging contained %d/20 over 10 loops (worst %.2f mm), %.0f s",
             naive_lost, caged_ok, caged_worst, seconds_since(t0)));
}

// ---------------------------------------------------------------- dynamics

Eigen::VectorXd random_vec(std::mt19937_64& rng, int size, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = scale * u(rng);
  return v;
}

ball::PlateState random_plate(std::mt19937_64& rng, int n) {
  ball::PlateState p = ball::PlateState::flat(n, 0.08);
  p.theta = random_vec(rng, n, 0.1);
  p.accel = random_vec(rng, n + 1, 1.0);
  return p;
}

ball::UncertaintyModel random_unc(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto unc = ball::UncertaintyModel::none(n);
  unc.sigma_m = 0.1 * u(rng);
  unc.sigma_mu = 0.1 * u(rng);
  const double sp = 0.05 * u(rng);
  unc.sigma_p = Eigen::MatrixXd::Identity(n + 1, n + 1) * sp * sp;
  return unc;
}

ball::ProbGrid random_box(std::mt19937_64& rng, int n, int cells) {
  Eigen::VectorXd c(2 * n), w(2 * n);
  for (int d = 0; d < n; ++d) {
    c(d) = random_vec(rng, 1, 0.03)(0);
    c(n + d) = random_vec(rng, 1, 0.2)(0);
    w(d) = 0.01 * (1.0 + random_vec(rng, 1, 1.0)(0));
    w(n + d) = 0.05 * (1.0 + random_vec(rng, 1, 1.0)(0));
  }
  return ball::ProbGrid::uniform_box(n, cells, 0.08, 1.0, c - w, c + w);
}

void criterion_6() {
  std::mt19937_64 rng(6);
  const ball::BallParams b;
  int calls = 0, bad_sum = 0, empty = 0, euler_checked = 0, euler_bad = 0;
  double worst_sum = 0.0;
  for (; calls < 1000; ++calls) {
    const int n = calls % 10 == 9 ? 2 : 1;
    const int cells = n == 1 ? 61 : 21;
    const auto plate = random_plate(rng, n);
    const bool delta = calls % 4 == 0;
    ball::ProbGrid g;
    if (delta) {
      Eigen::VectorXd s(2 * n);
      s << random_vec(rng, n, 0.03), random_vec(rng, n, 0.2);
      g = ball::ProbGrid::delta(n, cells, 0.08, 1.0, s);
    } else {
      g = random_box(rng, n, cells);
    }
    const auto unc = delta ? ball::UncertaintyModel::none(n) : random_unc(rng, n);
    const auto out = ball::propagate_prob(g, plate, b, unc, 0.02);
    const double sum = out.grid.sum();
    worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    if (std::fabs(sum - 1.0) > 1e-9) ++bad_sum;
    if (out.grid.empty()) ++empty;
    if (delta) {
      // Euler step of the mean dynamics from the start cell's center
      const auto s = g.state(g.support().front());
      const auto frame = ball::plate_frame_accels(plate);
      const Eigen::VectorXd v = s.tail(n);
      const Eigen::VectorXd a = ball::ball_accel(v, frame, b, 0.0, Eigen::VectorXd::Zero(n + 1), 0.0);
      Eigen::VectorXd e(2 * n);
      e << s.head(n) + 0.02 * v, v + 0.02 * a;
      const auto sup = out.grid.support();
      ++euler_checked;
      if (sup.size() != 1) {
        ++euler_bad;
        continue;
      }
      const auto got = out.grid.state(sup.front());
      for (int d = 0; d < n; ++d) {
        if (std::fabs(got(d) - e(d)) > g.dx() + 1e-12 || std::fabs(got(n + d) - e(n + d)) > g.dv() + 1e-12) {
          ++euler_bad;
          break;
        }
      }
    }
  }
  report(6, "probability grid integrity", bad_sum == 0 && empty == 0 && euler_bad == 0,
         fmt("%d propagations, worst |sum-1| %.2g, %d empty; delta vs Euler %d/%d within a cell", calls,
             worst_sum, empty, euler_checked - euler_bad, euler_checked));
}

double truncated(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0) return 0.0;
  std::normal_distribution<double> nd(0.0, 1.0);
  double z;
  do z = nd(rng);
  while (std::fabs(z) > 3.0);
  return sigma * z;
}

void criterion_7() {
  std::mt19937_64 rng(7);
  const ball::BallParams b;
  const int draws = 10000;
  int inside = 0;
  int done = 0;
  while (done < draws) {
    const int n = done < 8000 ? 1 : 2;
    const int cells = n == 1 ? 81 : 31;
    const auto plate = random_plate(rng, n);
    const auto unc = random_unc(rng, n);
    const auto g = random_box(rng, n, cells);
    const auto out = ball::propagate_prob(g, plate, b, unc, 0.02).grid;
    // support dilated by one cell
    std::vector<char> dil(out.size(), 0);
    const auto sup = out.support();
    for (auto i : sup) {
      const int dims = 2 * n;
      const int span = static_cast<int>(std::pow(3, dims));
      for (int k = 0; k < span; ++k) {
        Eigen::VectorXd s = out.state(i);
        int r = k;
        for (int d = 0; d < dims; ++d) {
          const int off = r % 3 - 1;
          r /= 3;
          s(d) += off * (d < n ? out.dx() : out.dv());
        }
        const long j = out.index_of(s);
        if (j >= 0) dil[j] = 1;
      }
    }
    const auto start = g.support();
    std::vector<double> w;
    for (auto i : start) w.push_back(g.values()[i]);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::uniform_real_distribution<double> half(-0.5, 0.5);
    for (int k = 0; k < 200 && done < draws; ++k, ++done) {
      Eigen::VectorXd s = g.state(start[pick(rng)]);
      for (int d = 0; d < n; ++d) {
        s(d) += half(rng) * g.dx();
        s(n + d) += half(rng) * g.dv();
      }
      Eigen::VectorXd eta_p(n + 1);
      for (int d = 0; d <= n; ++d) eta_p(d) = truncated(rng, std::sqrt(unc.sigma_p(d, d)));
      const auto next = oracle::integrate_step(s, plate, plate, b, truncated(rng, unc.sigma_m), eta_p,
                                               truncated(rng, unc.sigma_mu), 0.02, 10);
      const long j = out.index_of(next);
      if (j >= 0 && dil[j]) ++inside;
    }
  }
  const double frac = static_cast<double>(inside) / draws;
  report(7, "Monte-Carlo envelope", frac >= 0.999,
         fmt("%d/%d exact one-step samples inside the dilated support (%.4f)", inside, draws, frac));
}

void criterion_8() {
  std::mt19937_64 rng(8);
  int matched = 0, kkt_ok = 0;
  double worst_gap = 0.0, worst_kkt = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + rep % 2;
    const auto q = testing::random_qp(rng, n);
    const auto s = qp::solve(q);
    const auto b = testing::brute_force(q, n == 1 ? 1e-3 : 1e-2, 6);
    const double gap = s.feasible && b.feasible ? std::fabs(s.objective - b.objective) : 0.0;
    const double kkt = s.feasible ? qp::kkt_residual(q, s) : 0.0;
    worst_gap = std::max(worst_gap, gap);
    worst_kkt = std::max(worst_kkt, kkt);
    if (s.feasible == b.feasible && gap < 1e-4) ++matched;
    if (kkt < 1e-8) ++kkt_ok;
  }
  report(8, "QP exactness", matched == 100 && kkt_ok == 100,
         fmt("%d/100 match the grid search (worst gap %.2g), %d/100 KKT (worst %.2g)", matched, worst_gap,
             kkt_ok, worst_kkt));
}

struct BallRun {
  bool planned = false;
  bool verified = false;
  double min_margin = 1e9;
  double success = 0.0;
  double mean_abs = 0.0;
  double seconds = 0.0;
  double step_ms = 0.0;
  std::size_t steps = 0;
};

BallRun ball_run(const ball::PlateTrajectory& path, const cli::BallConfig& bc, int rollouts,
                 bool oracle_check = true) {
  BallRun r;
  const auto t0 = Clock::now();
  const auto g0 = bc.initial_grid();
  const auto unc = bc.uncertainty();
  const auto model = bc.energy_model();
  const auto plan = ball::dynamic_control(g0, path, bc.ball, unc, model, bc.control);
  r.planned = plan.result.success;
  r.step_ms = plan.mean_step_ms;
  r.steps = plan.actions.size();
  for (const auto& rec : plan.log) {
    r.min_margin = std::min(r.min_margin, rec.extra.value("h", -1.0));
    if (std::fabs(rec.extra.value("mass", 0.0) - 1.0) > 1e-9) r.min_margin = -1.0;
  }
  if (r.planned) {
    r.verified =
        ball::verify_dynamic_plan(g0, path, plan.actions, bc.ball, unc, model, bc.control).success;
  }
  r.seconds = seconds_since(t0);
  if (r.planned && oracle_check) {
    oracle::BallOracleConfig oc;
    oc.rollouts = rollouts;
    oc.seed = 1;
    const auto sum = oracle::rollout_ball(plan.actions, path, g0, bc.ball, unc, oc);
    r.success = sum.success_rate;
    r.mean_abs = sum.mean_abs;
  }
  return r;
}

BallRun lemniscate_run;

void criterion_9() {
  const cli::BallConfig bc;
  const double dt = bc.control.dt;
  lemniscate_run = ball_run(ball::lemniscate_plate(1, 0.15, 4.0, 4, dt), bc, 20);
  auto pts = traj::read_polyline_csv(fs::path(CIT_SOURCE_DIR) / "assets" / "rice.csv");
  for (auto& p : pts) p = 1e-3 * p;
  const auto rice = ball_run(ball::polyline_plate(1, pts, 0.1, 0.25, dt), bc, 20);
  const auto good = [](const BallRun& r) {
    return r.planned && r.verified && r.min_margin > 0 && r.success == 1.0 && r.mean_abs <= 0.040 &&
           r.seconds < 120;
  };
  const auto line = [](const char* name, const BallRun& r) {
    return fmt("%s %s, %zu steps, min E_max-E %.3g J, contained %.0f%%, mean |x| %.1f mm, %.1f s", name,
               r.planned && r.verified ? "caged" : "FAILED", r.steps, r.min_margin, 100 * r.success,
               1e3 * r.mean_abs, r.seconds);
  };
  report(9, "dynamic end-to-end", good(lemniscate_run) && good(rice),
         line("lemniscate", lemniscate_run) + "; " + line("RICE", rice));
}

// Adjacent pairs out of order along a row.
int inversions(const std::vector<double>& row, bool increasing) {
  int bad = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (increasing ? row[i] < row[i - 1] : row[i] > row[i - 1]) ++bad;
  }
  return bad;
}

void criterion_10() {
  const auto t0 = Clock::now();
  const cli::SweepConfig sc;
  const cli::BallConfig bc;
  const auto cells = oracle::sensitivity_sweep(sc.v0_m_per_s, sc.dv0_m_per_s, sc.beta_max_rad_per_s2,
                                               sc.trials, sc.task, bc.ball, bc.uncertainty(),
                                               bc.energy_model(), bc.control, 7);
  std::map<std::tuple<double, double, double>, double> rate;
  for (const auto& c : cells) rate[{c.v0, c.dv0, c.beta_max}] = c.success_rate;
  int worst = 0;
  std::string table;
  for (double beta : sc.beta_max_rad_per_s2) {
    table += fmt(" b%g:", beta);
    for (double v0 : sc.v0_m_per_s) {
      std::vector<double> row;
      for (double dv : sc.dv0_m_per_s) row.push_back(rate[{v0, dv, beta}]);
      worst = std::max(worst, inversions(row, false));
      for (std::size_t i = 0; i < row.size(); ++i) table += fmt(i ? "/%.1f" : "%.1f", row[i]);
      table += " ";
    }
  }
  for (double v0 : sc.v0_m_per_s) {
    for (double dv : sc.dv0_m_per_s) {
      std::vector<double> col;
      for (double beta : sc.beta_max_rad_per_s2) col.push_back(rate[{v0, dv, beta}]);
      worst = std::max(worst, inversions(col, true));
    }
  }
  ball::ControlParams p25 = bc.control;
  const auto anchor = oracle::sensitivity_sweep({0.8}, {0.05}, {25.0}, 100, sc.task, bc.ball,
                                                bc.uncertainty(), bc.energy_model(), p25, 11);
  const double a = anchor.front().success_rate;
  report(10, "sensitivity sweep", worst <= 1 && a == 1.0,
         fmt("worst row inversions %d, anchor %.2f over 100 trials, %.0f s;", worst, a,
             seconds_since(t0)) + table);
}

void criterion_11() {
  cli::BallConfig bc;
  bc.n = 2;
  bc.cells = 31;
  auto path = ball::lemniscate_plate(2, 0.1, 4.0, 1, bc.control.dt);
  path.positions.resize(251);  // 5 s
  const auto r = ball_run(path, bc, 0, false);
  report(11, "n=2 smoke test", r.planned && r.verified && r.min_margin > 0 && r.seconds < 300,
         fmt("%zu steps at N=31, %s, grids normalized and min E_max-E %.3g J, %.1f s", r.steps,
             r.planned && r.verified ? "caged" : "FAILED", r.min_margin, r.seconds));
}

void criterion_12() {
  const auto p = circle_problem(20, 32);
  const auto t0 = Clock::now();
  const auto plan = push::plan_push(p, p.trajectory.front());
  const double push_ms = 1e3 * seconds_since(t0) / std::max<std::size_t>(1, plan.actions.size());
  const double ball_ms = lemniscate_run.step_ms;
  report(12, "per-step time", push_ms <= 250 && ball_ms > 0 && ball_ms <= 700,
         fmt("push %.2f ms/step at 1 mm cells, ball %.2f ms/step at N=81", push_ms, ball_ms));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all{criterion_1, criterion_2, criterion_3,  criterion_4,
                                               criterion_5, criterion_6, criterion_7,  criterion_8,
                                               criterion_9, criterion_10, criterion_11, criterion_12};
  for (const auto& c : all) c();
  std::printf("%d of %zu criteria failed\n", failures, all.size());
  return failures == 0 ? 0 : 1;
}
