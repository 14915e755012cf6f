#include "cit/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "cit/render.hpp"
#include "cit/run_log.hpp"
#include "cit/trajectory.hpp"

namespace cit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const RunConfig& cfg, const fs::path& p) {
  return p.is_absolute() ? p : cfg.base_dir / p;
}

std::vector<Vec2> load_polyline(const RunConfig& cfg) {
  if (cfg.trajectory.file.empty()) throw Error(ErrorCode::BadSpec, "polyline needs a file");
  const auto pts = traj::read_polyline_csv(resolve(cfg, cfg.trajectory.file));
  if (pts.size() < 2) throw Error(ErrorCode::BadSpec, "polyline needs at least 2 points");
  return pts;
}

std::vector<Vec2> push_waypoints(const RunConfig& cfg) {
  const auto& t = cfg.trajectory;
  std::vector<Vec2> w;
  if (t.type == "circle") {
    w = traj::gen_trajectory(traj::CircleSpec{t.radius_mm, t.steps, {}});
  } else if (t.type == "lemniscate") {
    w = traj::gen_trajectory(traj::LemniscateSpec{t.amplitude_mm, t.steps, t.loops});
  } else {
    w = traj::resample_polyline(load_polyline(cfg), t.spacing_mm);
  }
  if (w.size() < 2) throw Error(ErrorCode::BadSpec, "trajectory needs at least 2 waypoints");
  return w;
}

ball::PlateTrajectory plate_path(const RunConfig& cfg) {
  const auto& t = cfg.trajectory;
  const int n = cfg.ball.n;
  const double dt = cfg.ball.control.dt;
  if (t.type == "lemniscate") return ball::lemniscate_plate(n, t.amplitude_m, t.period_s, t.loops, dt);
  if (t.type == "stationary") return ball::stationary_plate(n, t.duration_s, dt);
  auto pts = load_polyline(cfg);
  for (auto& p : pts) p = 1e-3 * p;  // files are in mm
  return ball::polyline_plate(n, pts, t.speed_m_per_s, t.smoothing_s, dt);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json failure_json(const VerificationResult& r) {
  json j;
  j["success"] = r.success;
  j["failure_step"] = r.failure_step ? json(*r.failure_step) : json(nullptr);
  j["failure_reason"] = r.failure_reason ? json(to_string(*r.failure_reason)) : json(nullptr);
  return j;
}

fs::path frame_path(const fs::path& dir, std::size_t t) {
  char name[32];
  std::snprintf(name, sizeof name, "%04zu.pgm", t);
  return dir / name;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int run_push(const RunConfig& cfg, std::ostream& out, const RunOptions& opts) {
  push::PushProblem problem = cfg.push.problem;
  problem.trajectory = push_waypoints(cfg);
  const Vec2 start = cfg.push.start_mm.value_or(problem.trajectory.front());
  try {
    problem.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadSpec, e.what());
  }
  if (distance(start, problem.trajectory.front()) > problem.cage_size) {
    throw Error(ErrorCode::BadSpec, "push.start_mm lies outside the first cage");
  }

  make_dir(cfg.out);
  const auto t0 = std::chrono::steady_clock::now();
  const push::PushPlan plan = push::plan_push(problem, start);
  const double plan_ms = ms_since(t0);
  const VerificationResult check = push::verify_push_plan(problem, start, plan.actions);
  const bool ok = plan.result.success && check.success;

  json pj = failure_json(plan.result);
  pj["task"] = "push";
  pj["seed"] = cfg.seed;
  pj["verified"] = check.success;
  pj["cage_size_mm"] = problem.cage_size;
  pj["candidates"] = problem.num_candidates;
  pj["waypoints"] = problem.trajectory.size();
  json actions = json::array();
  int pushes = 0;
  for (std::size_t t = 0; t < plan.actions.size(); ++t) {
    const auto* p = std::get_if<PushAngle>(&plan.actions[t]);
    actions.push_back({{"t", t},
                       {"theta", p ? json(p->theta) : json(nullptr)},
                       {"k", p ? json(p->k) : json(nullptr)}});
    pushes += p ? 1 : 0;
  }
  pj["pushes"] = pushes;
  pj["actions"] = actions;
  write_json(cfg.out / "plan.json", pj);
  write_jsonl(plan.log, cfg.out / "runlog.jsonl");
  out << "push: plan " << (ok ? "verified" : "FAILED") << ", " << plan.actions.size() << " steps, "
      << pushes << " pushes, " << plan_ms / std::max<std::size_t>(1, plan.actions.size())
      << " ms/step\n";

  if (cfg.render) {
    const fs::path dir = cfg.out / "frames";
    make_dir(dir);
    for (std::size_t t = 0; t < plan.pss_history.size(); ++t) {
      std::optional<push::PusherPose> pose;
      if (t < plan.actions.size()) {
        if (const auto* p = std::get_if<PushAngle>(&plan.actions[t])) {
          pose = push::pusher_pose(problem.trajectory[t + 1], problem.outer_radius(), p->theta,
                                   0.5 * problem.pusher_length);
        }
      }
      const CageCircle cage{problem.trajectory[std::min(t, problem.trajectory.size() - 1)],
                            problem.cage_size};
      render::write_pgm(render::render_push_frame(plan.pss_history[t], problem.object_radius,
                                                  cage, pose),
                        frame_path(dir, t));
    }
  }
  if (!ok) return kExitPlanFailed;
  if (!opts.oracle) return kExitOk;

  auto csv = open_out(cfg.out / "oracle.csv");
  csv << "rollout,seed,max_error_mm,mean_error_mm,contained\n";
  bool all = true;
  double worst = 0.0, mean = 0.0;
  oracle::PushRollout first;
  for (int i = 0; i < cfg.push.rollouts; ++i) {
    oracle::PushOracleConfig oc = cfg.push.oracle;
    oc.seed = cfg.seed + static_cast<std::uint64_t>(i);
    const auto r = oracle::rollout_push_plan(plan.actions, problem, start, oc);
    const bool in = r.max_error <= problem.cage_size;
    all = all && in;
    worst = std::max(worst, r.max_error);
    mean += r.mean_error / cfg.push.rollouts;
    csv << i << ',' << oc.seed << ',' << r.max_error << ',' << r.mean_error << ',' << in << '\n';
    if (i == 0) first = r;
  }
  if (!first.positions.empty()) {
    auto tr = open_out(cfg.out / "trace.csv");
    tr << "t,x,y\n";
    for (std::size_t t = 0; t < first.positions.size(); ++t) {
      tr << t << ',' << first.positions[t].x << ',' << first.positions[t].y << '\n';
    }
  }
  out << "push: " << cfg.push.rollouts << " oracle rollouts, worst error " << worst
      << " mm, mean " << mean << " mm\n";
  return all ? kExitOk : kExitOracleFailed;
}

int run_ball(const RunConfig& cfg, std::ostream& out, const RunOptions& opts) {
  const auto& bc = cfg.ball;
  const ball::PlateTrajectory path = plate_path(cfg);
  if (path.positions.size() < 2) throw Error(ErrorCode::BadSpec, "plate trajectory is too short");
  const ball::ProbGrid grid0 = bc.initial_grid();
  if (grid0.empty()) throw Error(ErrorCode::BadSpec, "start box holds no grid cell");
  const auto unc = bc.uncertainty();
  const auto model = bc.energy_model();

  make_dir(cfg.out);
  const ball::DynamicPlan plan =
      ball::dynamic_control(grid0, path, bc.ball, unc, model, bc.control);
  bool ok = plan.result.success;
  bool verified = false;
  if (ok) {
    verified = ball::verify_dynamic_plan(grid0, path, plan.actions, bc.ball, unc, model,
                                         bc.control)
                   .success;
    ok = verified;
  }

  json pj = failure_json(plan.result);
  pj["task"] = "ball";
  pj["seed"] = cfg.seed;
  pj["verified"] = verified;
  pj["n"] = bc.n;
  pj["dt_s"] = bc.control.dt;
  pj["steps"] = path.positions.size() - 1;
  double min_h = std::numeric_limits<double>::infinity();
  for (const auto& r : plan.log) {
    if (r.extra.contains("h")) min_h = std::min(min_h, r.extra["h"].get<double>());
  }
  pj["min_margin_J"] = std::isfinite(min_h) ? json(min_h) : json(nullptr);
  json actions = json::array();
  for (const auto& a : plan.actions) actions.push_back(action_to_json(a));
  pj["actions"] = actions;
  write_json(cfg.out / "plan.json", pj);
  write_jsonl(plan.log, cfg.out / "runlog.jsonl");
  out << "ball: plan " << (ok ? "verified" : "FAILED") << ", " << plan.actions.size() << " of "
      << path.positions.size() - 1 << " steps, " << plan.mean_step_ms << " ms/step\n";

  if (cfg.render) {
    // Replays the propagation instead of holding every grid in memory.
    const fs::path dir = cfg.out / "frames";
    make_dir(dir);
    const auto acc = path.accelerations();
    const auto thetas = ball::integrate_tilt(bc.n, plan.actions, bc.control.dt);
    auto plate = [&](std::size_t k, std::size_t a) {
      ball::PlateState p;
      p.n = bc.n;
      p.half_length = bc.half_length_m;
      p.theta = thetas[k];
      p.accel = acc[a];
      return p;
    };
    ball::ProbGrid g = grid0;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      render::write_pgm(render::render_prob_frame(g, plate(t, t), model), frame_path(dir, t));
      if (t + 1 < thetas.size()) {
        g = ball::propagate_prob(g, plate(t + 1, t), bc.ball, unc, bc.control.dt).grid;
        if (g.empty()) break;
      }
    }
  }
  if (!ok) return kExitPlanFailed;
  if (!opts.oracle) return kExitOk;

  oracle::BallOracleConfig oc;
  oc.rollouts = bc.rollouts;
  oc.substeps = bc.substeps;
  oc.seed = cfg.seed;
  oc.keep_traces = true;
  const auto sum = oracle::rollout_ball(plan.actions, path, grid0, bc.ball, unc, oc);
  auto csv = open_out(cfg.out / "oracle.csv");
  csv << "rollout,max_abs_m,mean_abs_m,contained\n";
  for (std::size_t i = 0; i < sum.rollouts.size(); ++i) {
    const auto& r = sum.rollouts[i];
    csv << i << ',' << r.max_abs << ',' << r.mean_abs << ',' << r.contained << '\n';
  }
  if (!sum.rollouts.empty()) {
    oracle::write_trace_csv((cfg.out / "trace.csv").string(), sum.rollouts.front(), bc.control.dt);
  }
  out << "ball: " << bc.rollouts << " oracle rollouts, success " << sum.success_rate
      << ", mean |x| " << sum.mean_abs << " m, worst " << sum.worst_abs << " m\n";
  return sum.success_rate >= 1.0 ? kExitOk : kExitOracleFailed;
}

int run_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto& bc = cfg.ball;
  oracle::CatchTask task = cfg.sweep.task;
  task.half_length = bc.half_length_m;
  make_dir(cfg.out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cells = oracle::sensitivity_sweep(
      cfg.sweep.v0_m_per_s, cfg.sweep.dv0_m_per_s, cfg.sweep.beta_max_rad_per_s2, cfg.sweep.trials,
      task, bc.ball, bc.uncertainty(), bc.energy_model(), bc.control, cfg.seed);
  oracle::write_sweep_csv((cfg.out / "sweep.csv").string(), cells);
  json pj;
  pj["task"] = "sweep";
  pj["seed"] = cfg.seed;
  pj["trials"] = cfg.sweep.trials;
  json rows = json::array();
  for (const auto& c : cells) {
    rows.push_back({{"v0", c.v0}, {"dv0", c.dv0}, {"beta_max", c.beta_max},
                    {"success_rate", c.success_rate}});
  }
  pj["cells"] = rows;
  write_json(cfg.out / "plan.json", pj);
  out << "sweep: " << cells.size() << " cells x " << cfg.sweep.trials << " trials in "
      << ms_since(t0) / 1000.0 << " s\n";
  return kExitOk;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, const RunOptions& opts) {
  validate(cfg);
  switch (cfg.task) {
    case Task::Push: return run_push(cfg, out, opts);
    case Task::Ball: return run_ball(cfg, out, opts);
    case Task::Sweep: return run_sweep(cfg, out);
  }
  return kExitBadInput;
}

}  // namespace cit::cli
