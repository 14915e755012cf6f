#include "cit/config.hpp"

#include <fstream>
#include <set>

namespace cit::cli {

using nlohmann::json;

const char* to_string(Task task) {
  switch (task) {
    case Task::Push: return "push";
    case Task::Ball: return "ball";
    case Task::Sweep: return "sweep";
  }
  return "?";
}

Task task_from_string(const std::string& name) {
  if (name == "push") return Task::Push;
  if (name == "ball") return Task::Ball;
  if (name == "sweep") return Task::Sweep;
  throw Error(ErrorCode::BadConfig, "unknown task '" + name + "'");
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::BadConfig, where + ": " + what);
}

// Reads keys off one JSON object and remembers which were consumed, so
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) bad(where_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(where_ + "." + key, "wrong type");
    }
  }

  void get(const char* key, bool& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_boolean()) bad(where_ + "." + key, "expected true or false");
    out = j_.at(key).get<bool>();
  }

  void get(const char* key, int& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_number_integer()) bad(where_ + "." + key, "expected an integer");
    out = j_.at(key).get<int>();
  }

  // A number or a list of numbers.
  void get_list(const char* key, std::vector<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array()) bad(where_ + "." + key, "expected a number or a list");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) bad(where_ + "." + key, "list entries must be numbers");
      out.push_back(e.get<double>());
    }
  }

  void get_point(const char* key, std::optional<Vec2>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      bad(where_ + "." + key, "expected [x, y]");
    }
    out = Vec2{v[0].get<double>(), v[1].get<double>()};
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where_ + "." + key);
  }

  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) bad(where_, "unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_trajectory(Section s, TrajectoryConfig& t) {
  s.get("type", t.type);
  s.get("radius_mm", t.radius_mm);
  s.get("steps", t.steps);
  s.get("amplitude_mm", t.amplitude_mm);
  s.get("loops", t.loops);
  std::string file;
  s.get("file", file);
  if (!file.empty()) t.file = file;
  s.get("spacing_mm", t.spacing_mm);
  s.get("amplitude_m", t.amplitude_m);
  s.get("period_s", t.period_s);
  s.get("speed_m_per_s", t.speed_m_per_s);
  s.get("smoothing_s", t.smoothing_s);
  s.get("duration_s", t.duration_s);
  s.done();
}

void read_push(Section s, PushConfig& c) {
  auto& p = c.problem;
  s.get("object_radius_mm", p.object_radius);
  s.get("cage_size_mm", p.cage_size);
  s.get("candidates", p.num_candidates);
  s.get("d_push_mm", p.d_push);
  s.get("pusher_length_mm", p.pusher_length);
  s.get("resolution_mm", p.resolution);
  s.get("lambda1", p.lambda1);
  s.get("lambda2", p.lambda2);
  s.get("top_candidates", p.top_candidates);
  s.get("penetration_tolerance_mm", p.penetration_tolerance);
  s.get("lookahead", p.lookahead);
  s.get("max_backtracks", p.max_backtracks);
  s.get_point("start_mm", c.start_mm);
  s.get("rollouts", c.rollouts);
  s.get("c_min_mm", c.oracle.c_min);
  s.get("c_max_mm", c.oracle.c_max);
  s.get("micro_step_mm", c.oracle.micro_step);
  s.done();
  c.oracle.object_radius = p.object_radius;
}

void read_ball(Section s, BallConfig& c) {
  s.get("n", c.n);
  s.get("mass_kg", c.ball.mass);
  s.get("radius_m", c.ball.radius);
  s.get("inertia_kg_m2", c.ball.inertia);
  s.get("rolling_friction_per_s", c.ball.rolling_friction);
  s.get("k_ve", c.k_ve);
  s.get("cells", c.cells);
  s.get("half_length_m", c.half_length_m);
  s.get("v_max_m_per_s", c.v_max_m_per_s);
  s.get_list("x_lo_m", c.x_lo_m);
  s.get_list("x_hi_m", c.x_hi_m);
  s.get_list("v_lo_m_per_s", c.v_lo_m_per_s);
  s.get_list("v_hi_m_per_s", c.v_hi_m_per_s);
  s.get("sigma_m", c.sigma_m);
  s.get("sigma_p_m_per_s2", c.sigma_p_m_per_s2);
  s.get("sigma_mu_per_s", c.sigma_mu_per_s);
  s.get("rollouts", c.rollouts);
  s.get("substeps", c.substeps);
  auto& k = c.control;
  s.get("gamma", k.gamma);
  s.get("c", k.c);
  s.get("lambda", k.lambda);
  s.get("k_s", k.k_s);
  s.get("dtheta_min_rad_per_s", k.dtheta_min);
  s.get("dtheta_max_rad_per_s", k.dtheta_max);
  s.get("beta_max_rad_per_s2", k.beta_max);
  s.get("dt_s", k.dt);
  s.get("probe_rad_per_s", k.probe);
  s.get("preview", k.preview);
  s.done();
}

void read_sweep(Section s, SweepConfig& c) {
  s.get_list("v0_m_per_s", c.v0_m_per_s);
  s.get_list("dv0_m_per_s", c.dv0_m_per_s);
  s.get_list("beta_max_rad_per_s2", c.beta_max_rad_per_s2);
  s.get("trials", c.trials);
  s.get("x0_m", c.task.x0);
  s.get("x0_spread_m", c.task.x0_spread);
  s.get("pulse_s", c.task.pulse);
  s.get("settle_s", c.task.settle);
  s.get("rest_s", c.task.rest);
  s.get("cells", c.task.cells);
  s.get("v_max_m_per_s", c.task.v_max);
  s.done();
}

// Scalar bounds widen to every axis.
std::vector<double> widen(const std::vector<double>& v, int n, const char* name) {
  if (static_cast<int>(v.size()) == n) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(n), v.front());
  bad(std::string("ball.") + name, "needs 1 or n entries");
}

}  // namespace

ball::UncertaintyModel BallConfig::uncertainty() const {
  ball::UncertaintyModel u = ball::UncertaintyModel::none(n);
  u.sigma_m = sigma_m;
  u.sigma_mu = sigma_mu_per_s;
  u.sigma_p = Eigen::MatrixXd::Identity(n + 1, n + 1) * sigma_p_m_per_s2 * sigma_p_m_per_s2;
  return u;
}

ball::ProbGrid BallConfig::initial_grid() const {
  const auto xl = widen(x_lo_m, n, "x_lo_m");
  const auto xh = widen(x_hi_m, n, "x_hi_m");
  const auto vl = widen(v_lo_m_per_s, n, "v_lo_m_per_s");
  const auto vh = widen(v_hi_m_per_s, n, "v_hi_m_per_s");
  Eigen::VectorXd lo(2 * n), hi(2 * n);
  for (int d = 0; d < n; ++d) {
    lo(d) = xl[d];
    hi(d) = xh[d];
    lo(n + d) = vl[d];
    hi(n + d) = vh[d];
  }
  return ball::ProbGrid::uniform_box(n, cells, half_length_m, v_max_m_per_s, lo, hi);
}

RunConfig default_config(Task task) {
  RunConfig c;
  c.task = task;
  switch (task) {
    case Task::Push:
      c.trajectory.type = "circle";
      c.trajectory.steps = 200;
      break;
    case Task::Ball:
      c.trajectory.type = "lemniscate";
      c.trajectory.loops = 4;
      break;
    case Task::Sweep:
      c.trajectory.type = "catch";
      break;
  }
  return c;
}

RunConfig parse_config(const json& doc, Task task, const std::filesystem::path& base_dir) {
  RunConfig c = default_config(task);
  c.base_dir = base_dir;
  Section top(doc, "config");
  std::string name;
  top.get("task", name);
  if (!name.empty() && task_from_string(name) != task) {
    bad("config.task", "file is for '" + name + "', not '" + to_string(task) + "'");
  }
  std::int64_t seed = 1;
  top.get("seed", seed);
  if (seed < 0) bad("config.seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  std::string out;
  top.get("out", out);
  if (!out.empty()) c.out = out;
  top.get("render", c.render);
  if (top.has("trajectory")) {
    // A trajectory type named in the file replaces the default wholesale.
    TrajectoryConfig t;
    t.type = c.trajectory.type;
    read_trajectory(top.sub("trajectory"), t);
    c.trajectory = t;
  }
  if (top.has("push")) read_push(top.sub("push"), c.push);
  if (top.has("ball")) read_ball(top.sub("ball"), c.ball);
  if (top.has("sweep")) read_sweep(top.sub("sweep"), c.sweep);
  top.done();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, Task task) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
  return parse_config(doc, task, path.parent_path().empty() ? "." : path.parent_path());
}

void validate(const RunConfig& c) {
  const auto& t = c.trajectory;
  if (c.task == Task::Push) {
    if (t.type != "circle" && t.type != "lemniscate" && t.type != "polyline") {
      bad("trajectory.type", "push takes circle, lemniscate or polyline");
    }
    if (t.type != "polyline" && t.steps < 2) bad("trajectory.steps", "need at least 2");
    if (t.type == "circle" && !(t.radius_mm > 0)) bad("trajectory.radius_mm", "must be positive");
    if (t.type == "lemniscate" && !(t.amplitude_mm > 0)) {
      bad("trajectory.amplitude_mm", "must be positive");
    }
    if (t.type == "polyline" && !(t.spacing_mm > 0)) bad("trajectory.spacing_mm", "must be positive");
    if (c.push.rollouts < 0) bad("push.rollouts", "must be nonnegative");
    if (!(c.push.oracle.micro_step > 0)) bad("push.micro_step_mm", "must be positive");
    if (!(c.push.oracle.c_min >= 0 && c.push.oracle.c_min <= c.push.oracle.c_max)) {
      bad("push", "need 0 <= c_min_mm <= c_max_mm");
    }
  }
  if (c.task == Task::Ball) {
    if (t.type != "lemniscate" && t.type != "polyline" && t.type != "stationary") {
      bad("trajectory.type", "ball takes lemniscate, polyline or stationary");
    }
    if (t.type == "lemniscate" && !(t.amplitude_m > 0 && t.period_s > 0)) {
      bad("trajectory", "amplitude_m and period_s must be positive");
    }
    if (t.type == "polyline" && !(t.speed_m_per_s > 0 && t.smoothing_s >= 0)) {
      bad("trajectory", "speed_m_per_s must be positive and smoothing_s nonnegative");
    }
    if (t.type == "stationary" && !(t.duration_s > 0)) bad("trajectory.duration_s", "must be positive");
  }
  if (c.task != Task::Push) {
    if (c.ball.n != 1 && c.ball.n != 2) bad("ball.n", "must be 1 or 2");
    if (c.task == Task::Sweep && c.ball.n != 1) bad("ball.n", "the catching sweep is planar (n = 1)");
    if (c.ball.cells < 3) bad("ball.cells", "need at least 3");
    if (!(c.ball.half_length_m > 0 && c.ball.v_max_m_per_s > 0)) {
      bad("ball", "half_length_m and v_max_m_per_s must be positive");
    }
    if (!(c.ball.sigma_m >= 0 && c.ball.sigma_p_m_per_s2 >= 0 && c.ball.sigma_mu_per_s >= 0)) {
      bad("ball", "noise levels must be nonnegative");
    }
    if (c.ball.rollouts < 0) bad("ball.rollouts", "must be nonnegative");
    if (c.ball.substeps < 10) bad("ball.substeps", "need at least 10");
    if (!(c.ball.k_ve >= 0)) bad("ball.k_ve", "must be nonnegative");
    for (const auto* v : {&c.ball.x_lo_m, &c.ball.x_hi_m, &c.ball.v_lo_m_per_s,
                          &c.ball.v_hi_m_per_s}) {
      if (v->size() != 1 && static_cast<int>(v->size()) != c.ball.n) {
        bad("ball", "start bounds need 1 or n entries");
      }
    }
    if (t.loops < 1) bad("trajectory.loops", "need at least 1");
    try {
      c.ball.ball.validate();
      c.ball.control.validate();
    } catch (const Error& e) {
      bad("ball", e.what());
    }
  }
  if (c.task == Task::Sweep) {
    const auto& s = c.sweep;
    if (c.render) bad("config.render", "sweeps have no frames to render");
    if (s.v0_m_per_s.empty() || s.dv0_m_per_s.empty() || s.beta_max_rad_per_s2.empty()) {
      bad("sweep", "grids must be nonempty");
    }
    if (s.trials < 1) bad("sweep.trials", "must be positive");
    for (const double b : s.beta_max_rad_per_s2) {
      if (!(b >= 0)) bad("sweep.beta_max_rad_per_s2", "must be nonnegative");
    }
    for (const double d : s.dv0_m_per_s) {
      if (!(d >= 0)) bad("sweep.dv0_m_per_s", "must be nonnegative");
    }
    if (!(s.task.pulse > 0 && s.task.settle > 0 && s.task.rest >= 0)) {
      bad("sweep", "pulse_s and settle_s must be positive, rest_s nonnegative");
    }
  }
  if (c.task == Task::Push) {
    try {
      push::PushProblem p = c.push.problem;
      p.trajectory = {Vec2{}, Vec2{1e-3, 0.0}};
      p.validate();
    } catch (const Error& e) {
      bad("push", e.what());
    }
  }
}

}  // namespace cit::cli
