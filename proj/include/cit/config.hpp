#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cit/ball_controller.hpp"
#include "cit/ball_model.hpp"
#include "cit/ball_oracle.hpp"
#include "cit/core.hpp"
#include "cit/push_oracle.hpp"
#include "cit/push_planner.hpp"

namespace cit::cli {

enum class Task { Push, Ball, Sweep };
const char* to_string(Task task);
Task task_from_string(const std::string& name);

/// Reference path. Push tasks read lengths in mm; ball tasks build a plate
/// trajectory in meters (polyline files are always in mm).
struct TrajectoryConfig {
  std::string type;  // circle, lemniscate, polyline, stationary
  double radius_mm = 150.0;
  int steps = 120;
  double amplitude_mm = 100.0;
  int loops = 1;
  std::filesystem::path file;
  double spacing_mm = 5.0;
  double amplitude_m = 0.15;
  double period_s = 4.0;
  double speed_m_per_s = 0.1;
  double smoothing_s = 0.25;
  double duration_s = 5.0;
};

struct PushConfig {
  push::PushProblem problem;
  std::optional<Vec2> start_mm;  // defaults to the first waypoint
  oracle::PushOracleConfig oracle;
  int rollouts = 100;
};

struct BallConfig {
  int n = 1;
  ball::BallParams ball;
  double k_ve = 80.0;
  ball::ControlParams control;
  int cells = 81;
  double half_length_m = 0.08;
  double v_max_m_per_s = 1.0;
  std::vector<double> x_lo_m{-0.01}, x_hi_m{0.01};
  std::vector<double> v_lo_m_per_s{-0.02}, v_hi_m_per_s{0.02};
  double sigma_m = 0.05;
  double sigma_p_m_per_s2 = 0.01;  // per axis, drawn every step
  double sigma_mu_per_s = 0.05;
  int rollouts = 20;
  int substeps = 10;

  ball::UncertaintyModel uncertainty() const;
  ball::EnergyModel energy_model() const { return ball::EnergyModel::from(ball, k_ve); }
  ball::ProbGrid initial_grid() const;
};

struct SweepConfig {
  std::vector<double> v0_m_per_s{0.2, 0.5, 0.8, 0.9};
  std::vector<double> dv0_m_per_s{0.05, 0.1, 0.15, 0.2};
  std::vector<double> beta_max_rad_per_s2{5.0, 10.0, 25.0};
  int trials = 10;
  oracle::CatchTask task;
};

struct RunConfig {
  Task task = Task::Push;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  bool render = false;
  TrajectoryConfig trajectory;
  PushConfig push;
  BallConfig ball;
  SweepConfig sweep;
  /// Directory that relative file paths are resolved against.
  std::filesystem::path base_dir = ".";
};

RunConfig default_config(Task task);

/// Overlays a JSON document on the defaults for `task`. Unknown keys, wrong
/// types and out-of-range values throw BadConfig. A "task" entry, if given,
/// must agree with `task`.
RunConfig parse_config(const nlohmann::json& doc, Task task,
                       const std::filesystem::path& base_dir = ".");

/// Reads and parses a config file; relative paths inside resolve against
/// the file's directory.
RunConfig load_config(const std::filesystem::path& path, Task task);

/// Range checks that do not touch the file system.
void validate(const RunConfig& cfg);

}  // namespace cit::cli
