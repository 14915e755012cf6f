// cit: plan, verify and oracle-check caging-in-time tasks.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "cit/config.hpp"
#include "cit/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::int64_t seed = -1;
  std::string out;
  bool render = false;
  int trials = -1;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "random seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", f.out, "output directory");
  sub->add_flag("--render", f.render, "write one PGM frame per step");
  sub->add_option("--trials", f.trials, "oracle rollouts, or trials per sweep cell")
      ->check(CLI::PositiveNumber);
}

// The render subcommand takes its task from the config file.
cit::cli::Task task_in_file(const std::string& path) {
  if (path.empty()) return cit::cli::Task::Push;
  std::ifstream f(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw cit::Error(cit::ErrorCode::BadConfig, path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("task") && doc["task"].is_string()) {
    return cit::cli::task_from_string(doc["task"].get<std::string>());
  }
  return cit::cli::Task::Push;
}

int dispatch(cit::cli::Task task, const Flags& f, bool render_only) {
  using namespace cit::cli;
  RunConfig cfg = f.config.empty() ? default_config(task) : load_config(f.config, task);
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) cfg.out = f.out;
  if (f.render || render_only) cfg.render = true;
  if (f.trials > 0) {
    cfg.push.rollouts = f.trials;
    cfg.ball.rollouts = f.trials;
    cfg.sweep.trials = f.trials;
  }
  RunOptions opts;
  opts.oracle = !render_only;
  return run(cfg, std::cout, opts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caging-in-time planner for pushing and ball-on-plate tasks"};
  app.require_subcommand(1);
  Flags push_f, ball_f, sweep_f, render_f;
  auto* push = app.add_subcommand("push", "plan a pushing task and check it with the oracle");
  auto* ballc = app.add_subcommand("ball", "plan plate tilts for a rolling ball and roll it out");
  auto* sweep = app.add_subcommand("sweep", "catching success over speed, spread and slew");
  auto* render = app.add_subcommand("render", "plan the config's task and write frames only");
  add_flags(push, push_f);
  add_flags(ballc, ball_f);
  add_flags(sweep, sweep_f);
  add_flags(render, render_f);
  CLI11_PARSE(app, argc, argv);

  try {
    using cit::cli::Task;
    if (*push) return dispatch(Task::Push, push_f, false);
    if (*ballc) return dispatch(Task::Ball, ball_f, false);
    if (*sweep) return dispatch(Task::Sweep, sweep_f, false);
    return dispatch(task_in_file(render_f.config), render_f, true);
  } catch (const cit::Error& e) {
    std::cerr << "error (" << cit::to_string(e.code()) << "): " << e.what() << '\n';
    return cit::cli::kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cit::cli::kExitBadInput;
  }
}
