#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cit/core.hpp"

namespace cit {

nlohmann::json action_to_json(const Action& action);

/// One audit-trail row per timestep.
struct RunLogRecord {
  int t = 0;
  std::optional<Action> action;  // null when no action is taken
  bool contained = true;
  std::size_t pss_cells = 0;
  Vec2 cage_center{};
  /// Task-specific fields (energies, entropy, lost mass, ...).
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
};

using RunLog = std::vector<RunLogRecord>;

void write_jsonl(const RunLog& log, const std::filesystem::path& path);

}  // namespace cit
