#include "cit/run_log.hpp"

#include <fstream>

namespace cit {

nlohmann::json action_to_json(const Action& action) {
  return std::visit(
      [](const auto& a) -> nlohmann::json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NoAction>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, PushAngle>) {
          return {{"type", "push"}, {"theta", a.theta}, {"k", a.k}};
        } else {
          return {{"type", "tilt_rate"}, {"dtheta", a.rate}};
        }
      },
      action);
}

nlohmann::json RunLogRecord::to_json() const {
  nlohmann::json row;
  row["t"] = t;
  row["action"] = action ? action_to_json(*action) : nlohmann::json(nullptr);
  row["contained"] = contained;
  row["pss_cells"] = pss_cells;
  row["cage_center"] = {cage_center.x, cage_center.y};
  for (const auto& [key, value] : extra.items()) row[key] = value;
  return row;
}

void write_jsonl(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& rec : log) out << rec.to_json().dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace cit
