#include "cit/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cit::traj {

std::vector<Vec2> circle(const CircleSpec& spec) {
  if (spec.steps < 2 || !(spec.radius > 0.0)) {
    throw Error(ErrorCode::BadSpec, "circle needs radius > 0 and steps >= 2");
  }
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(spec.steps));
  for (int i = 0; i < spec.steps; ++i) {
    const double s = 2.0 * std::numbers::pi * i / spec.steps;
    out.push_back(spec.center + spec.radius * unit_from_angle(s));
  }
  return out;
}

std::vector<Vec2> lemniscate(const LemniscateSpec& spec) {
  if (spec.steps < 2 || spec.loops < 1 || !(spec.amplitude > 0.0)) {
    throw Error(ErrorCode::BadSpec, "lemniscate needs amplitude > 0, steps >= 2, loops >= 1");
  }
  const int total = spec.steps * spec.loops;
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(total) + 1);
  for (int i = 0; i <= total; ++i) {
    const double s = 2.0 * std::numbers::pi * i / spec.steps;
    out.push_back({spec.amplitude * std::sin(s), spec.amplitude * std::sin(s) * std::cos(s)});
  }
  return out;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& points, double spacing) {
  if (points.size() < 2 || !(spacing > 0.0)) {
    throw Error(ErrorCode::BadSpec, "polyline needs at least two points and spacing > 0");
  }
  std::vector<double> cum(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    cum[i] = cum[i - 1] + distance(points[i], points[i - 1]);
  }
  const double length = cum.back();
  if (!(length > 0.0)) throw Error(ErrorCode::BadSpec, "polyline has zero length");
  // Round the segment count so every gap is as close to `spacing` as possible.
  const auto segments = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(length / spacing)));
  const double step = length / static_cast<double>(segments);

  std::vector<Vec2> out;
  out.reserve(segments + 1);
  std::size_t seg = 1;
  for (std::size_t i = 0; i <= segments; ++i) {
    const double s = std::min(length, step * static_cast<double>(i));
    while (seg + 1 < points.size() && cum[seg] < s) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double u = span > 0.0 ? (s - cum[seg - 1]) / span : 0.0;
    out.push_back(points[seg - 1] + u * (points[seg] - points[seg - 1]));
  }
  return out;
}

std::vector<Vec2> read_polyline_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open trajectory file " + path.string());
  std::vector<Vec2> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    Vec2 p;
    if (!(row >> p.x >> p.y)) continue;  // header or malformed row
    pts.push_back(p);
  }
  if (pts.size() < 2) throw Error(ErrorCode::BadSpec, "trajectory file " + path.string() + " has fewer than two points");
  return pts;
}

std::vector<Vec2> gen_trajectory(const TrajectorySpec& spec) {
  return std::visit(
      [](const auto& s) -> std::vector<Vec2> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleSpec>) {
          return circle(s);
        } else if constexpr (std::is_same_v<T, LemniscateSpec>) {
          return lemniscate(s);
        } else {
          const auto pts = s.file.empty() ? s.points : read_polyline_csv(s.file);
          return resample_polyline(pts, s.spacing);
        }
      },
      spec);
}

}  // namespace cit::traj
