#pragma once

#include <filesystem>
#include <variant>
#include <vector>

#include "cit/core.hpp"

namespace cit::traj {

struct CircleSpec {
  double radius = 150.0;
  int steps = 120;
  Vec2 center{};
};

struct LemniscateSpec {
  double amplitude = 100.0;
  int steps = 200;  // samples per loop
  int loops = 1;
};

struct PolylineSpec {
  std::filesystem::path file;
  std::vector<Vec2> points;  // used when no file is given
  double spacing = 5.0;
};

using TrajectorySpec = std::variant<CircleSpec, LemniscateSpec, PolylineSpec>;

/// `steps` points on a circle; the closing point is one spacing from the first.
std::vector<Vec2> circle(const CircleSpec& spec);

/// (A sin s, A sin s cos s) for s over [0, 2 pi loops], both ends included.
std::vector<Vec2> lemniscate(const LemniscateSpec& spec);

/// Uniform arc-length resampling; keeps both endpoints of the input.
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& points, double spacing);

/// Reads "x,y" rows (a header row and '#' comments are skipped).
std::vector<Vec2> read_polyline_csv(const std::filesystem::path& path);

std::vector<Vec2> gen_trajectory(const TrajectorySpec& spec);

}  // namespace cit::traj
