#include "cit/core.hpp"

#include <algorithm>
#include <numeric>

namespace cit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInitialPSS: return "EmptyInitialPSS";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::WaypointSpacingTooLarge: return "WaypointSpacingTooLarge";
    case ErrorCode::AllMassLost: return "AllMassLost";
    case ErrorCode::NoContact: return "NoContact";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

const char* to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::InfeasibleAction: return "InfeasibleAction";
    case FailureReason::EscapedCage: return "EscapedCage";
  }
  return "Unknown";
}

Vec2 snap_to_lattice(Vec2 p, double resolution) {
  return {std::round(p.x / resolution) * resolution,
          std::round(p.y / resolution) * resolution};
}

PSSGrid::PSSGrid(int width, int height, double resolution, Vec2 frame_center)
    : width_(width), height_(height), resolution_(resolution) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::BadConfig, "grid dimensions must be positive");
  }
  if (!(resolution > 0.0)) {
    throw Error(ErrorCode::BadConfig, "grid resolution must be positive");
  }
  if (!std::isfinite(frame_center.x) || !std::isfinite(frame_center.y)) {
    throw Error(ErrorCode::BadConfig, "grid frame center must be finite");
  }
  frame_center_ = snap_to_lattice(frame_center, resolution);
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void PSSGrid::set(Cell c, bool occupied) {
  if (!in_bounds(c)) {
    if (occupied) ++clipped_;
    return;
  }
  cells_[index(c)] = occupied ? 1 : 0;
}

void PSSGrid::mark(Vec2 world) { set(nearest_cell(world), true); }

Vec2 PSSGrid::cell_center(Cell c) const {
  return {frame_center_.x + (c.col - width_ / 2) * resolution_,
          frame_center_.y + (c.row - height_ / 2) * resolution_};
}

Cell PSSGrid::nearest_cell(Vec2 world) const {
  const Vec2 d = world - frame_center_;
  return {static_cast<int>(std::lround(d.x / resolution_)) + width_ / 2,
          static_cast<int>(std::lround(d.y / resolution_)) + height_ / 2};
}

std::size_t PSSGrid::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::vector<Cell> PSSGrid::occupied() const {
  std::vector<Cell> out;
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      if (cells_[index({col, row})] != 0) out.push_back({col, row});
    }
  }
  return out;
}

PSSGrid PSSGrid::recentered(Vec2 new_center) const {
  PSSGrid out(width_, height_, resolution_, new_center);
  out.clipped_ = clipped_;
  const long dc = std::lround((frame_center_.x - out.frame_center_.x) / resolution_);
  const long dr = std::lround((frame_center_.y - out.frame_center_.y) / resolution_);
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      if (cells_[index({col, row})] == 0) continue;
      out.set({static_cast<int>(col + dc), static_cast<int>(row + dr)}, true);
    }
  }
  return out;
}

bool contains_geometric(const PSSGrid& pss, const CageCircle& cage) {
  if (pss.clipped() > 0) return false;
  const double r2 = cage.radius * cage.radius;
  // Small slack so cells exactly on the rim survive floating-point noise.
  const double tol = 1e-9 * std::max(1.0, r2);
  const auto raw = pss.raw();
  for (int row = 0; row < pss.height(); ++row) {
    for (int col = 0; col < pss.width(); ++col) {
      if (raw[static_cast<std::size_t>(row) * pss.width() + col] == 0) continue;
      const Vec2 d = pss.cell_center({col, row}) - cage.center;
      if (dot(d, d) > r2 + tol) return false;
    }
  }
  return true;
}

bool feasibility_quasi_static(const Action&) { return true; }

}  // namespace cit
