#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cit {

enum class ErrorCode {
  EmptyInitialPSS,
  EmptyResult,
  WaypointSpacingTooLarge,
  AllMassLost,
  NoContact,
  BadSpec,
  BadConfig,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Integer cell coordinates on a grid; col grows with +x, row with +y.
struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(Cell, Cell) = default;
};

/// Binary occupancy of possible planar object positions.
///
/// The grid is centered on a world point snapped to the resolution lattice, so
/// cell centers always sit on `resolution * Z^2` in world coordinates and frame
/// shifts are exact integer translations.
class PSSGrid {
 public:
  PSSGrid() = default;
  PSSGrid(int width, int height, double resolution, Vec2 frame_center);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 frame_center() const { return frame_center_; }

  bool in_bounds(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }
  bool at(Cell c) const { return in_bounds(c) && cells_[index(c)] != 0; }
  void set(Cell c, bool occupied = true);
  /// Sets a world point's nearest cell; points off the grid are counted as clipped.
  void mark(Vec2 world);

  Vec2 cell_center(Cell c) const;
  Cell nearest_cell(Vec2 world) const;

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  /// Number of occupied states that fell outside the grid while building it.
  std::size_t clipped() const { return clipped_; }
  void add_clipped(std::size_t n) { clipped_ += n; }

  std::vector<Cell> occupied() const;
  std::span<const std::uint8_t> raw() const { return cells_; }

  /// Same occupancy re-expressed on a grid centered at a new world point.
  PSSGrid recentered(Vec2 new_center) const;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }

  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 frame_center_{};
  std::vector<std::uint8_t> cells_;
  std::size_t clipped_ = 0;
};

/// Snaps a world point to the nearest multiple of the grid resolution.
Vec2 snap_to_lattice(Vec2 p, double resolution);

struct CageCircle {
  Vec2 center;
  double radius = 0.0;
};

struct NoAction {
  friend bool operator==(NoAction, NoAction) = default;
};
struct PushAngle {
  double theta = 0.0;  // [0, 2pi)
  int k = 0;           // candidate index in [1, K]
  friend bool operator==(const PushAngle&, const PushAngle&) = default;
};
struct TiltRate {
  std::vector<double> rate;  // rad/s, one entry per plate axis
  friend bool operator==(const TiltRate&, const TiltRate&) = default;
};

using Action = std::variant<NoAction, PushAngle, TiltRate>;
using ActionSequence = std::vector<Action>;

enum class FailureReason { InfeasibleAction, EscapedCage };
const char* to_string(FailureReason reason);

struct VerificationResult {
  bool success = true;
  std::optional<std::size_t> failure_step;
  std::optional<FailureReason> failure_reason;

  static VerificationResult ok() { return {}; }
  static VerificationResult fail(std::size_t step, FailureReason reason) {
    return {false, step, reason};
  }
};

/// True iff every occupied cell center lies within the cage (inclusive).
/// Cells lost off the grid edge count as escaped.
bool contains_geometric(const PSSGrid& pss, const CageCircle& cage);

/// Quasi-static objects do not move between pushes, so any push is realizable.
bool feasibility_quasi_static(const Action& action);

/// Generic Caging-in-Time verification loop.
///
/// `cage_at(t)` gives the cage for time t, `propagate(state, action, t)` advances
/// the possible-state set by one step, `contains(state, cage)` is the cage test
/// and `feasible(action, t)` the hardware check. Propagation starts from the
/// initial set at t = 0 and every propagated set is tested against
/// `cage_at(t + 1)`.
template <class State, class CageAt, class Propagate, class Contains, class Feasible>
VerificationResult verify_caging_in_time(const State& initial_pss,
                                         std::span<const Action> actions,
                                         CageAt&& cage_at, Propagate&& propagate,
                                         Contains&& contains, Feasible&& feasible) {
  if (initial_pss.empty()) {
    throw Error(ErrorCode::EmptyInitialPSS, "initial possible-state set is empty");
  }
  State pss = initial_pss;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (!feasible(actions[t], t)) {
      return VerificationResult::fail(t, FailureReason::InfeasibleAction);
    }
    pss = propagate(pss, actions[t], t);
    if (!contains(pss, cage_at(t + 1))) {
      return VerificationResult::fail(t, FailureReason::EscapedCage);
    }
  }
  return VerificationResult::ok();
}

}  // namespace cit
