#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cit/ball_model.hpp"
#include "cit/core.hpp"
#include "cit/push_planner.hpp"

namespace cit::render {

inline constexpr std::uint8_t kPss = 255;
inline constexpr std::uint8_t kPoa = 160;
inline constexpr std::uint8_t kCage = 96;
inline constexpr std::uint8_t kPusher = 32;

/// 8-bit grayscale raster, row 0 at the top.
struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  FrameImage() = default;
  FrameImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  void set(int col, int row, std::uint8_t v) {
    if (col >= 0 && row >= 0 && col < width && row < height) {
      pixels[static_cast<std::size_t>(row) * width + col] = v;
    }
  }
  /// Binary PGM (P5).
  std::string pgm() const;
};

void write_pgm(const FrameImage& image, const std::filesystem::path& path);

/// One pixel per grid cell, +y up. The POA ring (POA minus PSS) is drawn
/// first, then the PSS, the cage circle and the pusher segment on top.
FrameImage render_push_frame(const PSSGrid& pss, double object_radius, const CageCircle& cage,
                             const std::optional<push::PusherPose>& pusher);

/// n = 1: position across, velocity up. n = 2: positions, velocities summed
/// out. Cells map to 255 I / max I; the boundary of the energy cage for the
/// given plate is traced in kCage where it falls on an empty cell.
FrameImage render_prob_frame(const ball::ProbGrid& grid, const ball::PlateState& plate,
                             const ball::EnergyModel& model);

}  // namespace cit::render
