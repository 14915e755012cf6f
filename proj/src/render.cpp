#include "cit/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cit::render {

std::string FrameImage::pgm() const {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  return out;
}

void write_pgm(const FrameImage& image, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::string data = image.pgm();
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
}

FrameImage render_push_frame(const PSSGrid& pss, double object_radius, const CageCircle& cage,
                             const std::optional<push::PusherPose>& pusher) {
  const int w = pss.width();
  const int h = pss.height();
  FrameImage img(w, h);
  const auto put = [&](Cell c, std::uint8_t v) { img.set(c.col, h - 1 - c.row, v); };

  const push::POA poa = push::compute_poa(pss, object_radius);
  for (const Cell c : poa.grid.occupied()) put(c, kPoa);
  for (const Cell c : pss.occupied()) put(c, kPss);

  const double rho = pss.resolution();
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const Cell c{col, row};
      const Vec2 p = pss.cell_center(c);
      if (std::fabs(norm(p - cage.center) - cage.radius) <= 0.5 * rho) put(c, kCage);
      if (pusher && push::distance_to_segment(p, *pusher) <= 0.5 * rho) put(c, kPusher);
    }
  }
  return img;
}

FrameImage render_prob_frame(const ball::ProbGrid& grid, const ball::PlateState& plate,
                             const ball::EnergyModel& model) {
  const int n = grid.n();
  const int N = grid.cells();
  std::vector<double> plane(static_cast<std::size_t>(N) * N, 0.0);
  const auto& vals = grid.values();
  for (const std::size_t i : grid.support()) {
    const auto c = grid.coords(i);
    // n = 1: (x, v); n = 2: (x, y).
    plane[static_cast<std::size_t>(c[1]) * N + c[0]] += vals[i];
  }
  const double peak = *std::max_element(plane.begin(), plane.end());
  FrameImage img(N, N);
  for (int r = 0; r < N; ++r) {
    for (int col = 0; col < N; ++col) {
      const double p = plane[static_cast<std::size_t>(r) * N + col];
      const auto v = static_cast<std::uint8_t>(std::lround(peak > 0.0 ? 255.0 * p / peak : 0.0));
      img.set(col, N - 1 - r, v);
    }
  }

  // Energy-cage outline: cells inside whose right or upper neighbor is outside.
  const Eigen::VectorXd a = ball::plate_frame_accels(plate).a_eff;
  const double cap = ball::e_max(plate, model);
  const auto inside = [&](int col, int r) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    if (n == 1) {
      x(0) = -grid.x_max() + col * grid.dx();
      v(0) = -grid.v_max() + r * grid.dv();
    } else {
      x(0) = -grid.x_max() + col * grid.dx();
      x(1) = -grid.x_max() + r * grid.dx();
    }
    return ball::energy(x, v, a, model) < cap;
  };
  for (int r = 0; r < N; ++r) {
    for (int col = 0; col < N; ++col) {
      const bool in = inside(col, r);
      const bool edge = (col + 1 < N && inside(col + 1, r) != in) ||
                        (r + 1 < N && inside(col, r + 1) != in);
      if (edge && img.at(col, N - 1 - r) == 0) img.set(col, N - 1 - r, kCage);
    }
  }
  return img;
}

}  // namespace cit::render
