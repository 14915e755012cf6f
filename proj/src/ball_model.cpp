#include "cit/ball_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace cit::ball {

void BallParams::validate() const {
  if (!(mass > 0.0 && radius > 0.0 && inertia > 0.0 && rolling_friction > 0.0)) {
    throw Error(ErrorCode::BadConfig, "ball parameters must be positive");
  }
}

UncertaintyModel UncertaintyModel::none(int n) {
  UncertaintyModel u;
  u.sigma_p = Eigen::MatrixXd::Zero(n + 1, n + 1);
  return u;
}

void UncertaintyModel::validate(int n) const {
  if (sigma_m < 0.0 || sigma_mu < 0.0) {
    throw Error(ErrorCode::BadConfig, "noise deviations must be nonnegative");
  }
  if (sigma_p.rows() != n + 1 || sigma_p.cols() != n + 1) {
    throw Error(ErrorCode::BadConfig, "plate-acceleration covariance must be (n+1)x(n+1)");
  }
  if ((sigma_p - sigma_p.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::BadConfig, "plate-acceleration covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_p);
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw Error(ErrorCode::BadConfig, "plate-acceleration covariance must be PSD");
  }
}

PlateState PlateState::flat(int n, double half_length) {
  PlateState p;
  p.n = n;
  p.half_length = half_length;
  p.theta = Eigen::VectorXd::Zero(n);
  p.accel = Eigen::VectorXd::Zero(n + 1);
  return p;
}

void PlateState::validate() const {
  if (n != 1 && n != 2) throw Error(ErrorCode::BadConfig, "plate dimension must be 1 or 2");
  if (theta.size() != n || accel.size() != n + 1) {
    throw Error(ErrorCode::BadConfig, "plate vectors do not match n");
  }
  if (!(half_length > 0.0)) throw Error(ErrorCode::BadConfig, "plate half length must be > 0");
  for (int i = 0; i < n; ++i) {
    if (!(std::fabs(theta(i)) < std::numbers::pi / 2)) {
      throw Error(ErrorCode::BadConfig, "plate tilt must stay within (-pi/2, pi/2)");
    }
  }
}

PlateFrame plate_frame_accels(const PlateState& plate) {
  const int n = plate.n;
  PlateFrame f;
  f.basis = Eigen::MatrixXd::Zero(n + 1, n + 1);
  if (n == 1) {
    const double c = std::cos(plate.theta(0));
    const double s = std::sin(plate.theta(0));
    f.basis.col(0) << c, s;
    f.basis.col(1) << -s, c;
  } else {
    Eigen::Vector3d t1(std::cos(plate.theta(0)), 0.0, std::sin(plate.theta(0)));
    Eigen::Vector3d t2(0.0, std::cos(plate.theta(1)), std::sin(plate.theta(1)));
    t2 = (t2 - t2.dot(t1) * t1).normalized();
    f.basis.col(0) = t1;
    f.basis.col(1) = t2;
    f.basis.col(2) = t1.cross(t2);
  }
  Eigen::VectorXd gravity = Eigen::VectorXd::Zero(n + 1);
  gravity(n) = kGravity;
  f.g_theta = f.basis.transpose() * gravity;
  f.a_p = f.basis.transpose() * plate.accel;
  f.a_eff = (f.g_theta + f.a_p).head(n);
  return f;
}

Eigen::VectorXd ball_accel(const Eigen::VectorXd& v, const PlateFrame& frame,
                           const BallParams& ball, double eta_m, const Eigen::VectorXd& eta_p,
                           double eta_mu) {
  const int n = static_cast<int>(v.size());
  const Eigen::MatrixXd tangent = frame.basis.leftCols(n);
  const Eigen::VectorXd drive = frame.a_eff + tangent.transpose() * eta_p;
  return ball.rolling_factor() * (1.0 + eta_m) * drive -
         (ball.rolling_friction + eta_mu) * v;
}

Gaussian accel_distribution(const Eigen::VectorXd& v, const PlateFrame& frame,
                            const BallParams& ball, const UncertaintyModel& unc) {
  const int n = static_cast<int>(v.size());
  const double k = ball.rolling_factor();
  Gaussian g;
  g.mean = k * frame.a_eff - ball.rolling_friction * v;
  const Eigen::VectorXd jm = k * frame.a_eff;
  const Eigen::MatrixXd jp = k * frame.basis.leftCols(n).transpose();
  g.cov = unc.sigma_m * unc.sigma_m * jm * jm.transpose() +
          jp * unc.sigma_p * jp.transpose() + unc.sigma_mu * unc.sigma_mu * v * v.transpose();
  return g;
}

EnergyModel EnergyModel::from(const BallParams& ball, double k_ve) {
  if (!(k_ve > 0.0)) throw Error(ErrorCode::BadConfig, "virtual spring must be positive");
  return {k_ve, ball.mass, ball.effective_mass()};
}

double energy(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const Eigen::VectorXd& a_eff,
              const EnergyModel& model) {
  return 0.5 * model.m_eff * v.squaredNorm() + 0.5 * model.k_ve * x.squaredNorm() -
         model.mass * a_eff.dot(x);
}

double e_max(const Eigen::VectorXd& a_eff, int n, double l, const EnergyModel& model) {
  const double k = model.k_ve;
  const double m = model.mass;
  if (n == 1) return 0.5 * k * l * l - m * std::fabs(a_eff(0)) * l;
  // Each edge fixes one coordinate at +-l; the other minimizes a parabola.
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    const double free = std::clamp(m * a_eff(other) / k, -l, l);
    for (const double side : {-l, l}) {
      const double e = 0.5 * k * (l * l + free * free) - m * (a_eff(axis) * side + a_eff(other) * free);
      best = std::min(best, e);
    }
  }
  return best;
}

double e_max(const PlateState& plate, const EnergyModel& model) {
  return e_max(plate_frame_accels(plate).a_eff, plate.n, plate.half_length, model);
}

ProbGrid::ProbGrid(int n, int cells, double x_max, double v_max)
    : n_(n), cells_(cells), x_max_(x_max), v_max_(v_max) {
  if (n != 1 && n != 2) throw Error(ErrorCode::BadConfig, "grid dimension must be 1 or 2");
  if (cells < 3) throw Error(ErrorCode::BadConfig, "grid needs at least 3 cells per axis");
  if (!(x_max > 0.0 && v_max > 0.0)) throw Error(ErrorCode::BadConfig, "grid extents must be > 0");
  std::size_t total = 1;
  for (int d = 0; d < 2 * n; ++d) total *= static_cast<std::size_t>(cells);
  values_.assign(total, 0.0);
}

std::vector<int> ProbGrid::coords(std::size_t index) const {
  std::vector<int> c(2 * n_);
  for (int d = 0; d < 2 * n_; ++d) {
    c[d] = static_cast<int>(index % cells_);
    index /= cells_;
  }
  return c;
}

Eigen::VectorXd ProbGrid::state(std::size_t index) const {
  Eigen::VectorXd s(2 * n_);
  for (int d = 0; d < 2 * n_; ++d) {
    const int c = static_cast<int>(index % cells_);
    index /= cells_;
    s(d) = d < n_ ? -x_max_ + c * dx() : -v_max_ + c * dv();
  }
  return s;
}

Eigen::VectorXd ProbGrid::point(std::size_t index) const {
  Eigen::VectorXd s = state(index);
  if (!offsets_.empty()) {
    for (int d = 0; d < 2 * n_; ++d) s(d) += offsets_[index * 2 * n_ + d];
  }
  return s;
}

void ProbGrid::set_point(std::size_t index, const Eigen::VectorXd& p) {
  if (offsets_.empty()) offsets_.assign(values_.size() * 2 * n_, 0.0);
  const Eigen::VectorXd c = state(index);
  for (int d = 0; d < 2 * n_; ++d) offsets_[index * 2 * n_ + d] = p(d) - c(d);
}

void ProbGrid::clear_point(std::size_t index) {
  if (offsets_.empty()) return;
  for (int d = 0; d < 2 * n_; ++d) offsets_[index * 2 * n_ + d] = 0.0;
}

long ProbGrid::index_of(const Eigen::VectorXd& state) const {
  long index = 0;
  long stride = 1;
  for (int d = 0; d < 2 * n_; ++d) {
    const double lo = d < n_ ? -x_max_ : -v_max_;
    const double step = d < n_ ? dx() : dv();
    const long c = std::lround((state(d) - lo) / step);
    if (c < 0 || c >= cells_) return -1;
    index += c * stride;
    stride *= cells_;
  }
  return index;
}

double ProbGrid::sum() const {
  double s = 0.0;
  for (const double v : values_) s += v;
  return s;
}

bool ProbGrid::empty() const {
  return std::none_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

std::vector<std::size_t> ProbGrid::support() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] > 0.0) s.push_back(i);
  }
  return s;
}

void ProbGrid::normalize() {
  const double s = sum();
  if (!(s > 0.0)) throw Error(ErrorCode::AllMassLost, "probability grid has no mass");
  for (double& v : values_) v /= s;
}

ProbGrid ProbGrid::delta(int n, int cells, double x_max, double v_max,
                         const Eigen::VectorXd& state) {
  ProbGrid g(n, cells, x_max, v_max);
  const long i = g.index_of(state);
  if (i < 0) throw Error(ErrorCode::EmptyInitialPSS, "initial state lies outside the grid");
  g.values_[static_cast<std::size_t>(i)] = 1.0;
  g.set_point(static_cast<std::size_t>(i), state);
  return g;
}

ProbGrid ProbGrid::uniform_box(int n, int cells, double x_max, double v_max,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  ProbGrid g(n, cells, x_max, v_max);
  const double tol = 1e-9;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Eigen::VectorXd s = g.state(i);
    bool inside = true;
    for (int d = 0; d < 2 * n && inside; ++d) {
      inside = s(d) >= lo(d) - tol && s(d) <= hi(d) + tol;
    }
    if (inside) g.values_[i] = 1.0;
  }
  if (g.empty()) {
    const long i = g.index_of(0.5 * (lo + hi));
    if (i < 0) throw Error(ErrorCode::EmptyInitialPSS, "initial box lies outside the grid");
    g.values_[static_cast<std::size_t>(i)] = 1.0;
  }
  g.normalize();
  return g;
}

double entropy(const ProbGrid& grid) {
  double s = 0.0;
  for (const double p : grid.values()) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double max_energy(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model) {
  const int n = grid.n();
  const Eigen::VectorXd a = plate_frame_accels(plate).a_eff;
  double best = -std::numeric_limits<double>::infinity();
  const auto& vals = grid.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!(vals[i] > 0.0)) continue;
    const Eigen::VectorXd s = grid.point(i);
    best = std::max(best, energy(s.head(n), s.tail(n), a, model));
  }
  return best;
}

double cbf_value(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model) {
  return e_max(plate, model) - max_energy(grid, plate, model);
}

double clf_value(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model,
                 double k_s) {
  const int n = grid.n();
  const Eigen::VectorXd a = plate_frame_accels(plate).a_eff;
  double expected = 0.0;
  const auto& vals = grid.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!(vals[i] > 0.0)) continue;
    const Eigen::VectorXd s = grid.point(i);
    expected += vals[i] * energy(s.head(n), s.tail(n), a, model);
  }
  return expected - k_s * entropy(grid);
}

namespace {

struct Quadrature {
  std::vector<Eigen::VectorXd> offsets;  // acceleration offsets from the mean
  std::vector<double> weights;
};

// Tensor nodes at {-3..3} sigma along the covariance eigenvectors; collapsed
// directions keep only the center node.
Quadrature quadrature(const Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(cov.rows());
  Quadrature q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 0};
  for (int d = 0; d < n; ++d) {
    if (sd(d) > 1e-12) {
      lo[d] = -(kQuadratureNodes / 2);
      hi[d] = kQuadratureNodes / 2;
    }
  }
  double total = 0.0;
  for (int a = lo[0]; a <= hi[0]; ++a) {
    for (int b = (n > 1 ? lo[1] : 0); b <= (n > 1 ? hi[1] : 0); ++b) {
      Eigen::VectorXd z(n);
      z(0) = a;
      if (n > 1) z(1) = b;
      const double w = std::exp(-0.5 * z.squaredNorm());
      q.offsets.push_back(es.eigenvectors() * sd.cwiseProduct(z));
      q.weights.push_back(w);
      total += w;
    }
  }
  for (double& w : q.weights) w /= total;
  return q;
}

}  // namespace

void for_each_image(const ProbGrid& grid, const std::vector<std::size_t>& support,
                    const PlateState& plate, const BallParams& ball,
                    const UncertaintyModel& unc, double dt,
                    const std::function<void(const Eigen::VectorXd&, double)>& visit) {
  const int n = grid.n();
  const PlateFrame frame = plate_frame_accels(plate);
  const auto& vals = grid.values();
  // The covariance only depends on velocity through friction noise, so one
  // quadrature serves every cell when that channel is off.
  const bool shared = unc.sigma_mu == 0.0;
  Quadrature common;
  if (shared) {
    common = quadrature(accel_distribution(Eigen::VectorXd::Zero(n), frame, ball, unc).cov);
  }
  Eigen::VectorXd next(2 * n);
  for (const std::size_t i : support) {
    const double p = vals[i];
    if (!(p > 0.0)) continue;
    const Eigen::VectorXd s = grid.point(i);
    const Eigen::VectorXd v = s.tail(n);
    const Gaussian g = accel_distribution(v, frame, ball, unc);
    const Quadrature local = shared ? Quadrature{} : quadrature(g.cov);
    const Quadrature& q = shared ? common : local;
    for (std::size_t k = 0; k < q.weights.size(); ++k) {
      const Eigen::VectorXd a = g.mean + q.offsets[k];
      next.head(n) = s.head(n) + dt * v + 0.5 * dt * dt * a;
      next.tail(n) = v + dt * a;
      visit(next, p * q.weights[k]);
    }
  }
}

Propagated propagate_prob(const ProbGrid& grid, const PlateState& plate, const BallParams& ball,
                          const UncertaintyModel& unc, double dt) {
  Propagated out;
  out.grid = ProbGrid(grid.n(), grid.cells(), grid.x_max(), grid.v_max());
  auto& vals = out.grid.values();
  const int dims = 2 * grid.n();
  std::vector<double> moment(vals.size() * dims, 0.0);
  double lost = 0.0;
  for_each_image(grid, grid.support(), plate, ball, unc, dt,
                 [&](const Eigen::VectorXd& s, double w) {
                   const long j = out.grid.index_of(s);
                   if (j < 0) {
                     lost += w;
                   } else {
                     vals[static_cast<std::size_t>(j)] += w;
                     for (int d = 0; d < dims; ++d) moment[j * dims + d] += w * s(d);
                   }
                 });
  const double kept = out.grid.sum();
  out.lost_mass = std::clamp(lost / (lost + kept), 0.0, 1.0);
  if (!(kept > 0.0)) throw Error(ErrorCode::AllMassLost, "all probability mass left the grid");

  const double peak = *std::max_element(vals.begin(), vals.end());
  const double floor = kPruneRatio * peak;
  Eigen::VectorXd c(dims);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] < floor) {
      vals[i] = 0.0;
    } else if (vals[i] > 0.0) {
      for (int d = 0; d < dims; ++d) c(d) = moment[i * dims + d] / vals[i];
      out.grid.set_point(i, c);
    }
  }
  out.grid.normalize();
  return out;
}

}  // namespace cit::ball
