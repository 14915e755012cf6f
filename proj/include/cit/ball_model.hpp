#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cit/core.hpp"

namespace cit::ball {

inline constexpr double kGravity = 9.81;

/// SI units throughout.
struct BallParams {
  double mass = 0.058;
  double radius = 0.033;
  double inertia = 2.0 / 3.0 * 0.058 * 0.033 * 0.033;  // hollow sphere
  double rolling_friction = 0.5;                       // 1/s

  /// m / (m + I / r^2)
  double rolling_factor() const { return mass / (mass + inertia / (radius * radius)); }
  double effective_mass() const { return mass + inertia / (radius * radius); }
  void validate() const;
};

struct UncertaintyModel {
  double sigma_m = 0.0;     // relative mass error
  Eigen::MatrixXd sigma_p;  // (n+1)x(n+1) plate-acceleration covariance, world frame
  double sigma_mu = 0.0;    // friction error, 1/s

  static UncertaintyModel none(int n);
  void validate(int n) const;
};

struct PlateState {
  int n = 1;
  double half_length = 0.08;  // l
  Eigen::VectorXd theta;      // n tilt angles
  Eigen::VectorXd accel;      // n+1 world acceleration, last entry vertical

  static PlateState flat(int n, double half_length);
  void validate() const;
};

struct PlateFrame {
  Eigen::MatrixXd basis;    // (n+1)x(n+1), columns: in-plane axes then normal
  Eigen::VectorXd g_theta;  // gravity in the plate frame
  Eigen::VectorXd a_p;      // plate acceleration in the plate frame
  Eigen::VectorXd a_eff;    // in-plane resultant of both (n entries)
};

/// Plate axes come from tilting x by theta_0 (and y by theta_1), the second
/// axis made orthogonal to the first.
PlateFrame plate_frame_accels(const PlateState& plate);

/// Ball acceleration for explicit noise values (eta_p in the world frame).
Eigen::VectorXd ball_accel(const Eigen::VectorXd& v, const PlateFrame& frame,
                           const BallParams& ball, double eta_m, const Eigen::VectorXd& eta_p,
                           double eta_mu);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Mean at zero noise; covariance by first-order propagation of the three
/// noise channels.
Gaussian accel_distribution(const Eigen::VectorXd& v, const PlateFrame& frame,
                            const BallParams& ball, const UncertaintyModel& unc);

struct EnergyModel {
  double k_ve = 10.0;  // virtual spring, N/m
  double mass = 0.058;
  double m_eff = 0.058 * 5.0 / 3.0;

  static EnergyModel from(const BallParams& ball, double k_ve);
};

double energy(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const Eigen::VectorXd& a_eff,
              const EnergyModel& model);

/// Lowest static energy on the plate boundary.
double e_max(const PlateState& plate, const EnergyModel& model);
double e_max(const Eigen::VectorXd& a_eff, int n, double half_length, const EnergyModel& model);

/// Probability over (x, xdot) on N^(2n) cells. Axis d < n is position d,
/// axis n + d is velocity d. Cell centers span [-max, max] inclusive.
class ProbGrid {
 public:
  ProbGrid() = default;
  ProbGrid(int n, int cells, double x_max, double v_max);

  int n() const { return n_; }
  int cells() const { return cells_; }
  double x_max() const { return x_max_; }
  double v_max() const { return v_max_; }
  double dx() const { return 2.0 * x_max_ / (cells_ - 1); }
  double dv() const { return 2.0 * v_max_ / (cells_ - 1); }
  std::size_t size() const { return values_.size(); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// (x, xdot) at the center of a flat index.
  Eigen::VectorXd state(std::size_t index) const;
  /// Mass centroid of a cell; the center until something is deposited.
  Eigen::VectorXd point(std::size_t index) const;
  void set_point(std::size_t index, const Eigen::VectorXd& p);
  void clear_point(std::size_t index);
  /// Flat index of the nearest cell, or -1 outside the box.
  long index_of(const Eigen::VectorXd& state) const;
  std::vector<int> coords(std::size_t index) const;

  double sum() const;
  bool empty() const;
  std::vector<std::size_t> support() const;
  void normalize();

  static ProbGrid delta(int n, int cells, double x_max, double v_max,
                        const Eigen::VectorXd& state);
  /// Uniform over all cells whose centers fall in the box [lo, hi].
  static ProbGrid uniform_box(int n, int cells, double x_max, double v_max,
                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

 private:
  int n_ = 1;
  int cells_ = 0;
  double x_max_ = 0.0;
  double v_max_ = 0.0;
  std::vector<double> values_;
  std::vector<double> offsets_;  // centroid minus center, 2n per cell; empty = all zero
};

double entropy(const ProbGrid& grid);
double max_energy(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model);
double cbf_value(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model);
double clf_value(const ProbGrid& grid, const PlateState& plate, const EnergyModel& model,
                 double k_s);

inline constexpr double kPruneRatio = 1e-3;
inline constexpr int kQuadratureNodes = 7;  // per dimension, at mu + {-3..3} sigma

/// Visits every (next state, weight) pair of one propagation step before
/// discretization. Weight is cell probability times quadrature weight.
void for_each_image(const ProbGrid& grid, const std::vector<std::size_t>& support,
                    const PlateState& plate, const BallParams& ball,
                    const UncertaintyModel& unc, double dt,
                    const std::function<void(const Eigen::VectorXd&, double)>& visit);

struct Propagated {
  ProbGrid grid;
  double lost_mass = 0.0;
};

/// One step of the discretized density. `plate` carries the already advanced tilt.
/// Each image lands in its nearest cell, and the cell keeps the weighted
/// centroid of what landed there as the start of the next step.
Propagated propagate_prob(const ProbGrid& grid, const PlateState& plate, const BallParams& ball,
                          const UncertaintyModel& unc, double dt);

}  // namespace cit::ball
