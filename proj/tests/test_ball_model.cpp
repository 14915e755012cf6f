#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cit/ball_model.hpp"

using namespace cit;
using namespace cit::ball;
using doctest::Approx;

namespace {

PlateState plate1(double theta, double ax = 0.0, double az = 0.0) {
  PlateState p = PlateState::flat(1, 0.08);
  p.theta(0) = theta;
  p.accel(0) = ax;
  p.accel(1) = az;
  return p;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<long>(v.size()));
  long i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ProbGrid random_grid(std::mt19937_64& rng, int n, int cells) {
  ProbGrid g(n, cells, 0.08, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  for (int k = 0; k < 12; ++k) g.values()[pick(rng)] += w(rng);
  g.normalize();
  return g;
}

}  // namespace

TEST_CASE("effective in-plane acceleration") {
  CHECK(plate_frame_accels(plate1(0.0)).a_eff(0) == Approx(0.0));
  CHECK(plate_frame_accels(plate1(0.1)).a_eff(0) == Approx(9.81 * std::sin(0.1)));
  CHECK(plate_frame_accels(plate1(0.1)).a_eff(0) == Approx(0.9794).epsilon(1e-4));
  CHECK(plate_frame_accels(plate1(0.0, 1.0)).a_eff(0) == Approx(1.0));
  // (g + z'') sin(theta) + x'' cos(theta)
  const double t = 0.2, ax = 0.7, az = -1.3;
  CHECK(plate_frame_accels(plate1(t, ax, az)).a_eff(0) ==
        Approx((9.81 + az) * std::sin(t) + ax * std::cos(t)));
  PlateState p2 = PlateState::flat(2, 0.08);
  p2.accel(1) = 0.5;
  CHECK(plate_frame_accels(p2).a_eff(1) == Approx(0.5));
  CHECK(plate_frame_accels(p2).a_eff(0) == Approx(0.0));
}

TEST_CASE("ball acceleration distribution") {
  BallParams b;
  const auto none = UncertaintyModel::none(1);
  SUBCASE("flat and still") {
    const auto g = accel_distribution(vec({0.0}), plate_frame_accels(plate1(0)), b, none);
    CHECK(g.mean(0) == Approx(0.0));
    CHECK(g.cov(0, 0) == Approx(0.0));
  }
  SUBCASE("hollow sphere on a 0.1 rad tilt") {
    const auto g = accel_distribution(vec({0.0}), plate_frame_accels(plate1(0.1)), b, none);
    CHECK(b.rolling_factor() == Approx(0.6));
    CHECK(g.mean(0) == Approx(0.6 * 9.81 * std::sin(0.1)));
    CHECK(g.mean(0) == Approx(0.5876).epsilon(1e-4));
  }
  SUBCASE("friction noise does nothing at rest") {
    UncertaintyModel u = none;
    u.sigma_mu = 0.3;
    const auto g = accel_distribution(vec({0.0}), plate_frame_accels(plate1(0.1)), b, u);
    CHECK(g.cov(0, 0) == Approx(0.0));
  }
  SUBCASE("mean and covariance agree with finite differences of the dynamics") {
    UncertaintyModel u = UncertaintyModel::none(2);
    u.sigma_m = 0.1;
    u.sigma_mu = 0.2;
    u.sigma_p = Eigen::MatrixXd::Identity(3, 3) * 0.04;
    u.sigma_p(0, 1) = u.sigma_p(1, 0) = 0.01;
    PlateState p = PlateState::flat(2, 0.08);
    p.theta = vec({0.1, -0.05});
    p.accel = vec({0.3, -0.2, 0.5});
    const auto frame = plate_frame_accels(p);
    const Eigen::VectorXd v = vec({0.2, -0.1});
    const auto g = accel_distribution(v, frame, b, u);
    const Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
    CHECK((g.mean - ball_accel(v, frame, b, 0.0, zero3, 0.0)).norm() < 1e-12);

    // Jacobian over (eta_m, eta_p[3], eta_mu) by central differences.
    const double e = 1e-6;
    Eigen::MatrixXd J(2, 5);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(5, 5);
    S(0, 0) = u.sigma_m * u.sigma_m;
    S.block(1, 1, 3, 3) = u.sigma_p;
    S(4, 4) = u.sigma_mu * u.sigma_mu;
    for (int k = 0; k < 5; ++k) {
      auto at = [&](double s) {
        double mm = 0, mmu = 0;
        Eigen::VectorXd q = zero3;
        if (k == 0) mm = s;
        if (k >= 1 && k <= 3) q(k - 1) = s;
        if (k == 4) mmu = s;
        return ball_accel(v, frame, b, mm, q, mmu);
      };
      J.col(k) = (at(e) - at(-e)) / (2 * e);
    }
    const Eigen::MatrixXd want = J * S * J.transpose();
    CHECK((g.cov - want).norm() < 1e-8);
  }
}

TEST_CASE("energy terms") {
  BallParams b;
  const EnergyModel m10 = EnergyModel::from(b, 10.0);
  const Eigen::VectorXd z = vec({0.0});
  CHECK(energy(z, z, z, m10) == 0.0);
  CHECK(m10.m_eff == Approx(0.058 * 5.0 / 3.0));
  CHECK(energy(z, vec({1.0}), z, m10) == Approx(0.5 * 0.058 * 5.0 / 3.0));
  CHECK(energy(z, vec({1.0}), z, m10) == Approx(0.048).epsilon(0.01));
  CHECK(energy(vec({0.08}), z, z, m10) == Approx(0.032));
  CHECK(energy(vec({0.05}), z, vec({2.0}), m10) == Approx(0.5 * 10 * 0.0025 - 0.058 * 2.0 * 0.05));
}

TEST_CASE("escape energy") {
  BallParams b;
  const EnergyModel m10 = EnergyModel::from(b, 10.0);
  CHECK(e_max(plate1(0.0), m10) == Approx(0.5 * 10 * 0.08 * 0.08));
  CHECK(e_max(vec({0.98}), 1, 0.08, m10) == Approx(0.032 - 0.058 * 0.98 * 0.08));
  CHECK(e_max(vec({0.98}), 1, 0.08, m10) == Approx(0.02745).epsilon(1e-3));
  CHECK(e_max(vec({-0.98}), 1, 0.08, m10) == Approx(e_max(vec({0.98}), 1, 0.08, m10)));
  SUBCASE("square plate against a dense boundary scan") {
    for (const auto& a : {vec({0.0, 0.0}), vec({0.5, 0.2}), vec({-1.5, 3.0}), vec({4.0, -0.1})}) {
      double best = 1e9;
      const int N = 4000;
      for (int i = 0; i <= N; ++i) {
        const double s = -0.08 + 0.16 * i / N;
        for (const auto& p : {vec({0.08, s}), vec({-0.08, s}), vec({s, 0.08}), vec({s, -0.08})}) {
          best = std::min(best, energy(p, vec({0, 0}), a, m10));
        }
      }
      CHECK(e_max(a, 2, 0.08, m10) == Approx(best).epsilon(1e-6));
    }
  }
}

TEST_CASE("entropy") {
  ProbGrid g(1, 11, 0.08, 1.0);
  g.values()[5] = 1.0;
  CHECK(entropy(g) == 0.0);
  g.values()[5] = 0.5;
  g.values()[6] = 0.5;
  CHECK(entropy(g) == Approx(std::log(2.0)));
  for (auto& v : g.values()) v = 1.0 / g.size();
  CHECK(entropy(g) == Approx(std::log(static_cast<double>(g.size()))));
}

TEST_CASE("barrier and Lyapunov values") {
  BallParams b;
  const EnergyModel m = EnergyModel::from(b, 10.0);
  const PlateState flat = plate1(0.0);
  SUBCASE("rest at the center") {
    const auto g = ProbGrid::delta(1, 81, 0.08, 1.0, vec({0.0, 0.0}));
    CHECK(cbf_value(g, flat, m) == Approx(0.5 * 10 * 0.0064));
    CHECK(clf_value(g, flat, m, 1e-3) == Approx(0.0));
  }
  SUBCASE("one cell at the escape energy") {
    const auto g = ProbGrid::delta(1, 81, 0.08, 1.0, vec({0.08, 0.0}));
    CHECK(cbf_value(g, flat, m) == Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("mixed support against a brute-force scan") {
    std::mt19937_64 rng(2);
    const PlateState tilted = plate1(0.07, 0.3, -0.2);
    const Eigen::VectorXd a = plate_frame_accels(tilted).a_eff;
    for (int rep = 0; rep < 20; ++rep) {
      const auto g = random_grid(rng, 1, 41);
      double top = -1e9, mean = 0.0, s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double p = g.values()[i];
        if (p <= 0) continue;
        const Eigen::VectorXd q = g.state(i);
        const double e = energy(q.head(1), q.tail(1), a, m);
        top = std::max(top, e);
        mean += p * e;
        s -= p * std::log(p);
      }
      CHECK(cbf_value(g, tilted, m) + max_energy(g, tilted, m) == Approx(e_max(tilted, m)));
      CHECK(max_energy(g, tilted, m) == Approx(top));
      CHECK(clf_value(g, tilted, m, 1e-3) == Approx(mean - 1e-3 * s));
    }
  }
  SUBCASE("uniform equal-energy cells") {
    ProbGrid g(1, 81, 0.08, 1.0);
    // Two cells mirrored in velocity at x = 0 share their energy on a flat plate.
    const long i = g.index_of(vec({0.0, 0.5}));
    const long j = g.index_of(vec({0.0, -0.5}));
    g.values()[static_cast<std::size_t>(i)] = 0.5;
    g.values()[static_cast<std::size_t>(j)] = 0.5;
    const double e0 = energy(vec({0.0}), g.state(static_cast<std::size_t>(i)).tail(1), vec({0.0}), m);
    CHECK(clf_value(g, flat, m, 0.01) == Approx(e0 - 0.01 * std::log(2.0)));
  }
}

TEST_CASE("grid bookkeeping") {
  ProbGrid g(2, 5, 0.08, 1.0);
  CHECK(g.size() == 625);
  const auto s = vec({0.04, -0.08, 0.5, 0.0});
  const long i = g.index_of(s);
  REQUIRE(i >= 0);
  CHECK((g.state(static_cast<std::size_t>(i)) - s).norm() < 1e-12);
  CHECK(g.index_of(vec({0.2, 0, 0, 0})) == -1);
  const auto box = ProbGrid::uniform_box(1, 81, 0.08, 1.0, vec({-0.01, -0.02}), vec({0.01, 0.02}));
  CHECK(box.sum() == Approx(1.0));
  CHECK(box.support().size() == 11 * 1);  // 0.002 m cells, 0.025 m/s cells
}

TEST_CASE("one propagation step") {
  BallParams b;
  const auto none = UncertaintyModel::none(1);
  const double dt = 0.02;
  SUBCASE("rest at the center is a fixed point") {
    const auto g = ProbGrid::delta(1, 81, 0.08, 1.0, vec({0.0, 0.0}));
    const auto r = propagate_prob(g, plate1(0.0), b, none, dt);
    CHECK(r.lost_mass == 0.0);
    REQUIRE(r.grid.support().size() == 1);
    CHECK(r.grid.support()[0] == g.support()[0]);
  }
  SUBCASE("moving delta follows the mean dynamics within a cell") {
    const auto g = ProbGrid::delta(1, 81, 0.08, 1.0, vec({0.0, 0.1}));
    const auto r = propagate_prob(g, plate1(0.0), b, none, dt);
    REQUIRE(r.grid.support().size() == 1);
    const double acc = -b.rolling_friction * 0.1;
    const Eigen::VectorXd want = vec({0.1 * dt, 0.1 + acc * dt});
    const Eigen::VectorXd got = r.grid.state(r.grid.support()[0]);
    CHECK(std::fabs(got(0) - want(0)) <= g.dx());
    CHECK(std::fabs(got(1) - want(1)) <= g.dv());
    // The stored centroid is the exact image.
    const Eigen::VectorXd pt = r.grid.point(r.grid.support()[0]);
    CHECK(pt(0) == Approx(0.1 * dt + 0.5 * acc * dt * dt));
    CHECK(pt(1) == Approx(0.1 + acc * dt));
  }
  SUBCASE("mass off the box is reported") {
    const auto g = ProbGrid::delta(1, 81, 0.08, 1.0, vec({0.079, 0.9}));
    CHECK_THROWS_AS(propagate_prob(g, plate1(0.0), b, none, 0.05), Error);
  }
  SUBCASE("normalized output for random inputs") {
    std::mt19937_64 rng(4);
    UncertaintyModel u = none;
    u.sigma_m = 0.05;
    u.sigma_mu = 0.05;
    u.sigma_p = Eigen::MatrixXd::Identity(2, 2) * 0.04;
    std::uniform_real_distribution<double> th(-0.2, 0.2);
    for (int rep = 0; rep < 50; ++rep) {
      const auto g = random_grid(rng, 1, 41);
      const auto r = propagate_prob(g, plate1(th(rng), th(rng)), b, u, dt);
      CHECK(r.grid.sum() == Approx(1.0).epsilon(1e-9));
      CHECK_FALSE(r.grid.empty());
      const double s = entropy(r.grid);
      CHECK(s >= 0.0);
      CHECK(s <= std::log(static_cast<double>(r.grid.support().size())) + 1e-12);
    }
  }
}
