#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cit/qp_solver.hpp"
#include "support/brute_qp.hpp"

using namespace cit;
using namespace cit::qp;
using doctest::Approx;

using testing::make;
using testing::random_qp;

TEST_CASE("interior optimum") {
  CbfClfQP q = make(1);
  q.lf_h = 1.0;
  q.alpha_h = 0.5;
  q.lf_v = -1.0;
  q.c_v = 0.5;
  const auto s = solve(q);
  CHECK(s.feasible);
  CHECK(s.dtheta(0) == Approx(0.0));
  CHECK(s.delta == Approx(0.0));
  CHECK(s.objective == Approx(0.0));
}

TEST_CASE("barrier projection") {
  CbfClfQP q = make(1, 10.0);
  q.lg_h(0) = 2.0;  // 2 u >= 1
  q.lf_h = -1.0;
  q.lf_v = -5.0;
  const auto s = solve(q);
  CHECK(s.feasible);
  CHECK(s.dtheta(0) == Approx(0.5));
  CHECK(kkt_residual(q, s) < 1e-8);
}

TEST_CASE("infeasible barrier") {
  CbfClfQP q = make(1, 0.1);
  q.lg_h(0) = 1.0;
  q.lf_h = -1.0;  // needs u >= 1 but the box stops at 0.1
  const auto s = solve(q);
  CHECK_FALSE(s.feasible);
  CHECK(s.dtheta(0) == Approx(0.1));
}

TEST_CASE("Lyapunov term trades rate against slack") {
  CbfClfQP q = make(1, 10.0);
  q.lf_h = 1.0;
  q.lf_v = 1.0;
  q.lg_v(0) = 1.0;  // 1 + u <= delta
  q.lambda = 1.0;
  // minimize u^2 + (1 + u)^2  ->  u = -1/2, delta = 1/2
  const auto s = solve(q);
  CHECK(s.dtheta(0) == Approx(-0.5));
  CHECK(s.delta == Approx(0.5));
  CHECK(s.objective == Approx(0.5));
}

TEST_CASE("random programs match the grid search and satisfy KKT") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + rep % 2;
    const auto q = random_qp(rng, n);
    const auto s = solve(q);
    const auto b = testing::brute_force(q, n == 1 ? 1e-3 : 1e-2, 6);
    CHECK(s.feasible == b.feasible);
    if (!s.feasible) continue;
    CHECK(std::fabs(s.objective - b.objective) < 1e-4);
    CHECK(s.objective <= b.objective + 1e-9);
    CHECK(kkt_residual(q, s) < 1e-8);
  }
}

TEST_CASE("scaling the barrier leaves the argmin alone") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    auto q = random_qp(rng, 2);
    q.lf_v = -10.0;  // CLF slack-free
    const auto a = solve(q);
    auto r = q;
    r.lf_h *= 3.7;
    r.lg_h *= 3.7;
    r.alpha_h *= 3.7;
    const auto b = solve(r);
    CHECK(a.feasible == b.feasible);
    if (a.feasible) CHECK((a.dtheta - b.dtheta).norm() < 1e-9);
  }
}

TEST_CASE("larger slack weight never grows the slack") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    auto q = random_qp(rng, 1 + rep % 2);
    double last = std::numeric_limits<double>::infinity();
    for (double lam : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
      q.lambda = lam;
      const auto s = solve(q);
      if (!s.feasible) break;
      CHECK(s.delta * s.delta <= last + 1e-12);
      last = s.delta * s.delta;
    }
  }
}

TEST_CASE("debug record") {
  CbfClfQP q = make(2);
  const auto s = solve(q);
  const auto j = to_json(q, s);
  CHECK(j["solution"]["feasible"] == s.feasible);
  CHECK(j["qp"]["Lg_h"].size() == 2);
  CHECK_THROWS_AS([] { CbfClfQP bad = make(1); bad.lo(0) = 2.0; solve(bad); }(), std::exception);
}
