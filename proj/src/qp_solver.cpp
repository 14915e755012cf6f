#include "cit/qp_solver.hpp"

#include <limits>
#include <vector>

#include "cit/core.hpp"

namespace cit::qp {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double objective_of(const CbfClfQP& qp, const Eigen::VectorXd& z) {
  return z.head(qp.n).squaredNorm() + qp.lambda * z(qp.n) * z(qp.n);
}

}  // namespace

void CbfClfQP::validate() const {
  if (n != 1 && n != 2) throw Error(ErrorCode::BadConfig, "QP dimension must be 1 or 2");
  if (lg_h.size() != n || lg_v.size() != n || lo.size() != n || hi.size() != n) {
    throw Error(ErrorCode::BadConfig, "QP vector sizes do not match n");
  }
  if (!(lambda > 0.0)) throw Error(ErrorCode::BadConfig, "QP slack weight must be positive");
  for (int i = 0; i < n; ++i) {
    if (!(lo(i) < hi(i))) throw Error(ErrorCode::BadConfig, "QP box needs lo < hi");
  }
}

void constraint_matrix(const CbfClfQP& qp, Eigen::MatrixXd& G, Eigen::VectorXd& g) {
  const int n = qp.n;
  const int m = 2 + 2 * n;
  G = Eigen::MatrixXd::Zero(m, n + 1);
  g = Eigen::VectorXd::Zero(m);
  G.row(0).head(n) = -qp.lg_h.transpose();
  g(0) = qp.lf_h + qp.alpha_h;
  G.row(1).head(n) = qp.lg_v.transpose();
  G(1, n) = -1.0;
  g(1) = -(qp.lf_v + qp.c_v);
  for (int i = 0; i < n; ++i) {
    G(2 + i, i) = -1.0;
    g(2 + i) = -qp.lo(i);
    G(2 + n + i, i) = 1.0;
    g(2 + n + i) = qp.hi(i);
  }
}

QPSolution solve(const CbfClfQP& qp) {
  qp.validate();
  const int n = qp.n;
  const int nz = n + 1;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  constraint_matrix(qp, G, g);
  const int m = static_cast<int>(G.rows());

  Eigen::VectorXd hdiag = Eigen::VectorXd::Constant(nz, 2.0);
  hdiag(n) = 2.0 * qp.lambda;
  const double tol = 1e-10;

  QPSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    bool clash = false;
    for (int i = 0; i < n; ++i) {
      if ((mask >> (2 + i) & 1u) && (mask >> (2 + n + i) & 1u)) clash = true;
    }
    if (clash) continue;
    std::vector<int> act;
    for (int j = 0; j < m; ++j) {
      if (mask >> j & 1u) act.push_back(j);
    }
    const int na = static_cast<int>(act.size());
    if (na > nz) continue;

    // KKT system [H A^T; A 0] [z; mu] = [0; b].
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nz + na, nz + na);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + na);
    K.topLeftCorner(nz, nz) = hdiag.asDiagonal();
    for (int a = 0; a < na; ++a) {
      K.block(nz + a, 0, 1, nz) = G.row(act[a]);
      K.block(0, nz + a, nz, 1) = G.row(act[a]).transpose();
      rhs(nz + a) = g(act[a]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < nz + na) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(nz);
    const Eigen::VectorXd mu = sol.tail(na);

    const Eigen::VectorXd slack = G * z - g;
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    if (slack.maxCoeff() > tol * scale) continue;
    if (na > 0 && mu.minCoeff() < -tol * scale) continue;

    const double obj = objective_of(qp, z);
    if (obj < best.objective - 1e-15) {
      best.dtheta = z.head(n);
      best.delta = z(n);
      best.objective = obj;
      best.feasible = true;
      best.multipliers = Eigen::VectorXd::Zero(m);
      for (int a = 0; a < na; ++a) best.multipliers(act[a]) = std::max(0.0, mu(a));
    }
  }
  if (best.feasible) return best;

  // Barrier unsatisfiable: report the box corner that maximizes it.
  QPSolution out;
  out.dtheta = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) out.dtheta(i) = qp.lg_h(i) >= 0.0 ? qp.hi(i) : qp.lo(i);
  out.delta = qp.lf_v + qp.lg_v.dot(out.dtheta) + qp.c_v;
  out.objective = out.dtheta.squaredNorm() + qp.lambda * out.delta * out.delta;
  out.feasible = false;
  out.multipliers = Eigen::VectorXd::Zero(m);
  return out;
}

double kkt_residual(const CbfClfQP& qp, const QPSolution& sol) {
  const int n = qp.n;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  constraint_matrix(qp, G, g);
  Eigen::VectorXd z(n + 1);
  z << sol.dtheta, sol.delta;
  Eigen::VectorXd grad(n + 1);
  grad << 2.0 * sol.dtheta, 2.0 * qp.lambda * sol.delta;
  const Eigen::VectorXd& mu = sol.multipliers;
  const Eigen::VectorXd slack = G * z - g;

  double r = (grad + G.transpose() * mu).cwiseAbs().maxCoeff();
  r = std::max(r, slack.maxCoeff());
  r = std::max(r, -mu.minCoeff());
  r = std::max(r, mu.cwiseProduct(slack).cwiseAbs().maxCoeff());
  return std::max(0.0, r);
}

nlohmann::json to_json(const CbfClfQP& qp, const QPSolution& sol) {
  return {
      {"qp",
       {{"n", qp.n},
        {"Lf_h", qp.lf_h},
        {"Lg_h", to_vec(qp.lg_h)},
        {"alpha_h", qp.alpha_h},
        {"Lf_V", qp.lf_v},
        {"Lg_V", to_vec(qp.lg_v)},
        {"cV", qp.c_v},
        {"lambda", qp.lambda},
        {"lo", to_vec(qp.lo)},
        {"hi", to_vec(qp.hi)}}},
      {"solution",
       {{"dtheta", to_vec(sol.dtheta)},
        {"delta", sol.delta},
        {"objective", sol.objective},
        {"feasible", sol.feasible}}},
  };
}

}  // namespace cit::qp
