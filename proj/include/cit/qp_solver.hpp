#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace cit::qp {

/// minimize |dtheta|^2 + lambda delta^2
/// s.t.  lf_h + lg_h . dtheta + alpha_h >= 0
///       lf_v + lg_v . dtheta + c_v <= delta
///       lo <= dtheta <= hi
struct CbfClfQP {
  int n = 1;
  double lf_h = 0.0;
  Eigen::VectorXd lg_h;
  double alpha_h = 0.0;  // already evaluated: gamma * h
  double lf_v = 0.0;
  Eigen::VectorXd lg_v;
  double c_v = 0.0;  // already evaluated: c * V
  double lambda = 1.0;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  void validate() const;
};

struct QPSolution {
  Eigen::VectorXd dtheta;
  double delta = 0.0;
  double objective = 0.0;
  bool feasible = false;
  /// One multiplier per inequality in the order CBF, CLF, lower bounds, upper bounds.
  Eigen::VectorXd multipliers;
};

/// Inequalities as G z <= g over z = (dtheta, delta).
void constraint_matrix(const CbfClfQP& qp, Eigen::MatrixXd& G, Eigen::VectorXd& g);

/// Exact optimum by enumerating active sets. When the barrier constraint
/// cannot hold anywhere in the box, `feasible` is false and dtheta is the box
/// point that comes closest.
QPSolution solve(const CbfClfQP& qp);

/// Largest violation of stationarity, primal feasibility, dual sign and
/// complementary slackness.
double kkt_residual(const CbfClfQP& qp, const QPSolution& sol);

nlohmann::json to_json(const CbfClfQP& qp, const QPSolution& sol);

}  // namespace cit::qp
