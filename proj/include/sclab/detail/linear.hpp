#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sclab/common.hpp"

namespace sclab::detail {

/**
 * Solves A x = b by dense LU with partial pivoting plus one pass of
 * iterative refinement, then checks the residual of every equation against
 * tol. Throws SolverFailure on a singular system or an out-of-tolerance
 * residual (either points at a non-terminating chain upstream).
 */
inline Eigen::VectorXd solve_checked(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     double tol = kStrictTol) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(b);
  if (!x.allFinite()) throw SolverFailure("linear system is singular or ill-conditioned");
  x += lu.solve(b - a * x);
  const double resid = (b - a * x).lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
  if (!(resid <= tol * scale))
    throw SolverFailure("linear solve residual " + fmt17(resid) + " exceeds tolerance");
  return x;
}

}  // namespace sclab::detail
