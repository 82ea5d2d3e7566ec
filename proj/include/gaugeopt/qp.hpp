#pragma once

// Convex quadratic programs with sparse inequality rows and simple bounds,
// solved by a primal active-set method, and nonnegative least squares.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

namespace gaugeopt {

/// min 1/2 x'Hx + q'x  s.t.  A x >= b,  lo <= x <= hi  (infinite bounds allowed).
/// Constraint ids: [0, m) rows of A, [m, m+n) lower bounds, [m+n, m+2n) upper bounds.
struct QpProblem {
  Eigen::SparseMatrix<double> h;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a;
  Eigen::VectorXd b;
  Eigen::VectorXd lo, hi;
};

struct QpResult {
  Eigen::VectorXd x;
  std::vector<int> working_set;    // sorted constraint ids active at x
  Eigen::VectorXd row_multipliers; // size m, >= 0
  Eigen::VectorXd lower_multipliers, upper_multipliers;  // size n, >= 0
  int iterations = 0;
};

/// Primal active-set iterations from the feasible point x0. The warm set is
/// filtered to constraints tight at x0 and kept linearly independent. Ties in
/// adding and dropping constraints go to the smallest id (Bland's rule).
/// Throws SolverError after max_iter iterations.
QpResult solve_qp(const QpProblem& p, const Eigen::VectorXd& x0, const std::vector<int>& warm = {}, int max_iter = -1);

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Lawson-Hanson active-set NNLS: min ||E x - f|| subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& e, const Eigen::VectorXd& f, int max_iter = -1);

}  // namespace gaugeopt
