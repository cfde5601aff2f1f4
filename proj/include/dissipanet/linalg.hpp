#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dissipanet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
struct SymmetricEigen {
  Vec values;   // ascending
  Mat vectors;  // columns, matching `values`
  int sweeps = 0;
};

/// Cyclic Jacobi sweeps until the off-diagonal Frobenius norm falls below
/// `rel_tol * ||A||_F`. Throws ConvergenceError after `max_sweeps`.
SymmetricEigen jacobi_eigen(const Mat& a, int max_sweeps = 100, double rel_tol = 1e-15);

/// Smallest eigenvalue of a symmetric matrix (Jacobi). Empty matrix -> +inf.
double min_eigenvalue(const Mat& a);

/// Block-diagonal stacking.
Mat block_diag(const std::vector<Mat>& blocks);

Mat symmetrize(const Mat& a);

/// Throws DimensionError with `what` when the condition is false.
void require_dims(bool ok, const std::string& what);

/// Max-abs entry, 0 for empty matrices.
double max_abs(const Mat& a);

bool all_finite(const Vec& v);

}  // namespace dissipanet
