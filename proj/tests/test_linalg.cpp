#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "dissipanet/errors.hpp"
#include "dissipanet/linalg.hpp"
#include "support.hpp"

using namespace dissipanet;
using testing::random_mat;

namespace {

// Coefficients c of det(lambda I - A) = lambda^n + c[n-1] lambda^(n-1) + ... + c[0]
// by Faddeev-LeVerrier.
std::vector<double> char_poly(const Mat& a) {
  const Eigen::Index n = a.rows();
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Mat m = Mat::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(n - k + 1)] * Mat::Identity(n, n);
    c[static_cast<std::size_t>(n - k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

// Real roots by sign-change scan plus bisection.
std::vector<double> poly_roots(const std::vector<double>& c, double bound) {
  std::vector<double> roots;
  const int steps = 200000;
  double x0 = -bound, f0 = poly_eval(c, x0);
  for (int s = 1; s <= steps; ++s) {
    const double x1 = -bound + 2.0 * bound * s / steps;
    const double f1 = poly_eval(c, x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = poly_eval(c, mid);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

}  // namespace

TEST_CASE("jacobi eigenvalues of block-diagonal 8x8 matrices match characteristic polynomial roots") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Mat> blocks;
    std::vector<double> expected;
    for (int b = 0; b < 2; ++b) {
      const Mat r = random_mat(rng, 4, 4);
      const Mat s = 0.5 * (r + r.transpose());
      blocks.push_back(s);
      const auto roots = poly_roots(char_poly(s), s.norm() + 1.0);
      REQUIRE(roots.size() == 4);
      expected.insert(expected.end(), roots.begin(), roots.end());
    }
    std::sort(expected.begin(), expected.end());
    const SymmetricEigen e = jacobi_eigen(block_diag(blocks));
    REQUIRE(e.values.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(e.values(i) == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-8));
  }
}

TEST_CASE("jacobi eigenvectors reconstruct the matrix") {
  std::mt19937_64 rng(3);
  const Mat r = random_mat(rng, 6, 6);
  const Mat a = r + r.transpose();
  const SymmetricEigen e = jacobi_eigen(a);
  const Mat back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  CHECK((back - a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 1; i < 6; ++i) CHECK(e.values(i - 1) <= e.values(i));
}

TEST_CASE("min_eigenvalue edge cases") {
  CHECK(std::isinf(min_eigenvalue(Mat(0, 0))));
  CHECK(min_eigenvalue(Mat::Identity(3, 3) * 2.5) == doctest::Approx(2.5));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = -1.0;
  d(1, 1) = 3.0;
  CHECK(min_eigenvalue(d) == -1.0);
}

TEST_CASE("block_diag and helpers") {
  const Mat a = Mat::Constant(1, 2, 1.0);
  const Mat b = Mat::Constant(2, 1, 2.0);
  const Mat d = block_diag({a, b});
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 3);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(2, 2) == 2.0);
  CHECK(d(0, 2) == 0.0);
  CHECK(max_abs(Mat(0, 0)) == 0.0);
  CHECK_THROWS_AS(require_dims(false, "x"), DimensionError);
  Vec v(2);
  v << 1.0, std::nan("");
  CHECK_FALSE(all_finite(v));
}
