#pragma once

#include <random>

#include "dissipanet/netmodel.hpp"

namespace testing {

using dissipanet::Mat;
using dissipanet::Vec;

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

/// x' = a x + b u + e nu, y_u = y_nu = x (scalar).
class ScalarNode final : public dissipanet::NodeSystem {
 public:
  ScalarNode(double a, double b, double e, bool feedthrough = false)
      : a_(a), b_(b), e_(e), ft_(feedthrough) {}
  dissipanet::NodeDims dims() const override { return {1, 1, 1, 1, 1}; }
  Vec step(const Vec& x, const Vec& u, const Vec& nu) const override {
    return a_ * x + b_ * u + e_ * nu;
  }
  Vec output_u(const Vec& x) const override { return x; }
  Vec output_nu(const Vec& x) const override { return x; }
  bool has_feedthrough() const override { return ft_; }

 private:
  double a_, b_, e_;
  bool ft_;
};

/// z' = c z + d mu, omega = z.
class ScalarEdge final : public dissipanet::EdgeSystem {
 public:
  ScalarEdge(double c, double d) : c_(c), d_(d) {}
  dissipanet::EdgeDims dims() const override { return {1, 1, 1}; }
  Vec step(const Vec& z, const Vec& mu) const override { return c_ * z + d_ * mu; }
  Vec output(const Vec& z, const Vec&) const override { return z; }

 private:
  double c_, d_;
};

}  // namespace testing
