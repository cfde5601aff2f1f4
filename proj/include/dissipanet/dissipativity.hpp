#pragma once

#include <optional>
#include <vector>

#include "dissipanet/linalg.hpp"
#include "dissipanet/netmodel.hpp"

namespace dissipanet {

// Tolerance policy: exact algebra, spectral checks, accumulated trajectory sums.
inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kSpectralTol = 1e-10;
inline constexpr double kTrajectoryTol = 1e-8;

/// Quadratic supply rate w(a, y) = a^T S^T y - a^T R a - y^T Q y for one port.
/// S maps the input space into the output space (dim y x dim a).
class QsrSupply {
 public:
  QsrSupply() = default;
  /// Q and R are symmetrized on construction.
  QsrSupply(Mat q, Mat s, Mat r);

  static QsrSupply scalar(double q, double s, double r);

  const Mat& q() const { return q_; }
  const Mat& s() const { return s_; }
  const Mat& r() const { return r_; }
  Eigen::Index input_dim() const { return r_.rows(); }
  Eigen::Index output_dim() const { return q_.rows(); }

 private:
  Mat q_, s_, r_;
};

double eval_supply(const QsrSupply& spec, const Vec& a, const Vec& y);

struct NodeSupply {
  QsrSupply u;   // control port (u, y_u)
  QsrSupply nu;  // coupling port (nu, y_nu)
};

/// Supply rates of every subsystem of a network.
struct SupplySpec {
  std::vector<NodeSupply> nodes;
  std::vector<QsrSupply> edges;

  Mat stacked_s_u() const;
  Mat stacked_r_u() const;
  Mat stacked_q_u() const;
  Mat stacked_s_nu() const;
  Mat stacked_r_nu() const;
  Mat stacked_q_nu() const;
  Mat stacked_s_e() const;
  Mat stacked_r_e() const;
  Mat stacked_q_e() const;

  // Minimum eigenvalues of the block-diagonal stacks (minimum over blocks).
  double epsilon_nu() const;
  double delta_nu() const;
  double epsilon_u() const;
  double delta_u() const;
  double epsilon_e() const;
  double delta_e() const;
};

/// Designer-chosen desired supply of one node:
///   w_d = nu^T S_nu^T y_nu - delta ||nu||^2 - epsilon (||y_u||^2 + ||y_nu||^2)
struct DesiredSupplyParams {
  double delta = 0.0;
  double epsilon = 0.0;
};

double desired_supply(const Vec& nu, const Vec& y_u, const Vec& y_nu, double delta,
                      double epsilon, const Mat& s_nu);

struct SupplyCheck {
  bool ok = true;
  /// Index of the first term whose inclusion drives the running sum below -tol.
  std::optional<std::size_t> first_violation;
  double min_prefix = 0.0;
};

/// Storage-free dissipativity certificate: every prefix sum >= -tol.
SupplyCheck cumulative_supply_check(const std::vector<double>& trace,
                                    double tol = kTrajectoryTol);

/// max |B^T S_nu^T - S_e B^T| (edge energy neutrality).
double check_assumption3(const NetworkTopology& topo, const Mat& s_nu, const Mat& s_e);

/// B_delta(x) = eps_e I + x B^T B
Mat b_delta(const NetworkTopology& topo, double epsilon_e, double x);
/// B_epsilon(y) = y I + delta_e B B^T
Mat b_epsilon(const NetworkTopology& topo, double delta_e, double y);

struct Assumption4Report {
  double lambda_min_b_delta = 0.0;
  double lambda_min_b_epsilon = 0.0;

  bool holds(double tol = kSpectralTol) const {
    return lambda_min_b_delta >= -tol && lambda_min_b_epsilon >= -tol;
  }
  bool strict(double tol = kSpectralTol) const {
    return lambda_min_b_delta > tol && lambda_min_b_epsilon > tol;
  }
};

Assumption4Report check_assumption4(const NetworkTopology& topo, double epsilon_e,
                                    double delta_e, double alpha, double beta);

/// alpha = min delta_d, beta = min epsilon_d over the nodes.
std::pair<double, double> alpha_beta(const std::vector<DesiredSupplyParams>& desired);

struct SupplyBoundSeries {
  std::vector<double> lhs;
  std::vector<double> rhs;
  bool ok = true;
  double min_margin = 0.0;  // min over t of rhs - lhs
  double max_lhs = 0.0;
};

/// Cumulative network supply bound along a trajectory:
///   lhs(t) = sum_{tau<=t} (sum_i w_d^i + sum_k w_e^k)
///   rhs(t) = -sum_{tau<=t} (|omega|^2_{B_delta(alpha)} + |y_nu|^2_{B_eps(beta)} + beta |y_u|^2)
/// ok iff lhs <= rhs + tol and lhs <= tol for every t.
SupplyBoundSeries network_supply_bound(const std::vector<IoRecord>& trace,
                                       const SupplySpec& spec,
                                       const std::vector<DesiredSupplyParams>& desired,
                                       const NetworkTopology& topo,
                                       double tol = kTrajectoryTol);

}  // namespace dissipanet
