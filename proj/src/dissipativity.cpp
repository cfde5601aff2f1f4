#include "dissipanet/dissipativity.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dissipanet/errors.hpp"

namespace dissipanet {

QsrSupply::QsrSupply(Mat q, Mat s, Mat r) {
  require_dims(q.rows() == q.cols(), "QsrSupply: Q must be square");
  require_dims(r.rows() == r.cols(), "QsrSupply: R must be square");
  require_dims(s.rows() == q.rows() && s.cols() == r.rows(),
               "QsrSupply: S must be (dim y) x (dim a)");
  q_ = symmetrize(q);
  s_ = std::move(s);
  r_ = symmetrize(r);
}

QsrSupply QsrSupply::scalar(double q, double s, double r) {
  return QsrSupply(Mat::Constant(1, 1, q), Mat::Constant(1, 1, s), Mat::Constant(1, 1, r));
}

double eval_supply(const QsrSupply& spec, const Vec& a, const Vec& y) {
  require_dims(a.size() == spec.input_dim(),
               "eval_supply: input has " + std::to_string(a.size()) + " entries, supply expects " +
                   std::to_string(spec.input_dim()));
  require_dims(y.size() == spec.output_dim(),
               "eval_supply: output has " + std::to_string(y.size()) + " entries, supply expects " +
                   std::to_string(spec.output_dim()));
  return a.dot(spec.s().transpose() * y) - a.dot(spec.r() * a) - y.dot(spec.q() * y);
}

namespace {

template <class Get>
Mat stack_nodes(const std::vector<NodeSupply>& nodes, Get get) {
  std::vector<Mat> blocks;
  blocks.reserve(nodes.size());
  for (const auto& n : nodes) blocks.push_back(get(n));
  return block_diag(blocks);
}

template <class Get>
Mat stack_edges(const std::vector<QsrSupply>& edges, Get get) {
  std::vector<Mat> blocks;
  blocks.reserve(edges.size());
  for (const auto& e : edges) blocks.push_back(get(e));
  return block_diag(blocks);
}

// Block-diagonal structure: the minimum eigenvalue of the stack is the minimum
// over per-block minima.
template <class Blocks>
double min_block_eigenvalue(const Blocks& blocks) {
  double m = std::numeric_limits<double>::infinity();
  for (const Mat& b : blocks) m = std::min(m, min_eigenvalue(b));
  return m;
}

}  // namespace

Mat SupplySpec::stacked_s_u() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.u.s(); });
}
Mat SupplySpec::stacked_r_u() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.u.r(); });
}
Mat SupplySpec::stacked_q_u() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.u.q(); });
}
Mat SupplySpec::stacked_s_nu() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.nu.s(); });
}
Mat SupplySpec::stacked_r_nu() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.nu.r(); });
}
Mat SupplySpec::stacked_q_nu() const {
  return stack_nodes(nodes, [](const NodeSupply& n) { return n.nu.q(); });
}
Mat SupplySpec::stacked_s_e() const {
  return stack_edges(edges, [](const QsrSupply& e) { return e.s(); });
}
Mat SupplySpec::stacked_r_e() const {
  return stack_edges(edges, [](const QsrSupply& e) { return e.r(); });
}
Mat SupplySpec::stacked_q_e() const {
  return stack_edges(edges, [](const QsrSupply& e) { return e.q(); });
}

double SupplySpec::epsilon_nu() const {
  std::vector<Mat> b;
  for (const auto& n : nodes) b.push_back(n.nu.q());
  return min_block_eigenvalue(b);
}
double SupplySpec::delta_nu() const {
  std::vector<Mat> b;
  for (const auto& n : nodes) b.push_back(n.nu.r());
  return min_block_eigenvalue(b);
}
double SupplySpec::epsilon_u() const {
  std::vector<Mat> b;
  for (const auto& n : nodes) b.push_back(n.u.q());
  return min_block_eigenvalue(b);
}
double SupplySpec::delta_u() const {
  std::vector<Mat> b;
  for (const auto& n : nodes) b.push_back(n.u.r());
  return min_block_eigenvalue(b);
}
double SupplySpec::epsilon_e() const {
  std::vector<Mat> b;
  for (const auto& e : edges) b.push_back(e.q());
  return min_block_eigenvalue(b);
}
double SupplySpec::delta_e() const {
  std::vector<Mat> b;
  for (const auto& e : edges) b.push_back(e.r());
  return min_block_eigenvalue(b);
}

double desired_supply(const Vec& nu, const Vec& y_u, const Vec& y_nu, double delta,
                      double epsilon, const Mat& s_nu) {
  require_dims(s_nu.rows() == y_nu.size() && s_nu.cols() == nu.size(),
               "desired_supply: S_nu must be (dim y_nu) x (dim nu)");
  return nu.dot(s_nu.transpose() * y_nu) - delta * nu.squaredNorm() -
         epsilon * (y_u.squaredNorm() + y_nu.squaredNorm());
}

SupplyCheck cumulative_supply_check(const std::vector<double>& trace, double tol) {
  SupplyCheck out;
  double sum = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    sum += trace[t];
    out.min_prefix = std::min(out.min_prefix, sum);
    if (sum < -tol && out.ok) {
      out.ok = false;
      out.first_violation = t;
    }
  }
  return out;
}

double check_assumption3(const NetworkTopology& topo, const Mat& s_nu, const Mat& s_e) {
  const Mat& b = topo.incidence();
  require_dims(s_nu.rows() == b.rows() && s_nu.cols() == b.rows(),
               "check_assumption3: S_nu block must be " + std::to_string(b.rows()) + " x " +
                   std::to_string(b.rows()));
  require_dims(s_e.rows() == b.cols() && s_e.cols() == b.cols(),
               "check_assumption3: S_e block must be " + std::to_string(b.cols()) + " x " +
                   std::to_string(b.cols()));
  return max_abs(b.transpose() * s_nu.transpose() - s_e * b.transpose());
}

Mat b_delta(const NetworkTopology& topo, double epsilon_e, double x) {
  const Mat& b = topo.incidence();
  return epsilon_e * Mat::Identity(b.cols(), b.cols()) + x * (b.transpose() * b);
}

Mat b_epsilon(const NetworkTopology& topo, double delta_e, double y) {
  const Mat& b = topo.incidence();
  return y * Mat::Identity(b.rows(), b.rows()) + delta_e * (b * b.transpose());
}

Assumption4Report check_assumption4(const NetworkTopology& topo, double epsilon_e,
                                    double delta_e, double alpha, double beta) {
  Assumption4Report r;
  // With no edges, B_delta is 0x0 and its eigenvalue set is {eps_e} by convention.
  const Mat bd = b_delta(topo, epsilon_e, alpha);
  r.lambda_min_b_delta = bd.rows() == 0 ? epsilon_e : min_eigenvalue(bd);
  r.lambda_min_b_epsilon = min_eigenvalue(b_epsilon(topo, delta_e, beta));
  return r;
}

std::pair<double, double> alpha_beta(const std::vector<DesiredSupplyParams>& desired) {
  if (desired.empty()) throw InvalidParameter("alpha_beta: no nodes");
  double a = desired.front().delta, b = desired.front().epsilon;
  for (const auto& d : desired) {
    a = std::min(a, d.delta);
    b = std::min(b, d.epsilon);
  }
  return {a, b};
}

SupplyBoundSeries network_supply_bound(const std::vector<IoRecord>& trace,
                                       const SupplySpec& spec,
                                       const std::vector<DesiredSupplyParams>& desired,
                                       const NetworkTopology& topo, double tol) {
  require_dims(desired.size() == spec.nodes.size(),
               "network_supply_bound: desired supplies do not match node count");
  const auto [alpha, beta] = alpha_beta(desired);
  const Mat bd = b_delta(topo, spec.edges.empty() ? 0.0 : spec.epsilon_e(), alpha);
  const Mat be = b_epsilon(topo, spec.edges.empty() ? 0.0 : spec.delta_e(), beta);

  SupplyBoundSeries out;
  out.lhs.reserve(trace.size());
  out.rhs.reserve(trace.size());
  out.min_margin = std::numeric_limits<double>::infinity();
  out.max_lhs = -std::numeric_limits<double>::infinity();
  double lhs = 0.0, rhs = 0.0;
  for (const IoRecord& io : trace) {
    double step_lhs = 0.0;
    Eigen::Index nu_off = 0, yu_off = 0, ynu_off = 0;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
      const auto& n = spec.nodes[i];
      const Eigen::Index pn = n.nu.input_dim(), on = n.nu.output_dim(), ou = n.u.output_dim();
      step_lhs += desired_supply(io.nu.segment(nu_off, pn), io.y_u.segment(yu_off, ou),
                                 io.y_nu.segment(ynu_off, on), desired[i].delta,
                                 desired[i].epsilon, n.nu.s());
      nu_off += pn;
      yu_off += ou;
      ynu_off += on;
    }
    Eigen::Index mu_off = 0, om_off = 0;
    for (const auto& e : spec.edges) {
      step_lhs += eval_supply(e, io.mu.segment(mu_off, e.input_dim()),
                              io.omega.segment(om_off, e.output_dim()));
      mu_off += e.input_dim();
      om_off += e.output_dim();
    }
    const double step_rhs = -(io.omega.dot(bd * io.omega) + io.y_nu.dot(be * io.y_nu) +
                              beta * io.y_u.squaredNorm());
    lhs += step_lhs;
    rhs += step_rhs;
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.min_margin = std::min(out.min_margin, rhs - lhs);
    out.max_lhs = std::max(out.max_lhs, lhs);
    if (lhs > rhs + tol || lhs > tol) out.ok = false;
  }
  if (trace.empty()) {
    out.min_margin = 0.0;
    out.max_lhs = 0.0;
  }
  return out;
}

}  // namespace dissipanet
