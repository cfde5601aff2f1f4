#include "dissipanet/microgrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dissipanet/errors.hpp"

namespace dissipanet::microgrid {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void DguParams::validate(int node) const {
  const std::string who = "DGU " + std::to_string(node);
  if (!positive(R) || !positive(L) || !positive(C) || !positive(G) || !positive(Vs) || !positive(Ts))
    throw InvalidParameter(who + ": R, L, C, G, Vs and Ts must be positive");
  if (Ts * R / L >= 2.0) throw InvalidParameter(who + ": Ts R / L >= 2 (Euler unstable)");
  if (Ts * G / C >= 2.0) throw InvalidParameter(who + ": Ts G / C >= 2 (Euler unstable)");
}

void LineParams::validate(int edge) const {
  const std::string who = "line " + std::to_string(edge);
  if (!positive(Rl) || !positive(Ll) || !positive(Ts))
    throw InvalidParameter(who + ": Rl, Ll and Ts must be positive");
  if (Ts * Rl / Ll >= 2.0) throw InvalidParameter(who + ": Ts Rl / Ll >= 2 (Euler unstable)");
}

SupplyModel parse_supply_model(const std::string& s) {
  if (s == "discrete") return SupplyModel::discrete;
  if (s == "continuous") return SupplyModel::continuous;
  throw InvalidParameter("unknown supply model '" + s + "' (expected discrete or continuous)");
}

std::string to_string(SupplyModel m) {
  return m == SupplyModel::discrete ? "discrete" : "continuous";
}

void MicrogridParams::validate() const {
  if (static_cast<int>(nodes.size()) != topo.node_count())
    throw InvalidParameter("microgrid: " + std::to_string(nodes.size()) +
                           " DGUs but the topology has " + std::to_string(topo.node_count()) +
                           " nodes");
  if (static_cast<int>(lines.size()) != topo.edge_count())
    throw InvalidParameter("microgrid: " + std::to_string(lines.size()) +
                           " lines but the topology has " + std::to_string(topo.edge_count()) +
                           " edges");
  if (topo.port_dim() != 1) throw InvalidParameter("microgrid: ports are scalar");
  if (v_ref.size() != static_cast<Eigen::Index>(nodes.size()))
    throw InvalidParameter("microgrid: reference voltage count does not match the DGUs");
  if (reward_k.size() != static_cast<Eigen::Index>(nodes.size()))
    throw InvalidParameter("microgrid: reward weight count does not match the DGUs");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].validate(static_cast<int>(i));
    if (!positive(reward_k(static_cast<Eigen::Index>(i))))
      throw InvalidParameter("microgrid: reward weight of node " + std::to_string(i) +
                             " must be positive");
  }
  for (std::size_t k = 0; k < lines.size(); ++k) lines[k].validate(static_cast<int>(k));
}

MicrogridParams default_ring() {
  constexpr double ts = 1e-5;
  const double r[] = {0.2, 0.3, 0.5, 0.1};
  const double l[] = {1.8e-3, 2.0e-3, 3.0e-3, 2.2e-3};
  const double c[] = {2.2e-3, 1.9e-3, 1.7e-3, 2.5e-3};
  const double g[] = {1.0 / 16.7, 1.0 / 50.0, 1.0 / 16.7, 1.0 / 20.0};
  const double rl[] = {0.07, 0.05, 0.08, 0.06};
  const double ll[] = {2.1e-6, 2.3e-6, 2.0e-6, 1.8e-6};
  MicrogridParams mg;
  for (int i = 0; i < 4; ++i) {
    mg.nodes.push_back({r[i], l[i], c[i], g[i], 100.0, ts});
    mg.lines.push_back({rl[i], ll[i], ts});
  }
  mg.topo = NetworkTopology::ring(4);
  mg.v_ref = Vec::Constant(4, 48.0);
  mg.reward_k = Vec::Ones(4);
  return mg;
}

std::pair<double, double> dgu_step(const DguParams& p, double I, double V, double u, double nu) {
  if (!(u > 0.0 && u < 1.0))
    throw InvalidParameter("dgu_step: duty cycle " + std::to_string(u) + " outside (0, 1)");
  const double i_next = I - (p.Ts / p.L) * (p.R * I + V - u * p.Vs);
  const double v_next = V + (p.Ts / p.C) * (I - p.G * V + nu);
  return {i_next, v_next};
}

double line_step(const LineParams& p, double Il, double mu) {
  return Il - (p.Ts / p.Ll) * (p.Rl * Il + mu);
}

EquilibriumPoint compute_equilibrium(const Vec& v_ref, const std::vector<DguParams>& nodes,
                                     const std::vector<LineParams>& lines,
                                     const NetworkTopology& topo) {
  const Mat& b = topo.scalar_incidence();
  require_dims(v_ref.size() == b.rows() && static_cast<Eigen::Index>(nodes.size()) == b.rows(),
               "compute_equilibrium: node count mismatch");
  require_dims(static_cast<Eigen::Index>(lines.size()) == b.cols(),
               "compute_equilibrium: line count mismatch");
  if (!v_ref.allFinite()) throw InvalidParameter("compute_equilibrium: non-finite reference");
  EquilibriumPoint eq;
  eq.V = v_ref;
  eq.mu = -(b.transpose() * v_ref);
  eq.Il.resize(b.cols());
  for (Eigen::Index k = 0; k < b.cols(); ++k)
    eq.Il(k) = -eq.mu(k) / lines[static_cast<std::size_t>(k)].Rl;
  eq.nu = b * (-eq.Il);
  const Eigen::Index n = b.rows();
  eq.I.resize(n);
  eq.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = nodes[static_cast<std::size_t>(i)];
    eq.I(i) = p.G * eq.V(i) - eq.nu(i);
    eq.u(i) = (p.R * eq.I(i) + eq.V(i)) / p.Vs;
    if (!(eq.u(i) > 0.0 && eq.u(i) < 1.0))
      throw InvalidParameter("compute_equilibrium: node " + std::to_string(i) +
                             " needs duty cycle " + std::to_string(eq.u(i)) + " outside (0, 1)");
  }
  double node_res = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = nodes[static_cast<std::size_t>(i)];
    node_res = std::max(node_res, std::abs(p.R * eq.I(i) + eq.V(i) - eq.u(i) * p.Vs));
    node_res = std::max(node_res, std::abs(eq.I(i) - p.G * eq.V(i) + eq.nu(i)));
  }
  double edge_res = 0.0;
  for (Eigen::Index k = 0; k < b.cols(); ++k)
    edge_res = std::max(edge_res,
                        std::abs(lines[static_cast<std::size_t>(k)].Rl * eq.Il(k) + eq.mu(k)));
  eq.node_residual = node_res;
  eq.edge_residual = edge_res;
  return eq;
}

ShiftedDgu::ShiftedDgu(DguParams p, double v_bar, double g_actual)
    : p_(p), v_bar_(v_bar), g_act_(g_actual) {}

Vec ShiftedDgu::step(const Vec& x, const Vec& u, const Vec& nu) const {
  require_dims(x.size() == 2 && u.size() == 1 && nu.size() == 1, "ShiftedDgu: wrong port sizes");
  const double a = p_.Ts / p_.L;
  const double c = p_.Ts / p_.C;
  Vec out(2);
  out(0) = x(0) - a * (p_.R * x(0) + x(1) - u(0) * p_.Vs);
  out(1) = x(1) + c * (x(0) - g_act_ * x(1) + nu(0));
  if (g_act_ != p_.G) out(1) -= c * (g_act_ - p_.G) * v_bar_;
  return out;
}

ShiftedLine::ShiftedLine(LineParams p) : p_(p) {}

Vec ShiftedLine::step(const Vec& z, const Vec& mu) const {
  require_dims(z.size() == 1 && mu.size() == 1, "ShiftedLine: wrong port sizes");
  return Vec::Constant(1, line_step(p_, z(0), mu(0)));
}

Vec ShiftedLine::output(const Vec& z, const Vec& mu) const {
  require_dims(z.size() == 1 && mu.size() == 1, "ShiftedLine: wrong port sizes");
  return Vec::Constant(1, -0.5 * (z(0) + line_step(p_, z(0), mu(0))));
}

double ShiftedLine::storage(double il) const {
  const double x = p_.Ts * p_.Rl / p_.Ll;
  return (1.0 - 0.5 * x) * p_.Ll / (2.0 * p_.Ts) * il * il;
}

double dgu_storage(const DguParams& p, double I, double V) {
  return (p.L * I * I + p.C * V * V) / (2.0 * p.Ts);
}

Network make_shifted_network(const MicrogridParams& mg, const EquilibriumPoint& eq,
                             const std::vector<double>& g_actual) {
  if (!g_actual.empty() && g_actual.size() != mg.nodes.size())
    throw InvalidParameter("make_shifted_network: conductance override has wrong length");
  std::vector<std::shared_ptr<const NodeSystem>> nodes;
  for (std::size_t i = 0; i < mg.nodes.size(); ++i) {
    const double g = g_actual.empty() ? mg.nodes[i].G : g_actual[i];
    nodes.push_back(
        std::make_shared<ShiftedDgu>(mg.nodes[i], eq.V(static_cast<Eigen::Index>(i)), g));
  }
  std::vector<std::shared_ptr<const EdgeSystem>> edges;
  for (const auto& l : mg.lines) edges.push_back(std::make_shared<ShiftedLine>(l));
  return Network(std::move(nodes), std::move(edges), mg.topo);
}

namespace {

NetworkState offset(const NetworkState& s, const EquilibriumPoint& eq, double sign) {
  const Eigen::Index n = eq.V.size();
  require_dims(s.x.size() == 2 * n, "shift: node state has wrong size");
  require_dims(s.z.size() == eq.Il.size(), "shift: edge state has wrong size");
  NetworkState out = s;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.x(2 * i) = s.x(2 * i) + sign * eq.I(i);
    out.x(2 * i + 1) = s.x(2 * i + 1) + sign * eq.V(i);
  }
  out.z = s.z + sign * eq.Il;
  return out;
}

}  // namespace

NetworkState shift(const NetworkState& physical, const EquilibriumPoint& eq) {
  return offset(physical, eq, -1.0);
}

NetworkState unshift(const NetworkState& shifted, const EquilibriumPoint& eq) {
  return offset(shifted, eq, 1.0);
}

double reward(double V, double v_bar, double k) {
  const double e = V - v_bar;
  return -k * e * e;
}

SupplySpec microgrid_supplies(const MicrogridParams& mg, SupplyModel model) {
  SupplySpec spec;
  for (const auto& p : mg.nodes) {
    NodeSupply ns;
    if (model == SupplyModel::continuous) {
      ns.u = QsrSupply::scalar(p.R, 1.0, 0.0);
      ns.nu = QsrSupply::scalar(p.G, 1.0, 0.0);
    } else {
      // Bound on the Euler remainder of the storage L I^2/(2Ts) + C V^2/(2Ts),
      // split 1/2 : 1/4 : 1/4 between its three terms.
      const double ts = p.Ts;
      ns.u = QsrSupply::scalar(p.R - 2.0 * ts * (p.R * p.R / p.L + 1.0 / p.C), p.Vs,
                               -ts * p.Vs * p.Vs / p.L);
      ns.nu = QsrSupply::scalar(p.G - 2.0 * ts * (1.0 / p.L + p.G * p.G / p.C), 1.0, -ts / p.C);
    }
    spec.nodes.push_back(ns);
  }
  for (const auto& l : mg.lines) spec.edges.push_back(QsrSupply::scalar(l.Rl, 1.0, 0.0));
  return spec;
}

ActionBox shifted_duty_box(double u_bar) {
  return {Vec::Constant(1, -u_bar), Vec::Constant(1, 1.0 - u_bar)};
}

ShieldConfig default_shield(const SupplySpec& supplies, const EquilibriumPoint& eq, double eta,
                            double epsilon_scale, bool with_box) {
  ShieldConfig cfg;
  for (std::size_t i = 0; i < supplies.nodes.size(); ++i) {
    const auto& ns = supplies.nodes[i];
    NodeShieldConfig n;
    n.delta_d = min_eigenvalue(ns.nu.r());
    n.epsilon_d = epsilon_scale * std::min(min_eigenvalue(ns.u.q()), min_eigenvalue(ns.nu.q()));
    n.eta = eta;
    if (with_box) n.box = shifted_duty_box(eq.u(static_cast<Eigen::Index>(i)));
    cfg.nodes.push_back(n);
  }
  return cfg;
}

}  // namespace dissipanet::microgrid
