#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dissipanet/dissipativity.hpp"
#include "dissipanet/netmodel.hpp"
#include "dissipanet/shield.hpp"

namespace dissipanet::microgrid {

/// Buck-converter DGU with RLC filter and resistive load (SI units).
struct DguParams {
  double R = 0.0;
  double L = 0.0;
  double C = 0.0;
  double G = 0.0;
  double Vs = 0.0;
  double Ts = 0.0;

  /// Positivity and forward-Euler stability (Ts R / L < 2, Ts G / C < 2).
  void validate(int node) const;
};

struct LineParams {
  double Rl = 0.0;
  double Ll = 0.0;
  double Ts = 0.0;

  void validate(int edge) const;
};

/// Which QSR certificate the node supplies use.
///   discrete:   certified for the forward-Euler node (default)
///   continuous: the continuous-time constants S = 1, R = 0, Q = R_i or G_i
enum class SupplyModel { discrete, continuous };

SupplyModel parse_supply_model(const std::string& s);
std::string to_string(SupplyModel m);

struct MicrogridParams {
  std::vector<DguParams> nodes;
  std::vector<LineParams> lines;
  NetworkTopology topo = NetworkTopology(1, {});
  Vec v_ref;
  Vec reward_k;

  void validate() const;
};

/// Four DGUs on a ring, Ts = 1e-5 s, 48 V reference.
MicrogridParams default_ring();

/// One forward-Euler DGU step in physical coordinates. u must lie in (0, 1).
std::pair<double, double> dgu_step(const DguParams& p, double I, double V, double u, double nu);

/// One forward-Euler line step: I' = I - (Ts / Ll)(Rl I + mu).
double line_step(const LineParams& p, double Il, double mu);

/// Forced equilibrium. Line currents flow from the positive to the negative
/// end of each edge, so the edge output is omega = -I_l.
struct EquilibriumPoint {
  Vec I, V, u, nu;
  Vec Il, mu;
  double node_residual = 0.0;
  double edge_residual = 0.0;
};

EquilibriumPoint compute_equilibrium(const Vec& v_ref, const std::vector<DguParams>& nodes,
                                     const std::vector<LineParams>& lines,
                                     const NetworkTopology& topo);

/// DGU in coordinates shifted to its equilibrium, exact linear form.
/// State [I~, V~], control u~, coupling nu~, y_u = I~, y_nu = V~.
/// `g_actual` differs from the nominal conductance after a load change and
/// adds the constant forcing -(Ts / C)(g_actual - G) V_bar.
class ShiftedDgu final : public NodeSystem {
 public:
  ShiftedDgu(DguParams p, double v_bar, double g_actual);
  explicit ShiftedDgu(DguParams p, double v_bar = 0.0) : ShiftedDgu(p, v_bar, p.G) {}

  NodeDims dims() const override { return {2, 1, 1, 1, 1}; }
  Vec step(const Vec& x, const Vec& u, const Vec& nu) const override;
  Vec output_u(const Vec& x) const override { return x.head(1); }
  Vec output_nu(const Vec& x) const override { return x.tail(1); }

  const DguParams& params() const { return p_; }

 private:
  DguParams p_;
  double v_bar_;
  double g_act_;
};

/// Shifted line with midpoint output omega~ = -(I~ + I~') / 2, which is
/// lossless with respect to (S_e = 1, R_e = 0, Q_e = Rl).
class ShiftedLine final : public EdgeSystem {
 public:
  explicit ShiftedLine(LineParams p);

  EdgeDims dims() const override { return {1, 1, 1}; }
  Vec step(const Vec& z, const Vec& mu) const override;
  Vec output(const Vec& z, const Vec& mu) const override;

  /// Storage p I~^2 whose increment equals the edge supply exactly.
  double storage(double il) const;

 private:
  LineParams p_;
};

/// Storage of the shifted DGU, L I~^2 / (2 Ts) + C V~^2 / (2 Ts).
double dgu_storage(const DguParams& p, double I, double V);

/// Shifted network. `g_actual` overrides the load conductances (empty keeps
/// the nominal ones).
Network make_shifted_network(const MicrogridParams& mg, const EquilibriumPoint& eq,
                             const std::vector<double>& g_actual = {});

/// Physical state layout: x = [I_0, V_0, I_1, V_1, ...], z = [Il_0, Il_1, ...].
NetworkState shift(const NetworkState& physical, const EquilibriumPoint& eq);
NetworkState unshift(const NetworkState& shifted, const EquilibriumPoint& eq);

double reward(double V, double v_bar, double k);

SupplySpec microgrid_supplies(const MicrogridParams& mg, SupplyModel model = SupplyModel::discrete);

/// Duty-cycle box (0, 1) in shifted coordinates: [-u_bar, 1 - u_bar].
ActionBox shifted_duty_box(double u_bar);

/// Shield defaults: delta_d = R_nu, epsilon_d = scale * min(Q_u, Q_nu), which
/// keeps u~ = 0 feasible at every state.
ShieldConfig default_shield(const SupplySpec& supplies, const EquilibriumPoint& eq, double eta,
                            double epsilon_scale, bool with_box);

}  // namespace dissipanet::microgrid
