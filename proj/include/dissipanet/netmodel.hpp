#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dissipanet/linalg.hpp"

namespace dissipanet {

/// Port dimensions of a node subsystem.
///   x' = f(x, u, nu),  y_u = g(x),  y_nu = h(x)
struct NodeDims {
  int state = 0;     // n_i
  int control = 0;   // m_i
  int coupling = 0;  // p_i (dimension of nu)
  int output_u = 0;  // dimension of y_u
  int output_nu = 0; // dimension of y_nu
};

/// Discrete-time node subsystem. The origin is an equilibrium.
///
/// Outputs are functions of the state only. A model whose physics needs
/// feedthrough from u or nu into its outputs must report it through
/// `has_feedthrough()`; such models are rejected by `Network`.
class NodeSystem {
 public:
  virtual ~NodeSystem() = default;

  virtual NodeDims dims() const = 0;
  virtual Vec step(const Vec& x, const Vec& u, const Vec& nu) const = 0;
  virtual Vec output_u(const Vec& x) const = 0;
  virtual Vec output_nu(const Vec& x) const = 0;
  virtual bool has_feedthrough() const { return false; }
};

struct EdgeDims {
  int state = 0;   // q_k
  int input = 0;   // r_k (dimension of mu)
  int output = 0;  // s_k (dimension of omega)
};

/// Discrete-time edge subsystem: z' = g(z, mu), omega = j(z, mu).
/// Edge outputs may depend on mu; node outputs never depend on nu, so the
/// interconnection has no algebraic loop.
class EdgeSystem {
 public:
  virtual ~EdgeSystem() = default;

  virtual EdgeDims dims() const = 0;
  virtual Vec step(const Vec& z, const Vec& mu) const = 0;
  virtual Vec output(const Vec& z, const Vec& mu) const = 0;
};

/// Directed edge with its endpoints labelled: `positive` gets +1 in the
/// incidence matrix, `negative` gets -1.
struct EdgeEnds {
  int positive = 0;
  int negative = 0;
};

/// Node/edge interconnection through the incidence matrix B.
///   nu = B * omega,   mu = -B^T * y_nu
class NetworkTopology {
 public:
  /// Scalar incidence matrix lifted with I_{port_dim}.
  NetworkTopology(int node_count, std::vector<EdgeEnds> edges, int port_dim = 1);

  /// Directed ring 0 -> 1 -> ... -> N-1 -> 0 with the tail of each edge as its
  /// positive end.
  static NetworkTopology ring(int node_count, int port_dim = 1);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int port_dim() const { return port_dim_; }
  const std::vector<EdgeEnds>& edges() const { return edges_; }

  /// N x M scalar incidence matrix.
  const Mat& scalar_incidence() const { return scalar_b_; }
  /// (N * port_dim) x (M * port_dim) block incidence matrix.
  const Mat& incidence() const { return b_; }

 private:
  int node_count_;
  int port_dim_;
  std::vector<EdgeEnds> edges_;
  Mat scalar_b_;
  Mat b_;
};

struct CouplingInputs {
  Vec nu;  // stacked node coupling inputs
  Vec mu;  // stacked edge inputs
};

/// nu = B omega and mu = -B^T y_nu. Throws DimensionError on mismatch.
CouplingInputs couple(const Vec& y_nu, const Vec& omega, const NetworkTopology& topo);

/// Stacked node and edge states.
struct NetworkState {
  Vec x;
  Vec z;
  std::int64_t t = 0;
};

/// Realized port signals of one synchronous step.
struct IoRecord {
  Vec u;
  Vec nu;
  Vec y_u;
  Vec y_nu;
  Vec mu;
  Vec omega;
};

/// Port signals available before the controls are chosen.
struct CouplingSnapshot {
  Vec y_u;
  Vec y_nu;
  Vec mu;
  Vec omega;
  Vec nu;
};

struct Slice {
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// A set of node and edge subsystems with their interconnection. Immutable
/// after construction.
class Network {
 public:
  Network(std::vector<std::shared_ptr<const NodeSystem>> nodes,
          std::vector<std::shared_ptr<const EdgeSystem>> edges, NetworkTopology topo);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const NetworkTopology& topology() const { return topo_; }
  const NodeSystem& node(int i) const { return *nodes_[static_cast<size_t>(i)]; }
  const EdgeSystem& edge(int k) const { return *edges_[static_cast<size_t>(k)]; }

  Eigen::Index state_dim() const { return x_dim_; }
  Eigen::Index edge_state_dim() const { return z_dim_; }
  Eigen::Index control_dim() const { return u_dim_; }

  Slice x_slice(int i) const { return x_slices_[static_cast<size_t>(i)]; }
  Slice u_slice(int i) const { return u_slices_[static_cast<size_t>(i)]; }
  Slice nu_slice(int i) const { return nu_slices_[static_cast<size_t>(i)]; }
  Slice y_u_slice(int i) const { return yu_slices_[static_cast<size_t>(i)]; }
  Slice z_slice(int k) const { return z_slices_[static_cast<size_t>(k)]; }
  Slice mu_slice(int k) const { return mu_slices_[static_cast<size_t>(k)]; }
  Slice omega_slice(int k) const { return omega_slices_[static_cast<size_t>(k)]; }

  NetworkState zero_state() const;

  /// Outputs and coupled inputs at the current state.
  CouplingSnapshot coupling(const NetworkState& s) const;

  /// Advance with controls `u` given a snapshot taken at `s`.
  NetworkState advance(const NetworkState& s, const Vec& u, const CouplingSnapshot& c) const;

  /// One synchronous step. Throws NumericalDivergence naming the component.
  std::pair<NetworkState, IoRecord> step(const NetworkState& s, const Vec& u) const;

 private:
  void check_state(const NetworkState& s) const;

  std::vector<std::shared_ptr<const NodeSystem>> nodes_;
  std::vector<std::shared_ptr<const EdgeSystem>> edges_;
  NetworkTopology topo_;
  std::vector<Slice> x_slices_, u_slices_, nu_slices_, yu_slices_, ynu_slices_;
  std::vector<Slice> z_slices_, mu_slices_, omega_slices_;
  Eigen::Index x_dim_ = 0, z_dim_ = 0, u_dim_ = 0, nu_dim_ = 0, yu_dim_ = 0, ynu_dim_ = 0;
  Eigen::Index mu_dim_ = 0, omega_dim_ = 0;
};

inline Vec segment(const Vec& v, Slice s) { return v.segment(s.offset, s.size); }

}  // namespace dissipanet
