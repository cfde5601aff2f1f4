#include "dissipanet/netmodel.hpp"

#include <string>

#include "dissipanet/errors.hpp"

namespace dissipanet {

NetworkTopology::NetworkTopology(int node_count, std::vector<EdgeEnds> edges, int port_dim)
    : node_count_(node_count), port_dim_(port_dim), edges_(std::move(edges)) {
  if (node_count_ < 1) throw InvalidParameter("topology needs at least one node");
  if (port_dim_ < 1) throw InvalidParameter("port dimension must be positive");
  const int m = static_cast<int>(edges_.size());
  scalar_b_ = Mat::Zero(node_count_, m);
  for (int k = 0; k < m; ++k) {
    const auto& e = edges_[static_cast<size_t>(k)];
    if (e.positive < 0 || e.positive >= node_count_ || e.negative < 0 ||
        e.negative >= node_count_)
      throw InvalidParameter("edge " + std::to_string(k) + " references a missing node");
    if (e.positive == e.negative)
      throw InvalidParameter("edge " + std::to_string(k) + " is a self-loop");
    scalar_b_(e.positive, k) = 1.0;
    scalar_b_(e.negative, k) = -1.0;
  }
  b_ = Mat::Zero(node_count_ * port_dim_, m * port_dim_);
  for (int i = 0; i < node_count_; ++i)
    for (int k = 0; k < m; ++k)
      if (scalar_b_(i, k) != 0.0)
        b_.block(i * port_dim_, k * port_dim_, port_dim_, port_dim_) =
            scalar_b_(i, k) * Mat::Identity(port_dim_, port_dim_);
}

NetworkTopology NetworkTopology::ring(int node_count, int port_dim) {
  std::vector<EdgeEnds> edges;
  for (int i = 0; i < node_count; ++i) edges.push_back({i, (i + 1) % node_count});
  return NetworkTopology(node_count, std::move(edges), port_dim);
}

CouplingInputs couple(const Vec& y_nu, const Vec& omega, const NetworkTopology& topo) {
  const Mat& b = topo.incidence();
  require_dims(y_nu.size() == b.rows(),
               "couple: y_nu block has " + std::to_string(y_nu.size()) + " rows, incidence expects " +
                   std::to_string(b.rows()));
  require_dims(omega.size() == b.cols(),
               "couple: omega block has " + std::to_string(omega.size()) +
                   " rows, incidence expects " + std::to_string(b.cols()));
  return {b * omega, -(b.transpose() * y_nu)};
}

Network::Network(std::vector<std::shared_ptr<const NodeSystem>> nodes,
                 std::vector<std::shared_ptr<const EdgeSystem>> edges, NetworkTopology topo)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), topo_(std::move(topo)) {
  if (static_cast<int>(nodes_.size()) != topo_.node_count())
    throw DimensionError("network: " + std::to_string(nodes_.size()) + " nodes but topology has " +
                         std::to_string(topo_.node_count()));
  if (static_cast<int>(edges_.size()) != topo_.edge_count())
    throw DimensionError("network: " + std::to_string(edges_.size()) + " edges but topology has " +
                         std::to_string(topo_.edge_count()));
  const int d = topo_.port_dim();
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = *nodes_[i];
    if (n.has_feedthrough())
      throw InvalidParameter("node " + std::to_string(i) +
                             ": outputs with input feedthrough are not supported");
    const NodeDims nd = n.dims();
    if (nd.coupling != d || nd.output_nu != d)
      throw DimensionError("node " + std::to_string(i) + ": coupling ports must have dimension " +
                           std::to_string(d));
    x_slices_.push_back({x_dim_, nd.state});
    u_slices_.push_back({u_dim_, nd.control});
    nu_slices_.push_back({nu_dim_, nd.coupling});
    yu_slices_.push_back({yu_dim_, nd.output_u});
    ynu_slices_.push_back({ynu_dim_, nd.output_nu});
    x_dim_ += nd.state;
    u_dim_ += nd.control;
    nu_dim_ += nd.coupling;
    yu_dim_ += nd.output_u;
    ynu_dim_ += nd.output_nu;
  }
  for (size_t k = 0; k < edges_.size(); ++k) {
    const EdgeDims ed = edges_[k]->dims();
    if (ed.input != d || ed.output != d)
      throw DimensionError("edge " + std::to_string(k) + ": ports must have dimension " +
                           std::to_string(d));
    z_slices_.push_back({z_dim_, ed.state});
    mu_slices_.push_back({mu_dim_, ed.input});
    omega_slices_.push_back({omega_dim_, ed.output});
    z_dim_ += ed.state;
    mu_dim_ += ed.input;
    omega_dim_ += ed.output;
  }
}

NetworkState Network::zero_state() const { return {Vec::Zero(x_dim_), Vec::Zero(z_dim_), 0}; }

void Network::check_state(const NetworkState& s) const {
  require_dims(s.x.size() == x_dim_, "network: node state has " + std::to_string(s.x.size()) +
                                         " entries, expected " + std::to_string(x_dim_));
  require_dims(s.z.size() == z_dim_, "network: edge state has " + std::to_string(s.z.size()) +
                                         " entries, expected " + std::to_string(z_dim_));
}

CouplingSnapshot Network::coupling(const NetworkState& s) const {
  check_state(s);
  CouplingSnapshot c;
  c.y_u.resize(yu_dim_);
  c.y_nu.resize(ynu_dim_);
  for (int i = 0; i < node_count(); ++i) {
    const Vec xi = segment(s.x, x_slices_[static_cast<size_t>(i)]);
    c.y_u.segment(yu_slices_[static_cast<size_t>(i)].offset,
                  yu_slices_[static_cast<size_t>(i)].size) = nodes_[static_cast<size_t>(i)]->output_u(xi);
    c.y_nu.segment(ynu_slices_[static_cast<size_t>(i)].offset,
                   ynu_slices_[static_cast<size_t>(i)].size) =
        nodes_[static_cast<size_t>(i)]->output_nu(xi);
  }
  const Mat& b = topo_.incidence();
  c.mu = -(b.transpose() * c.y_nu);
  c.omega.resize(omega_dim_);
  for (int k = 0; k < edge_count(); ++k) {
    const auto zs = z_slices_[static_cast<size_t>(k)];
    const auto ms = mu_slices_[static_cast<size_t>(k)];
    const auto os = omega_slices_[static_cast<size_t>(k)];
    c.omega.segment(os.offset, os.size) =
        edges_[static_cast<size_t>(k)]->output(segment(s.z, zs), segment(c.mu, ms));
  }
  c.nu = couple(c.y_nu, c.omega, topo_).nu;
  return c;
}

NetworkState Network::advance(const NetworkState& s, const Vec& u,
                              const CouplingSnapshot& c) const {
  check_state(s);
  require_dims(u.size() == u_dim_, "network: control vector has " + std::to_string(u.size()) +
                                       " entries, expected " + std::to_string(u_dim_));
  NetworkState next{Vec(x_dim_), Vec(z_dim_), s.t + 1};
  for (int i = 0; i < node_count(); ++i) {
    const auto xs = x_slices_[static_cast<size_t>(i)];
    const Vec xi = nodes_[static_cast<size_t>(i)]->step(
        segment(s.x, xs), segment(u, u_slices_[static_cast<size_t>(i)]),
        segment(c.nu, nu_slices_[static_cast<size_t>(i)]));
    if (!xi.allFinite())
      throw NumericalDivergence("node " + std::to_string(i) + " state is not finite at step " +
                                    std::to_string(s.t + 1),
                                "node " + std::to_string(i), static_cast<long>(s.t + 1));
    next.x.segment(xs.offset, xs.size) = xi;
  }
  for (int k = 0; k < edge_count(); ++k) {
    const auto zs = z_slices_[static_cast<size_t>(k)];
    const Vec zk = edges_[static_cast<size_t>(k)]->step(
        segment(s.z, zs), segment(c.mu, mu_slices_[static_cast<size_t>(k)]));
    if (!zk.allFinite())
      throw NumericalDivergence("edge " + std::to_string(k) + " state is not finite at step " +
                                    std::to_string(s.t + 1),
                                "edge " + std::to_string(k), static_cast<long>(s.t + 1));
    next.z.segment(zs.offset, zs.size) = zk;
  }
  return next;
}

std::pair<NetworkState, IoRecord> Network::step(const NetworkState& s, const Vec& u) const {
  const CouplingSnapshot c = coupling(s);
  NetworkState next = advance(s, u, c);
  return {std::move(next), IoRecord{u, c.nu, c.y_u, c.y_nu, c.mu, c.omega}};
}

}  // namespace dissipanet
