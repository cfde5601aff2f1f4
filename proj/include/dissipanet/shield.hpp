#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dissipanet/dissipativity.hpp"
#include "dissipanet/linalg.hpp"
#include "dissipanet/netmodel.hpp"

namespace dissipanet {

/// The projection keeps this distance from the box faces.
inline constexpr double kBoxMargin = 1e-6;

/// Closed action box, in the same coordinates as the control.
struct ActionBox {
  Vec lo;
  Vec hi;

  /// [lo + margin, hi - margin]; throws InvalidParameter when that is empty.
  ActionBox shrunk(double margin = kBoxMargin) const;
  Vec clip(const Vec& u) const;
  bool contains(const Vec& u) const;
};

struct NodeShieldConfig {
  double delta_d = 0.0;
  double epsilon_d = 0.0;
  double eta = 0.5;  // in [0, 1]
  std::optional<ActionBox> box;

  void validate(int node) const;
};

struct ShieldConfig {
  bool enabled = true;
  std::vector<NodeShieldConfig> nodes;

  std::vector<DesiredSupplyParams> desired() const;
};

/// Running barrier b(t) = -sum_{tau=t0}^{t-1} w_tilde(tau).
class BarrierState {
 public:
  explicit BarrierState(std::int64_t t0 = 0) : t0_(t0), t_(t0) {}

  double value() const { return b_; }
  std::int64_t t0() const { return t0_; }
  std::int64_t t() const { return t_; }

  void update(double w_tilde) {
    b_ -= w_tilde;
    ++t_;
  }
  void reset(std::int64_t t0) {
    b_ = 0.0;
    t0_ = t0;
    t_ = t0;
  }

 private:
  double b_ = 0.0;
  std::int64_t t0_;
  std::int64_t t_;
};

/// Supplies realized by one node at one step.
struct NodeSupplyValues {
  double w_u = 0.0;
  double w_nu = 0.0;
  double w_n = 0.0;
  double w_d = 0.0;
  double w_tilde = 0.0;
};

NodeSupplyValues node_supplies(const NodeSupply& supply, const DesiredSupplyParams& desired,
                               const Vec& u, const Vec& nu, const Vec& y_u, const Vec& y_nu);

/// The dissipativity-ensuring set as u^T r u - c^T u + k >= 0, which equals
/// -w_tilde(u) + eta b.
struct DissipConstraint {
  Mat r;
  Vec c;
  double k = 0.0;

  static DissipConstraint build(const NodeSupply& supply, const DesiredSupplyParams& desired,
                                double eta, double barrier, const Vec& nu, const Vec& y_u,
                                const Vec& y_nu);

  double eval(const Vec& u) const;
  Eigen::Index dim() const { return c.size(); }
};

struct Projection {
  Vec u;
  Vec a;  // u - u_ff
  double residual = 0.0;  // constraint value at u
};

/// Min-norm correction of u_ff onto the constraint set, optionally within
/// `box` shrunk by kBoxMargin. Scalar controls are solved exactly for any r;
/// vector controls only when r = 0. Ties go to the larger u.
Projection project(const DissipConstraint& con, const Vec& u_ff,
                   const std::optional<ActionBox>& box = std::nullopt);

/// Maximizer of the constraint value over the shrunk box (or over all u when
/// there is no box and a maximizer exists; u_ff otherwise).
Vec most_feasible(const DissipConstraint& con, const Vec& u_ff,
                  const std::optional<ActionBox>& box);

enum class FeedforwardMode { none, knn, ridge };

FeedforwardMode parse_feedforward_mode(const std::string& s);
std::string to_string(FeedforwardMode m);

struct FeedforwardConfig {
  FeedforwardMode mode = FeedforwardMode::knn;
  int k = 5;
  double lambda = 1e-3;
  int window = 1;        // past episodes kept for fitting
  int capacity = 4096;   // max points used in a fit
};

/// Per-node map from local state to the accumulated shield correction.
/// Samples are buffered during an episode and the model is refit only in
/// `end_episode`.
class FeedforwardStore {
 public:
  FeedforwardStore(int state_dim, int control_dim, FeedforwardConfig cfg = {});

  void record(const Vec& x, const Vec& correction);
  void end_episode();
  Vec predict(const Vec& x) const;

  const FeedforwardConfig& config() const { return cfg_; }
  std::size_t fitted_size() const { return static_cast<std::size_t>(fit_x_.rows()); }
  std::size_t pending_size() const { return pending_x_.size(); }

  nlohmann::json to_json() const;
  static FeedforwardStore from_json(const nlohmann::json& j);

 private:
  void refit();

  int n_, m_;
  FeedforwardConfig cfg_;
  std::vector<Vec> pending_x_, pending_y_;
  std::vector<std::vector<Vec>> hist_x_, hist_y_;
  Mat fit_x_;  // rows are samples
  Mat fit_y_;
  Mat ridge_w_;  // (n + 1) x m, last row is the bias
};

struct DecResult {
  Vec u_rl;
  Vec u_ff;
  Vec u_cbf;
  Vec u_dec;
  double constraint_value = 0.0;  // at u_dec
  bool fallback = false;          // projection failed; most-feasible action deployed
};

/// Local inputs of one node's shield. Nothing here refers to another node.
struct LocalView {
  const NodeSystem* system = nullptr;
  const NodeSupply* supply = nullptr;
  const NodeShieldConfig* config = nullptr;
  Vec x;
  Vec nu;
  double barrier = 0.0;
};

/// u_DEC = u_FF + u_CBF with u_FF = u_RL + store prediction. With the shield
/// disabled the correction only clips to the box.
DecResult dec_control(const LocalView& view, const Vec& u_rl, const FeedforwardStore* store,
                      bool shield_enabled);

}  // namespace dissipanet
