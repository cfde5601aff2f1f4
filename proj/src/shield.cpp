#include "dissipanet/shield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "dissipanet/errors.hpp"

namespace dissipanet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo;
  double hi;
};

// Real solution set of r u^2 - c u + k >= 0.
std::vector<Interval> scalar_feasible_set(double r, double c, double k) {
  if (r == 0.0) {
    if (c == 0.0) return k >= 0.0 ? std::vector<Interval>{{-kInf, kInf}} : std::vector<Interval>{};
    const double u0 = k / c;
    return c > 0.0 ? std::vector<Interval>{{-kInf, u0}} : std::vector<Interval>{{u0, kInf}};
  }
  const double disc = c * c - 4.0 * r * k;
  if (r > 0.0 && disc <= 0.0) return {{-kInf, kInf}};
  if (r < 0.0 && disc < 0.0) return {};
  const double sq = std::sqrt(std::max(disc, 0.0));
  const double q = 0.5 * (c + (c >= 0.0 ? sq : -sq));
  double u1, u2;
  if (q == 0.0) {
    u1 = u2 = 0.0;
  } else {
    u1 = q / r;
    u2 = k / q;
  }
  if (u1 > u2) std::swap(u1, u2);
  if (r > 0.0) return {{-kInf, u1}, {u2, kInf}};
  return {{u1, u2}};
}

double scalar_eval(double r, double c, double k, double u) { return r * u * u - c * u + k; }

// Nudges a boundary point into its interval until the constraint value is
// nonnegative or the interval is exhausted.
double polish(double r, double c, double k, double u, const Interval& iv) {
  if (scalar_eval(r, c, k, u) >= 0.0) return u;
  const bool at_lo = std::abs(u - iv.lo) <= std::abs(u - iv.hi);
  const double dir = at_lo ? 1.0 : -1.0;
  double step = std::max(std::abs(u), 1.0) * std::numeric_limits<double>::epsilon();
  for (int i = 0; i < 200; ++i) {
    const double cand = u + dir * step;
    if (cand < iv.lo || cand > iv.hi) break;
    if (scalar_eval(r, c, k, cand) >= 0.0) return cand;
    step *= 2.0;
  }
  return u;
}

Projection project_scalar(const DissipConstraint& con, double u_ff,
                          const std::optional<ActionBox>& box) {
  const double r = con.r(0, 0), c = con.c(0), k = con.k;
  auto feasible = scalar_feasible_set(r, c, k);
  if (box) {
    const ActionBox b = box->shrunk();
    std::vector<Interval> clipped;
    for (const auto& iv : feasible) {
      const double lo = std::max(iv.lo, b.lo(0));
      const double hi = std::min(iv.hi, b.hi(0));
      if (lo <= hi) clipped.push_back({lo, hi});
    }
    feasible = std::move(clipped);
  }
  if (feasible.empty())
    throw InfeasibleConstraint("project: empty feasible set (r=" + std::to_string(r) +
                               ", c=" + std::to_string(c) + ", K=" + std::to_string(k) + ")");

  double best = 0.0, best_dist = kInf;
  const Interval* best_iv = nullptr;
  for (const auto& iv : feasible) {
    const double cand = std::clamp(u_ff, iv.lo, iv.hi);
    const double dist = std::abs(cand - u_ff);
    if (dist < best_dist || (dist == best_dist && cand > best)) {
      best = cand;
      best_dist = dist;
      best_iv = &iv;
    }
  }
  if (best != u_ff) best = polish(r, c, k, best, *best_iv);
  Projection p;
  p.u = Vec::Constant(1, best);
  p.a = Vec::Constant(1, best - u_ff);
  p.residual = scalar_eval(r, c, k, best);
  return p;
}

// min |u - u_ff| s.t. c^T u <= k, u in box. KKT gives u = clip(u_ff - lambda c)
// with c^T u(lambda) nonincreasing in lambda.
Vec affine_box_projection(const Vec& c, double k, const Vec& u_ff, const ActionBox& b) {
  auto u_of = [&](double lambda) { return b.clip(u_ff - lambda * c); };
  Vec u0 = u_of(0.0);
  if (c.dot(u0) <= k) return u0;
  Vec u_min(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    u_min(i) = c(i) > 0.0 ? b.lo(i) : (c(i) < 0.0 ? b.hi(i) : u0(i));
  if (c.dot(u_min) > k)
    throw InfeasibleConstraint("project: box excludes the affine feasible set");
  double lo = 0.0, hi = 1.0;
  while (c.dot(u_of(hi)) > k) {
    hi *= 2.0;
    if (!std::isfinite(hi)) return u_min;
  }
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (c.dot(u_of(mid)) > k)
      lo = mid;
    else
      hi = mid;
  }
  return u_of(hi);
}

}  // namespace

ActionBox ActionBox::shrunk(double margin) const {
  require_dims(lo.size() == hi.size(), "ActionBox: bound sizes differ");
  ActionBox out{lo.array() + margin, hi.array() - margin};
  if ((out.lo.array() > out.hi.array()).any())
    throw InvalidParameter("ActionBox: box is narrower than twice the margin");
  return out;
}

Vec ActionBox::clip(const Vec& u) const {
  require_dims(u.size() == lo.size(), "ActionBox: control has wrong size");
  return u.cwiseMax(lo).cwiseMin(hi);
}

bool ActionBox::contains(const Vec& u) const {
  return u.size() == lo.size() && (u.array() >= lo.array()).all() &&
         (u.array() <= hi.array()).all();
}

void NodeShieldConfig::validate(int node) const {
  const std::string who = "shield node " + std::to_string(node);
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidParameter(who + ": eta must lie in [0, 1]");
  if (!std::isfinite(delta_d) || !std::isfinite(epsilon_d))
    throw InvalidParameter(who + ": desired-supply weights must be finite");
  if (box) {
    if (box->lo.size() != box->hi.size()) throw InvalidParameter(who + ": box bound sizes differ");
    if ((box->lo.array() >= box->hi.array()).any())
      throw InvalidParameter(who + ": box lower bound must be below the upper bound");
  }
}

std::vector<DesiredSupplyParams> ShieldConfig::desired() const {
  std::vector<DesiredSupplyParams> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back({n.delta_d, n.epsilon_d});
  return out;
}

NodeSupplyValues node_supplies(const NodeSupply& supply, const DesiredSupplyParams& desired,
                               const Vec& u, const Vec& nu, const Vec& y_u, const Vec& y_nu) {
  NodeSupplyValues v;
  v.w_u = eval_supply(supply.u, u, y_u);
  v.w_nu = eval_supply(supply.nu, nu, y_nu);
  v.w_n = v.w_u + v.w_nu;
  v.w_d = desired_supply(nu, y_u, y_nu, desired.delta, desired.epsilon, supply.nu.s());
  v.w_tilde = v.w_n - v.w_d;
  return v;
}

DissipConstraint DissipConstraint::build(const NodeSupply& supply,
                                         const DesiredSupplyParams& desired, double eta,
                                         double barrier, const Vec& nu, const Vec& y_u,
                                         const Vec& y_nu) {
  require_dims(y_u.size() == supply.u.output_dim(), "DissipConstraint: y_u has wrong size");
  DissipConstraint con;
  con.r = supply.u.r();
  con.c = supply.u.s().transpose() * y_u;
  const double w_nu = eval_supply(supply.nu, nu, y_nu);
  const double w_d = desired_supply(nu, y_u, y_nu, desired.delta, desired.epsilon, supply.nu.s());
  con.k = y_u.dot(supply.u.q() * y_u) - w_nu + w_d + eta * barrier;
  return con;
}

double DissipConstraint::eval(const Vec& u) const {
  require_dims(u.size() == c.size(), "DissipConstraint: control has wrong size");
  return u.dot(r * u) - c.dot(u) + k;
}

Projection project(const DissipConstraint& con, const Vec& u_ff,
                   const std::optional<ActionBox>& box) {
  require_dims(u_ff.size() == con.dim(), "project: u_ff has wrong size");
  if (box) require_dims(box->lo.size() == con.dim(), "project: box has wrong size");
  if (con.dim() == 1) return project_scalar(con, u_ff(0), box);
  if (max_abs(con.r) != 0.0)
    throw UnsupportedConstraint("project: vector controls need an affine constraint (r = 0)");

  // c^T u <= k
  Projection p;
  if (box) {
    p.u = affine_box_projection(con.c, con.k, u_ff, box->shrunk());
  } else {
    const double excess = con.c.dot(u_ff) - con.k;
    const double cc = con.c.squaredNorm();
    if (cc == 0.0) {
      if (con.k < 0.0) throw InfeasibleConstraint("project: c = 0 and K < 0");
      p.u = u_ff;
    } else {
      p.u = u_ff - (std::max(0.0, excess) / cc) * con.c;
    }
  }
  p.a = p.u - u_ff;
  p.residual = con.eval(p.u);
  return p;
}

Vec most_feasible(const DissipConstraint& con, const Vec& u_ff,
                  const std::optional<ActionBox>& box) {
  require_dims(u_ff.size() == con.dim(), "most_feasible: u_ff has wrong size");
  if (con.dim() == 1) {
    const double r = con.r(0, 0), c = con.c(0);
    if (!box) {
      if (r < 0.0) return Vec::Constant(1, c / (2.0 * r));
      return u_ff;
    }
    const ActionBox b = box->shrunk();
    const double lo = b.lo(0), hi = b.hi(0);
    double best = scalar_eval(r, c, con.k, lo) > scalar_eval(r, c, con.k, hi) ? lo : hi;
    if (r < 0.0) best = std::clamp(c / (2.0 * r), lo, hi);
    return Vec::Constant(1, best);
  }
  if (max_abs(con.r) != 0.0)
    throw UnsupportedConstraint("most_feasible: vector controls need an affine constraint");
  if (!box) return u_ff;
  const ActionBox b = box->shrunk();
  Vec u(con.dim());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    u(i) = con.c(i) > 0.0 ? b.lo(i) : (con.c(i) < 0.0 ? b.hi(i) : b.clip(u_ff)(i));
  return u;
}

FeedforwardMode parse_feedforward_mode(const std::string& s) {
  if (s == "none") return FeedforwardMode::none;
  if (s == "knn") return FeedforwardMode::knn;
  if (s == "ridge") return FeedforwardMode::ridge;
  throw InvalidParameter("unknown feedforward mode '" + s + "' (expected none, knn or ridge)");
}

std::string to_string(FeedforwardMode m) {
  switch (m) {
    case FeedforwardMode::none: return "none";
    case FeedforwardMode::knn: return "knn";
    case FeedforwardMode::ridge: return "ridge";
  }
  return "none";
}

FeedforwardStore::FeedforwardStore(int state_dim, int control_dim, FeedforwardConfig cfg)
    : n_(state_dim), m_(control_dim), cfg_(cfg) {
  if (n_ < 1 || m_ < 1) throw InvalidParameter("FeedforwardStore: dimensions must be positive");
  if (cfg_.k < 1) throw InvalidParameter("FeedforwardStore: k must be positive");
  if (cfg_.lambda <= 0.0) throw InvalidParameter("FeedforwardStore: lambda must be positive");
  if (cfg_.window < 1) throw InvalidParameter("FeedforwardStore: window must be positive");
  if (cfg_.capacity < 1) throw InvalidParameter("FeedforwardStore: capacity must be positive");
  fit_x_.resize(0, n_);
  fit_y_.resize(0, m_);
}

void FeedforwardStore::record(const Vec& x, const Vec& correction) {
  require_dims(x.size() == n_ && correction.size() == m_, "FeedforwardStore: sample has wrong size");
  if (cfg_.mode == FeedforwardMode::none) return;
  pending_x_.push_back(x);
  pending_y_.push_back(correction);
}

void FeedforwardStore::end_episode() {
  if (cfg_.mode == FeedforwardMode::none) return;
  hist_x_.push_back(std::move(pending_x_));
  hist_y_.push_back(std::move(pending_y_));
  pending_x_.clear();
  pending_y_.clear();
  while (static_cast<int>(hist_x_.size()) > cfg_.window) {
    hist_x_.erase(hist_x_.begin());
    hist_y_.erase(hist_y_.begin());
  }
  refit();
}

void FeedforwardStore::refit() {
  std::size_t total = 0;
  for (const auto& h : hist_x_) total += h.size();
  const std::size_t keep = std::min<std::size_t>(total, static_cast<std::size_t>(cfg_.capacity));
  fit_x_.resize(static_cast<Eigen::Index>(keep), n_);
  fit_y_.resize(static_cast<Eigen::Index>(keep), m_);
  std::size_t row = 0;
  for (std::size_t j = 0; j < keep; ++j) {
    std::size_t idx = j * total / keep;
    std::size_t e = 0;
    while (idx >= hist_x_[e].size()) idx -= hist_x_[e++].size();
    fit_x_.row(static_cast<Eigen::Index>(row)) = hist_x_[e][idx].transpose();
    fit_y_.row(static_cast<Eigen::Index>(row)) = hist_y_[e][idx].transpose();
    ++row;
  }
  if (cfg_.mode == FeedforwardMode::ridge && keep > 0) {
    Mat xa(static_cast<Eigen::Index>(keep), n_ + 1);
    xa.leftCols(n_) = fit_x_;
    xa.col(n_).setOnes();
    const Mat gram = xa.transpose() * xa + cfg_.lambda * Mat::Identity(n_ + 1, n_ + 1);
    ridge_w_ = gram.ldlt().solve(xa.transpose() * fit_y_);
  }
}

Vec FeedforwardStore::predict(const Vec& x) const {
  require_dims(x.size() == n_, "FeedforwardStore: query has wrong size");
  const Eigen::Index rows = fit_x_.rows();
  if (cfg_.mode == FeedforwardMode::none || rows == 0) return Vec::Zero(m_);
  if (cfg_.mode == FeedforwardMode::ridge) {
    Vec xa(n_ + 1);
    xa.head(n_) = x;
    xa(n_) = 1.0;
    return ridge_w_.transpose() * xa;
  }
  std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) d[static_cast<std::size_t>(i)] = {0.0, i};
  for (Eigen::Index j = 0; j < n_; ++j) {
    const double* col = fit_x_.col(j).data();
    const double xj = x(j);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double diff = col[i] - xj;
      d[static_cast<std::size_t>(i)].first += diff * diff;
    }
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.k), d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  if (d[0].first == 0.0) {
    Vec sum = Vec::Zero(m_);
    int count = 0;
    for (std::size_t j = 0; j < k && d[j].first == 0.0; ++j, ++count)
      sum += fit_y_.row(d[j].second).transpose();
    return sum / count;
  }
  Vec sum = Vec::Zero(m_);
  double wsum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double w = 1.0 / std::sqrt(d[j].first);
    sum += w * fit_y_.row(d[j].second).transpose();
    wsum += w;
  }
  return sum / wsum;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      flat[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw ConfigError("matrix payload has " + std::to_string(flat.size()) + " entries, expected " +
                      std::to_string(rows * cols));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = flat[static_cast<std::size_t>(i * cols + jj)];
  return m;
}

}  // namespace

nlohmann::json FeedforwardStore::to_json() const {
  nlohmann::json j;
  j["state_dim"] = n_;
  j["control_dim"] = m_;
  j["mode"] = to_string(cfg_.mode);
  j["k"] = cfg_.k;
  j["lambda"] = cfg_.lambda;
  j["window"] = cfg_.window;
  j["capacity"] = cfg_.capacity;
  j["fit_x"] = mat_to_json(fit_x_);
  j["fit_y"] = mat_to_json(fit_y_);
  j["ridge_w"] = mat_to_json(ridge_w_);
  return j;
}

FeedforwardStore FeedforwardStore::from_json(const nlohmann::json& j) {
  FeedforwardConfig cfg;
  cfg.mode = parse_feedforward_mode(j.at("mode").get<std::string>());
  cfg.k = j.at("k").get<int>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.window = j.at("window").get<int>();
  cfg.capacity = j.at("capacity").get<int>();
  FeedforwardStore s(j.at("state_dim").get<int>(), j.at("control_dim").get<int>(), cfg);
  s.fit_x_ = mat_from_json(j.at("fit_x"));
  s.fit_y_ = mat_from_json(j.at("fit_y"));
  s.ridge_w_ = mat_from_json(j.at("ridge_w"));
  if (s.fit_x_.rows() != s.fit_y_.rows() || (s.fit_x_.rows() > 0 && s.fit_x_.cols() != s.n_) ||
      (s.fit_y_.rows() > 0 && s.fit_y_.cols() != s.m_))
    throw ConfigError("feedforward store payload does not match its dimensions");
  return s;
}

DecResult dec_control(const LocalView& view, const Vec& u_rl, const FeedforwardStore* store,
                      bool shield_enabled) {
  const NodeShieldConfig& cfg = *view.config;
  DecResult out;
  out.u_rl = u_rl;
  out.u_ff = store ? Vec(u_rl + store->predict(view.x)) : u_rl;
  const Vec y_u = view.system->output_u(view.x);
  const Vec y_nu = view.system->output_nu(view.x);
  const DissipConstraint con = DissipConstraint::build(
      *view.supply, {cfg.delta_d, cfg.epsilon_d}, cfg.eta, view.barrier, view.nu, y_u, y_nu);
  if (!shield_enabled) {
    out.u_dec = cfg.box ? cfg.box->shrunk().clip(out.u_ff) : out.u_ff;
  } else {
    try {
      out.u_dec = project(con, out.u_ff, cfg.box).u;
    } catch (const InfeasibleConstraint&) {
      out.u_dec = most_feasible(con, out.u_ff, cfg.box);
      out.fallback = true;
    }
  }
  out.u_cbf = out.u_dec - out.u_ff;
  out.constraint_value = con.eval(out.u_dec);
  return out;
}

}  // namespace dissipanet
