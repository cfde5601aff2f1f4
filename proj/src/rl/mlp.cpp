#include "dissipanet/rl/mlp.hpp"

#include <cmath>

#include "dissipanet/errors.hpp"

namespace dissipanet::rl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InvalidParameter("Mlp: need at least an input and an output size");
  for (int s : sizes_)
    if (s < 1) throw InvalidParameter("Mlp: layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_.push_back(Mat::Zero(sizes_[l + 1], sizes_[l]));
    b_.push_back(Vec::Zero(sizes_[l + 1]));
  }
}

void Mlp::init(std::mt19937_64& rng, double output_scale) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const double limit = std::sqrt(6.0 / (w_[l].rows() + w_[l].cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const double scale = l + 1 == w_.size() ? output_scale : 1.0;
    for (Eigen::Index j = 0; j < w_[l].cols(); ++j)
      for (Eigen::Index i = 0; i < w_[l].rows(); ++i) w_[l](i, j) = scale * dist(rng);
    b_[l].setZero();
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l)
    n += static_cast<std::size_t>(w_[l].size() + b_[l].size());
  return n;
}

Mat Mlp::forward(const Mat& x, Cache* cache) const {
  require_dims(x.rows() == input_dim(), "Mlp: input has " + std::to_string(x.rows()) +
                                            " rows, expected " + std::to_string(input_dim()));
  if (cache) {
    cache->act.clear();
    cache->act.push_back(x);
  }
  Mat a = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Mat z = w_[l] * a;
    z.colwise() += b_[l];
    if (l + 1 < w_.size()) z = z.array().tanh().matrix();
    a = std::move(z);
    if (cache) cache->act.push_back(a);
  }
  return a;
}

Vec Mlp::forward(const Vec& x) const { return forward(Mat(x)).col(0); }

Mat Mlp::backward(const Cache& cache, const Mat& dy, Vec& grad) const {
  require_dims(grad.size() == static_cast<Eigen::Index>(param_count()),
               "Mlp: gradient buffer has wrong size");
  require_dims(cache.act.size() == w_.size() + 1, "Mlp: cache does not match the network");
  // Offsets of each layer in the flat layout.
  std::vector<Eigen::Index> off(w_.size());
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    off[l] = o;
    o += w_[l].size() + b_[l].size();
  }
  Mat delta = dy;
  for (std::size_t l = w_.size(); l-- > 0;) {
    if (l + 1 < w_.size()) {
      const Mat& h = cache.act[l + 1];
      delta = (delta.array() * (1.0 - h.array().square())).matrix();
    }
    const Mat gw = delta * cache.act[l].transpose();
    Eigen::Map<Mat>(grad.data() + off[l], w_[l].rows(), w_[l].cols()) += gw;
    grad.segment(off[l] + w_[l].size(), b_[l].size()) += delta.rowwise().sum();
    delta = w_[l].transpose() * delta;
  }
  return delta;
}

Vec Mlp::params() const {
  Vec p(static_cast<Eigen::Index>(param_count()));
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    p.segment(o, w_[l].size()) = Eigen::Map<const Vec>(w_[l].data(), w_[l].size());
    o += w_[l].size();
    p.segment(o, b_[l].size()) = b_[l];
    o += b_[l].size();
  }
  return p;
}

void Mlp::set_params(const Vec& p) {
  require_dims(p.size() == static_cast<Eigen::Index>(param_count()),
               "Mlp: parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                   std::to_string(param_count()));
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::Map<Vec>(w_[l].data(), w_[l].size()) = p.segment(o, w_[l].size());
    o += w_[l].size();
    b_[l] = p.segment(o, b_[l].size());
    o += b_[l].size();
  }
}

void Mlp::soft_update(const Mlp& other, double tau) {
  require_dims(other.sizes_ == sizes_, "Mlp: soft update between different architectures");
  if (tau == 1.0) {
    w_ = other.w_;
    b_ = other.b_;
    return;
  }
  for (std::size_t l = 0; l < w_.size(); ++l) {
    w_[l] = tau * other.w_[l] + (1.0 - tau) * w_[l];
    b_[l] = tau * other.b_[l] + (1.0 - tau) * b_[l];
  }
}

nlohmann::json Mlp::to_json() const {
  const Vec p = params();
  return {{"sizes", sizes_}, {"params", std::vector<double>(p.data(), p.data() + p.size())}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp m(j.at("sizes").get<std::vector<int>>());
  const auto flat = j.at("params").get<std::vector<double>>();
  if (flat.size() != m.param_count())
    throw ConfigError("network checkpoint has " + std::to_string(flat.size()) +
                      " parameters but its architecture needs " + std::to_string(m.param_count()));
  m.set_params(Eigen::Map<const Vec>(flat.data(), static_cast<Eigen::Index>(flat.size())));
  return m;
}

void Adam::step(Vec& params, const Vec& grad) {
  require_dims(params.size() == grad.size(), "Adam: gradient size mismatch");
  if (m_.size() != params.size()) {
    m_ = Vec::Zero(params.size());
    v_ = Vec::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace dissipanet::rl
