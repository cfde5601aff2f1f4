#include "dissipanet/rl/ddpg.hpp"

#include <cmath>

#include "dissipanet/errors.hpp"

namespace dissipanet::rl {

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void DdpgLiteConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("ddpg: gamma must lie in [0, 1)");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw InvalidParameter("ddpg: learning rates must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("ddpg: tau must lie in (0, 1]");
  if (replay_capacity == 0 || batch_size < 1) throw InvalidParameter("ddpg: buffer and batch sizes must be positive");
  if (!(noise_frac >= 0.0)) throw InvalidParameter("ddpg: noise fraction must be nonnegative");
  if (updates_per_episode < 0) throw InvalidParameter("ddpg: updates per episode must be nonnegative");
  for (int h : actor_hidden)
    if (h < 1) throw InvalidParameter("ddpg: hidden sizes must be positive");
  for (int h : critic_hidden)
    if (h < 1) throw InvalidParameter("ddpg: hidden sizes must be positive");
}

nlohmann::json DdpgLiteConfig::to_json() const {
  return {{"gamma", gamma},
          {"actor_hidden", actor_hidden},
          {"critic_hidden", critic_hidden},
          {"actor_lr", actor_lr},
          {"critic_lr", critic_lr},
          {"tau", tau},
          {"replay_capacity", replay_capacity},
          {"batch_size", batch_size},
          {"noise_frac", noise_frac},
          {"updates_per_episode", updates_per_episode},
          {"seed", seed}};
}

DdpgLiteConfig DdpgLiteConfig::from_json(const nlohmann::json& j) {
  DdpgLiteConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.actor_hidden = j.at("actor_hidden").get<std::vector<int>>();
  c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  c.actor_lr = j.at("actor_lr").get<double>();
  c.critic_lr = j.at("critic_lr").get<double>();
  c.tau = j.at("tau").get<double>();
  c.replay_capacity = j.at("replay_capacity").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<int>();
  c.noise_frac = j.at("noise_frac").get<double>();
  c.updates_per_episode = j.at("updates_per_episode").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Batch Batch::from(const std::vector<const Transition*>& items) {
  require_dims(!items.empty(), "Batch: empty");
  const auto n = static_cast<Eigen::Index>(items.size());
  const Eigen::Index ox = items[0]->x.size(), ou = items[0]->u.size();
  Batch b{Mat(ox, n), Mat(ou, n), Mat(ox, n), Vec(n), Vec(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *items[static_cast<std::size_t>(i)];
    b.x.col(i) = t.x;
    b.u.col(i) = t.u;
    b.x_next.col(i) = t.x_next;
    b.r(i) = t.r;
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

DdpgLite::DdpgLite(int obs_dim, Vec act_lo, Vec act_hi, DdpgLiteConfig cfg)
    : obs_dim_(obs_dim),
      act_dim_(static_cast<int>(act_lo.size())),
      lo_(std::move(act_lo)),
      hi_(std::move(act_hi)),
      cfg_(std::move(cfg)),
      rng_(cfg_.seed),
      actor_opt_(cfg_.actor_lr),
      critic_opt_(cfg_.critic_lr),
      replay_(cfg_.replay_capacity) {
  cfg_.validate();
  if (obs_dim_ < 1 || act_dim_ < 1) throw InvalidParameter("ddpg: dimensions must be positive");
  require_dims(hi_.size() == lo_.size(), "ddpg: box bound sizes differ");
  if ((hi_.array() <= lo_.array()).any()) throw InvalidParameter("ddpg: empty action box");
  mid_ = 0.5 * (lo_ + hi_);
  half_ = 0.5 * (hi_ - lo_);
  actor_ = Mlp(layer_sizes(obs_dim_, cfg_.actor_hidden, act_dim_));
  critic_ = Mlp(layer_sizes(obs_dim_ + act_dim_, cfg_.critic_hidden, 1));
  actor_.init(rng_, 0.0);
  critic_.init(rng_, 1.0);
  actor_targ_ = actor_;
  critic_targ_ = critic_;
}

Mat DdpgLite::squash(const Mat& raw) const {
  Mat a = raw.array().tanh().matrix();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    a.col(j) = mid_ + half_.cwiseProduct(a.col(j));
  return a;
}

Mat DdpgLite::policy_batch(const Mlp& net, const Mat& obs, Mlp::Cache* cache) const {
  return squash(net.forward(obs, cache));
}

Vec DdpgLite::policy(const Mat& obs) const { return policy_batch(actor_, obs, nullptr).col(0); }

Mat DdpgLite::critic_input(const Mat& x, const Mat& u) const {
  Mat in(obs_dim_ + act_dim_, x.cols());
  in.topRows(obs_dim_) = x;
  in.bottomRows(act_dim_) = u;
  return in;
}

double DdpgLite::q_value(const Vec& obs, const Vec& u) const {
  return critic_.forward(Mat(critic_input(obs, u)))(0, 0);
}

Vec DdpgLite::act(const Vec& obs, bool explore) {
  require_dims(obs.size() == obs_dim_, "ddpg: observation has wrong size");
  if (!obs.allFinite()) throw InvalidParameter("ddpg: non-finite observation");
  Vec a = policy_batch(actor_, obs, nullptr).col(0);
  if (explore && cfg_.noise_frac > 0.0) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += cfg_.noise_frac * 2.0 * half_(i) * n01(rng_);
    a = a.cwiseMax(lo_).cwiseMin(hi_);
  }
  return a;
}

void DdpgLite::observe(const Transition& tr) { replay_.push(tr); }

void DdpgLite::end_episode(double) {
  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  if (replay_.size() < bs) return;
  for (int i = 0; i < cfg_.updates_per_episode; ++i) td_update(Batch::from(replay_.sample(bs, rng_)));
}

Vec DdpgLite::targets(const Batch& b) const {
  const Mat a_next = policy_batch(actor_targ_, b.x_next, nullptr);
  const Mat q_next = critic_targ_.forward(critic_input(b.x_next, a_next));
  return b.r + cfg_.gamma * (1.0 - b.done.array()).matrix().cwiseProduct(q_next.row(0).transpose());
}

double DdpgLite::critic_loss(const Batch& b, const Vec& y, Vec* grad) const {
  Mlp::Cache cache;
  const Mat q = critic_.forward(critic_input(b.x, b.u), grad ? &cache : nullptr);
  const double n = static_cast<double>(b.r.size());
  const Vec err = q.row(0).transpose() - y;
  if (grad) {
    grad->setZero(static_cast<Eigen::Index>(critic_.param_count()));
    critic_.backward(cache, Mat(err.transpose() / n), *grad);
  }
  return 0.5 * err.squaredNorm() / n;
}

double DdpgLite::actor_objective(const Batch& b, Vec* grad) const {
  Mlp::Cache acache, ccache;
  const Mat raw = actor_.forward(b.x, grad ? &acache : nullptr);
  const Mat a = squash(raw);
  const Mat q = critic_.forward(critic_input(b.x, a), grad ? &ccache : nullptr);
  const double n = static_cast<double>(b.r.size());
  if (grad) {
    Vec scratch = Vec::Zero(static_cast<Eigen::Index>(critic_.param_count()));
    const Mat dq = Mat::Constant(1, q.cols(), -1.0 / n);
    const Mat din = critic_.backward(ccache, dq, scratch);
    Mat draw = din.bottomRows(act_dim_);
    const Mat t = raw.array().tanh().matrix();
    for (Eigen::Index j = 0; j < draw.cols(); ++j)
      draw.col(j) = draw.col(j).cwiseProduct(half_).cwiseProduct(
          (1.0 - t.col(j).array().square()).matrix());
    grad->setZero(static_cast<Eigen::Index>(actor_.param_count()));
    actor_.backward(acache, draw, *grad);
  }
  return -q.sum() / n;
}

TdLosses DdpgLite::td_update(const Batch& b) {
  TdLosses out;
  const Vec y = targets(b);
  Vec g;
  out.before = critic_loss(b, y, &g);
  Vec p = critic_.params();
  critic_opt_.step(p, g);
  critic_.set_params(p);
  out.after = critic_loss(b, y, nullptr);

  Vec ga;
  actor_objective(b, &ga);
  Vec pa = actor_.params();
  actor_opt_.step(pa, ga);
  actor_.set_params(pa);

  critic_targ_.soft_update(critic_, cfg_.tau);
  actor_targ_.soft_update(actor_, cfg_.tau);
  return out;
}

nlohmann::json DdpgLite::to_json() const {
  return {{"kind", "ddpg"},
          {"obs_dim", obs_dim_},
          {"act_lo", to_std(lo_)},
          {"act_hi", to_std(hi_)},
          {"config", cfg_.to_json()},
          {"actor", actor_.to_json()},
          {"critic", critic_.to_json()},
          {"actor_target", actor_targ_.to_json()},
          {"critic_target", critic_targ_.to_json()}};
}

std::unique_ptr<DdpgLite> DdpgLite::from_json(const nlohmann::json& j) {
  auto l = std::make_unique<DdpgLite>(j.at("obs_dim").get<int>(),
                                      from_std(j.at("act_lo").get<std::vector<double>>()),
                                      from_std(j.at("act_hi").get<std::vector<double>>()),
                                      DdpgLiteConfig::from_json(j.at("config")));
  auto load = [](Mlp& dst, const nlohmann::json& src, const char* what) {
    Mlp m = Mlp::from_json(src);
    if (m.sizes() != dst.sizes())
      throw ConfigError(std::string("checkpoint ") + what + " architecture does not match its config");
    dst = std::move(m);
  };
  load(l->actor_, j.at("actor"), "actor");
  load(l->critic_, j.at("critic"), "critic");
  load(l->actor_targ_, j.at("actor_target"), "actor target");
  load(l->critic_targ_, j.at("critic_target"), "critic target");
  return l;
}

}  // namespace dissipanet::rl
