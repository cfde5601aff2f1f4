#include "dissipanet/rl/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dissipanet/errors.hpp"

namespace dissipanet::rl {

CemOptimizer::CemOptimizer(Vec mean, Vec stddev, int population, double elite_frac,
                           double min_std, std::uint64_t seed)
    : mean_(std::move(mean)),
      std_(std::move(stddev)),
      pop_(population),
      elite_frac_(elite_frac),
      min_std_(min_std),
      rng_(seed) {
  require_dims(mean_.size() == std_.size(), "cem: mean and std sizes differ");
  if (pop_ < 1) throw InvalidParameter("cem: population must be positive");
  if (!(elite_frac_ > 0.0 && elite_frac_ <= 1.0)) throw InvalidParameter("cem: elite fraction must lie in (0, 1]");
  if ((std_.array() < 0.0).any() || min_std_ < 0.0) throw InvalidParameter("cem: negative std");
}

int CemOptimizer::elite_count() const {
  return std::max(1, static_cast<int>(std::ceil(elite_frac_ * pop_ - 1e-12)));
}

const std::vector<Vec>& CemOptimizer::ask() {
  std::normal_distribution<double> n01(0.0, 1.0);
  samples_.clear();
  for (int i = 0; i < pop_; ++i) {
    Vec s(mean_.size());
    for (Eigen::Index d = 0; d < s.size(); ++d) s(d) = mean_(d) + std_(d) * n01(rng_);
    samples_.push_back(std::move(s));
  }
  return samples_;
}

void CemOptimizer::tell(const std::vector<double>& scores) {
  if (scores.size() != samples_.size())
    throw InvalidParameter("cem: got " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(samples_.size()) + " candidates");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto ne = static_cast<std::size_t>(elite_count());
  Vec m = Vec::Zero(mean_.size());
  for (std::size_t i = 0; i < ne; ++i) m += samples_[order[i]];
  m /= static_cast<double>(ne);
  Vec var = Vec::Zero(mean_.size());
  for (std::size_t i = 0; i < ne; ++i) var += (samples_[order[i]] - m).array().square().matrix();
  var /= static_cast<double>(ne);
  mean_ = m;
  std_ = var.cwiseSqrt();
  if (min_std_ > 0.0) std_ = std_.cwiseMax(min_std_);
}

nlohmann::json CemConfig::to_json() const {
  return {{"population", population},
          {"elite_frac", elite_frac},
          {"init_std", init_std},
          {"min_std", min_std},
          {"seed", seed}};
}

CemConfig CemConfig::from_json(const nlohmann::json& j) {
  CemConfig c;
  c.population = j.at("population").get<int>();
  c.elite_frac = j.at("elite_frac").get<double>();
  c.init_std = j.at("init_std").get<double>();
  c.min_std = j.at("min_std").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

CemLearner::CemLearner(int obs_dim, Vec act_lo, Vec act_hi, CemConfig cfg)
    : obs_dim_(obs_dim),
      lo_(std::move(act_lo)),
      hi_(std::move(act_hi)),
      cfg_(cfg),
      opt_(Vec::Zero((obs_dim + 1) * lo_.size()),
           Vec::Constant((obs_dim + 1) * lo_.size(), cfg.init_std), cfg.population, cfg.elite_frac,
           cfg.min_std, cfg.seed) {
  if (obs_dim_ < 1 || lo_.size() < 1) throw InvalidParameter("cem: dimensions must be positive");
  require_dims(hi_.size() == lo_.size(), "cem: box bound sizes differ");
  candidates_ = opt_.ask();
}

Vec CemLearner::apply(const Vec& theta, const Vec& obs) const {
  const Eigen::Index m = lo_.size();
  const Eigen::Map<const Mat> k(theta.data(), m, obs_dim_);
  const Vec u = k * obs + theta.tail(m);
  return u.cwiseMax(lo_).cwiseMin(hi_);
}

Vec CemLearner::act(const Vec& obs, bool explore) {
  require_dims(obs.size() == obs_dim_, "cem: observation has wrong size");
  if (!obs.allFinite()) throw InvalidParameter("cem: non-finite observation");
  return apply(explore ? candidates_[scores_.size()] : opt_.mean(), obs);
}

void CemLearner::end_episode(double episode_return) {
  scores_.push_back(episode_return);
  if (scores_.size() == candidates_.size()) {
    opt_.tell(scores_);
    scores_.clear();
    candidates_ = opt_.ask();
  }
}

nlohmann::json CemLearner::to_json() const {
  const Vec& m = opt_.mean();
  const Vec& s = opt_.stddev();
  return {{"kind", "cem"},
          {"obs_dim", obs_dim_},
          {"act_lo", std::vector<double>(lo_.data(), lo_.data() + lo_.size())},
          {"act_hi", std::vector<double>(hi_.data(), hi_.data() + hi_.size())},
          {"config", cfg_.to_json()},
          {"mean", std::vector<double>(m.data(), m.data() + m.size())},
          {"std", std::vector<double>(s.data(), s.data() + s.size())}};
}

std::unique_ptr<CemLearner> CemLearner::from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& v) {
    const auto d = v.get<std::vector<double>>();
    return Vec(Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size())));
  };
  const CemConfig cfg = CemConfig::from_json(j.at("config"));
  auto l = std::make_unique<CemLearner>(j.at("obs_dim").get<int>(), vec(j.at("act_lo")),
                                        vec(j.at("act_hi")), cfg);
  const Vec mean = vec(j.at("mean"));
  const Vec sd = vec(j.at("std"));
  if (mean.size() != l->opt_.mean().size() || sd.size() != mean.size())
    throw ConfigError("cem checkpoint parameters do not match its dimensions");
  l->opt_ = CemOptimizer(mean, sd, cfg.population, cfg.elite_frac, cfg.min_std, cfg.seed);
  l->candidates_ = l->opt_.ask();
  return l;
}

}  // namespace dissipanet::rl
