#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dissipanet/rl/learner.hpp"

namespace dissipanet::rl {

/// Diagonal-Gaussian cross-entropy method (maximization).
class CemOptimizer {
 public:
  CemOptimizer(Vec mean, Vec stddev, int population, double elite_frac, double min_std,
               std::uint64_t seed);

  /// Draws a fresh population.
  const std::vector<Vec>& ask();
  /// Scores for the population from the last `ask`; refits mean and std to
  /// the elites (ties keep the earlier candidate).
  void tell(const std::vector<double>& scores);

  const Vec& mean() const { return mean_; }
  const Vec& stddev() const { return std_; }
  int population() const { return pop_; }
  int elite_count() const;

 private:
  Vec mean_, std_;
  int pop_;
  double elite_frac_;
  double min_std_;
  std::mt19937_64 rng_;
  std::vector<Vec> samples_;
};

struct CemConfig {
  int population = 8;
  double elite_frac = 0.25;
  double init_std = 0.02;
  double min_std = 1e-4;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static CemConfig from_json(const nlohmann::json& j);
};

/// Linear feedback u = clip(K x + k0) searched by CEM, one candidate per
/// episode. Acting without exploration uses the distribution mean.
class CemLearner final : public Learner {
 public:
  CemLearner(int obs_dim, Vec act_lo, Vec act_hi, CemConfig cfg);

  std::string kind() const override { return "cem"; }
  Vec act(const Vec& obs, bool explore) override;
  void observe(const Transition&) override {}
  void end_episode(double episode_return) override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<CemLearner> from_json(const nlohmann::json& j);

  const CemOptimizer& optimizer() const { return opt_; }

 private:
  Vec apply(const Vec& theta, const Vec& obs) const;

  int obs_dim_;
  Vec lo_, hi_;
  CemConfig cfg_;
  CemOptimizer opt_;
  std::vector<Vec> candidates_;
  std::vector<double> scores_;
};

}  // namespace dissipanet::rl
