#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dissipanet/rl/learner.hpp"
#include "dissipanet/rl/mlp.hpp"
#include "dissipanet/rl/replay.hpp"

namespace dissipanet::rl {

struct DdpgLiteConfig {
  double gamma = 0.99;
  std::vector<int> actor_hidden{32, 32};
  std::vector<int> critic_hidden{32, 32};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double tau = 0.01;
  std::size_t replay_capacity = 100000;
  int batch_size = 64;
  double noise_frac = 0.1;       // Gaussian std as a fraction of the box width
  int updates_per_episode = 200;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static DdpgLiteConfig from_json(const nlohmann::json& j);
};

struct Batch {
  Mat x;       // obs_dim x B
  Mat u;       // act_dim x B
  Mat x_next;  // obs_dim x B
  Vec r;
  Vec done;    // 1 for terminal transitions

  static Batch from(const std::vector<const Transition*>& items);
};

struct TdLosses {
  double before = 0.0;
  double after = 0.0;
};

/// Deterministic actor-critic with target networks, replay and Gaussian
/// exploration. The actor output is squashed into the box by
/// mid + half * tanh(.).
class DdpgLite final : public Learner {
 public:
  DdpgLite(int obs_dim, Vec act_lo, Vec act_hi, DdpgLiteConfig cfg);

  std::string kind() const override { return "ddpg"; }
  Vec act(const Vec& obs, bool explore) override;
  void observe(const Transition& tr) override;
  void end_episode(double episode_return) override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<DdpgLite> from_json(const nlohmann::json& j);

  /// Bellman targets r + gamma (1 - done) Q'(x', pi'(x')).
  Vec targets(const Batch& b) const;
  /// 0.5 mean (Q(x, u) - y)^2 and its gradient in critic parameters.
  double critic_loss(const Batch& b, const Vec& y, Vec* grad) const;
  /// -mean Q(x, pi(x)) and its gradient in actor parameters.
  double actor_objective(const Batch& b, Vec* grad) const;
  /// One critic step, one actor step, soft target update.
  TdLosses td_update(const Batch& b);

  Vec policy(const Mat& obs) const;  // deterministic actions, one column per sample
  double q_value(const Vec& obs, const Vec& u) const;

  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  const Mlp& actor_target() const { return actor_targ_; }
  const Mlp& critic_target() const { return critic_targ_; }
  const ReplayBuffer& replay() const { return replay_; }
  const DdpgLiteConfig& config() const { return cfg_; }

 private:
  Mat squash(const Mat& raw) const;
  Mat policy_batch(const Mlp& net, const Mat& obs, Mlp::Cache* cache) const;
  Mat critic_input(const Mat& x, const Mat& u) const;

  int obs_dim_;
  int act_dim_;
  Vec lo_, hi_, mid_, half_;
  DdpgLiteConfig cfg_;
  std::mt19937_64 rng_;
  Mlp actor_, critic_, actor_targ_, critic_targ_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer replay_;
};

}  // namespace dissipanet::rl
