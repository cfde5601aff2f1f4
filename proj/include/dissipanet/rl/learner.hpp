#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "dissipanet/linalg.hpp"

namespace dissipanet::rl {

/// One observed step: local state, deployed action, next local state, reward.
struct Transition {
  Vec x;
  Vec u;
  Vec x_next;
  double r = 0.0;
  bool done = false;
};

/// Per-node episodic learner. The acting policy only changes in
/// `end_episode`.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string kind() const = 0;
  /// Deterministic when `explore` is false.
  virtual Vec act(const Vec& obs, bool explore) = 0;
  virtual void observe(const Transition& tr) = 0;
  virtual void end_episode(double episode_return) = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// Always plays the same action (u~ = 0 holds the equilibrium duty cycle).
class HoldLearner final : public Learner {
 public:
  explicit HoldLearner(Vec action) : action_(std::move(action)) {}

  std::string kind() const override { return "hold"; }
  Vec act(const Vec&, bool) override { return action_; }
  void observe(const Transition&) override {}
  void end_episode(double) override {}
  nlohmann::json to_json() const override {
    return {{"kind", "hold"},
            {"action", std::vector<double>(action_.data(), action_.data() + action_.size())}};
  }

 private:
  Vec action_;
};

std::unique_ptr<Learner> learner_from_json(const nlohmann::json& j);

/// A = Q - V
inline double advantage(double q_value, double v_value) { return q_value - v_value; }

}  // namespace dissipanet::rl
