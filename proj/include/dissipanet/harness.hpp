#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dissipanet/dissipativity.hpp"
#include "dissipanet/microgrid.hpp"
#include "dissipanet/netmodel.hpp"
#include "dissipanet/rl/cem.hpp"
#include "dissipanet/rl/ddpg.hpp"
#include "dissipanet/rl/learner.hpp"
#include "dissipanet/shield.hpp"

namespace dissipanet::harness {

/// Load conductances scaled by (1 + fraction) from `time` seconds on.
struct LoadStep {
  double time = 0.05;
  double fraction = 0.05;
};

struct Scenario {
  std::optional<LoadStep> load_step;
};

struct RunConfig {
  microgrid::MicrogridParams grid = microgrid::default_ring();
  microgrid::SupplyModel supply_model = microgrid::SupplyModel::discrete;
  ShieldConfig shield;  // one entry per node once resolved
  FeedforwardConfig feedforward;
  std::vector<std::string> learner_kinds;  // "ddpg", "cem" or "hold", one per node
  Vec obs_scale = Vec::Ones(2);
  rl::DdpgLiteConfig ddpg;
  rl::CemConfig cem;

  int episodes = 200;
  int horizon = 2000;
  std::uint64_t seed = 7;
  double init_std_fraction = 0.01;
  Scenario train_scenario;
  int eval_horizon = 15000;
  double eval_init_std_fraction = 0.0;
  Scenario eval_scenario;
  std::string trajectories = "first_last";  // none | first_last | all
  int threads = 1;

  void validate() const;
};

/// Default ring with the certified shield and DDPG-lite on every node.
RunConfig default_run_config();

struct AssumptionReport {
  double assumption3_residual = 0.0;
  Assumption4Report assumption4;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon_e = 0.0;
  double delta_e = 0.0;
  bool pass = false;
  bool strict = false;

  nlohmann::json to_json() const;
};

AssumptionReport check_assumptions(const microgrid::MicrogridParams& grid,
                                   const SupplySpec& supplies, const ShieldConfig& shield);

/// Everything derived from a RunConfig that stays fixed during a run.
struct Plant {
  microgrid::EquilibriumPoint eq;
  SupplySpec supplies;
  std::shared_ptr<const Network> nominal;
};

Plant make_plant(const RunConfig& cfg);

/// Per-node learner and feedforward store.
struct Agents {
  std::vector<std::unique_ptr<rl::Learner>> learners;
  std::vector<FeedforwardStore> stores;

  nlohmann::json to_json() const;
  static Agents from_json(const nlohmann::json& j);
};

Agents make_agents(const RunConfig& cfg, const Plant& plant);

/// Symmetric learner box around u~ = 0 inside the duty-cycle box.
ActionBox learner_box(double u_bar);

/// Shield inputs of node `i` cut out of the stacked state and coupling.
LocalView make_local_view(const Network& net, const SupplySpec& supplies,
                          const ShieldConfig& shield, int i, const Vec& x, const Vec& nu,
                          double barrier);

/// Per-step record. Node vectors have one entry per node (scalar ports).
struct StepRecord {
  Vec x;  // stacked node state at t
  Vec z;  // stacked edge state at t
  Vec u_rl, u_ff, u_cbf, u_dec;
  Vec nu, y_u, y_nu;
  Vec b;  // barrier after the update, b(t + 1)
  Vec w_n, w_d, w_tilde, r;
  Vec mu, omega, w_e;
};

struct EpisodeLog {
  int episode = 0;
  std::vector<StepRecord> steps;
};

/// Per-episode checks, computed while the episode runs.
struct EpisodeSummary {
  int episode = 0;
  double ret = 0.0;
  Vec node_returns;
  bool tainted = false;
  int fallback_steps = 0;
  double min_b = 0.0;
  double min_wd_prefix = 0.0;        // min over nodes and t of sum_{tau<=t} w_d
  double min_wn_prefix = 0.0;
  double invariance_margin = 0.0;    // min of b(t+1) - (1 - eta) b(t)
  double comparison_margin = 0.0;    // min of b(t) - (1 - eta)^(t - t0) b(t0)
  double supply_bound_margin = 0.0;  // min of rhs - lhs
  double supply_bound_max_lhs = 0.0;
  bool supply_bound_ok = true;
  double max_abs_v = 0.0;
  double completeness_residual = 0.0;  // max |u_dec - (u_ff + u_cbf)|
  double constraint_residual = 0.0;    // max |g(u_dec) - (-w_tilde + eta b)|

  nlohmann::json to_json() const;
};

struct RolloutOptions {
  int episode = 0;
  int horizon = 1;
  bool explore = false;
  bool learn = false;  // feed learners and stores
  bool keep_log = false;
  bool shield_enabled = true;
  Scenario scenario;
  NetworkState init;
};

struct RolloutResult {
  EpisodeSummary summary;
  std::optional<EpisodeLog> log;
  NetworkState final_state;
};

/// One episode: act, shield, step, update barriers. Barriers start at zero.
RolloutResult rollout(const RunConfig& cfg, const Plant& plant, Agents& agents,
                      const RolloutOptions& opt);

/// Gaussian around the equilibrium: std = fraction * |nominal value| per entry.
NetworkState initial_state(const Plant& plant, double fraction, std::mt19937_64& rng);

struct TrainingResult {
  Agents agents;
  std::vector<EpisodeSummary> episodes;
  std::vector<EpisodeLog> logs;  // kept according to cfg.trajectories
  AssumptionReport assumptions;
};

/// Episodic training loop. Throws AssumptionFailure before episode 0 if the network
/// checks fail.
TrainingResult run_training(const RunConfig& cfg);

struct EvaluationMetrics {
  double band = 0.01;
  double max_abs_v_error = 0.0;       // V
  double max_rel_v_error = 0.0;
  std::optional<double> settling_time;   // s, into the band before any load step
  double pre_step_rel_error = 0.0;       // steady state before the step (or end)
  std::optional<double> recovery_time;   // s after the step; empty if never back in band
  double final_rel_error = 0.0;
  double min_b = 0.0;
  double supply_bound_margin = 0.0;
  double supply_bound_max_lhs = 0.0;
  bool supply_bound_ok = true;
  bool tainted = false;

  nlohmann::json to_json() const;
};

struct EvaluationResult {
  EpisodeLog log;
  EpisodeSummary summary;
  EvaluationMetrics metrics;
};

/// Deterministic rollout (no exploration, no learning) over cfg.eval_horizon.
EvaluationResult run_evaluation(const RunConfig& cfg, Agents& agents, bool shield_enabled = true);

/// trajectory CSV text for one episode.
std::string trajectory_csv(const EpisodeLog& log, const Plant& plant);
/// episode_returns.csv text.
std::string episode_returns_csv(const std::vector<EpisodeSummary>& episodes);

}  // namespace dissipanet::harness
