#include "dissipanet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "dissipanet/csv.hpp"
#include "dissipanet/errors.hpp"

namespace dissipanet::harness {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, purpose, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ purpose) ^ index);
}

constexpr std::uint64_t kLearnerStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kEvalStream = 3;

double node_ts(const RunConfig& cfg) { return cfg.grid.nodes.front().Ts; }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class F>
void for_each_node(int n, int threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void RunConfig::validate() const {
  grid.validate();
  const auto n = grid.nodes.size();
  for (const auto& p : grid.nodes)
    if (p.Ts != grid.nodes.front().Ts) throw ConfigError("all DGUs must share one Ts");
  for (const auto& l : grid.lines)
    if (l.Ts != grid.nodes.front().Ts) throw ConfigError("lines must share the DGU Ts");
  if (shield.nodes.size() != n)
    throw ConfigError("shield has " + std::to_string(shield.nodes.size()) +
                           " node entries for " + std::to_string(n) + " DGUs");
  for (std::size_t i = 0; i < n; ++i) shield.nodes[i].validate(static_cast<int>(i));
  if (learner_kinds.size() != n)
    throw ConfigError("need one learner kind per node");
  for (const auto& k : learner_kinds)
    if (k != "ddpg" && k != "cem" && k != "hold")
      throw ConfigError("unknown learner kind '" + k + "' (expected ddpg, cem or hold)");
  if (obs_scale.size() != 2 || !obs_scale.allFinite())
    throw ConfigError("obs_scale needs two finite entries");
  ddpg.validate();
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (horizon < 1 || eval_horizon < 1) throw ConfigError("horizons must be at least 1");
  if (!(init_std_fraction >= 0.0) || !(eval_init_std_fraction >= 0.0))
    throw ConfigError("initial-state std must be nonnegative");
  for (const auto* s : {&train_scenario, &eval_scenario})
    if (s->load_step && (!(s->load_step->time >= 0.0) || !(s->load_step->fraction > -1.0)))
      throw ConfigError("load step needs time >= 0 and fraction > -1");
  if (trajectories != "none" && trajectories != "first_last" && trajectories != "all")
    throw ConfigError("trajectories must be none, first_last or all");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

RunConfig default_run_config() {
  RunConfig cfg;
  const auto eq = microgrid::compute_equilibrium(cfg.grid.v_ref, cfg.grid.nodes, cfg.grid.lines,
                                                 cfg.grid.topo);
  cfg.shield = microgrid::default_shield(microgrid::microgrid_supplies(cfg.grid, cfg.supply_model),
                                         eq, 0.5, 1.0, true);
  cfg.learner_kinds.assign(cfg.grid.nodes.size(), "ddpg");
  return cfg;
}

nlohmann::json AssumptionReport::to_json() const {
  return {{"assumption3_residual", assumption3_residual},
          {"lambda_min_b_delta", assumption4.lambda_min_b_delta},
          {"lambda_min_b_epsilon", assumption4.lambda_min_b_epsilon},
          {"alpha", alpha},
          {"beta", beta},
          {"epsilon_e", epsilon_e},
          {"delta_e", delta_e},
          {"pass", pass},
          {"strict", strict}};
}

AssumptionReport check_assumptions(const microgrid::MicrogridParams& grid,
                                   const SupplySpec& supplies, const ShieldConfig& shield) {
  AssumptionReport r;
  r.assumption3_residual =
      check_assumption3(grid.topo, supplies.stacked_s_nu(), supplies.stacked_s_e());
  std::tie(r.alpha, r.beta) = alpha_beta(shield.desired());
  r.epsilon_e = supplies.edges.empty() ? 0.0 : supplies.epsilon_e();
  r.delta_e = supplies.edges.empty() ? 0.0 : supplies.delta_e();
  r.assumption4 = check_assumption4(grid.topo, r.epsilon_e, r.delta_e, r.alpha, r.beta);
  r.pass = r.assumption3_residual <= kStructuralTol && r.assumption4.holds(kSpectralTol);
  r.strict = r.pass && r.assumption4.strict(kSpectralTol);
  return r;
}

Plant make_plant(const RunConfig& cfg) {
  Plant p;
  p.eq = microgrid::compute_equilibrium(cfg.grid.v_ref, cfg.grid.nodes, cfg.grid.lines,
                                        cfg.grid.topo);
  p.supplies = microgrid::microgrid_supplies(cfg.grid, cfg.supply_model);
  p.nominal = std::make_shared<const Network>(microgrid::make_shifted_network(cfg.grid, p.eq));
  return p;
}

ActionBox learner_box(double u_bar) {
  const double h = std::min(u_bar, 1.0 - u_bar) - 2.0 * kBoxMargin;
  if (!(h > 0.0)) throw InvalidParameter("learner_box: equilibrium duty cycle too close to 0 or 1");
  return {Vec::Constant(1, -h), Vec::Constant(1, h)};
}

Agents make_agents(const RunConfig& cfg, const Plant& plant) {
  Agents a;
  const int n = plant.nominal->node_count();
  for (int i = 0; i < n; ++i) {
    const auto& kind = cfg.learner_kinds[static_cast<std::size_t>(i)];
    const ActionBox box = learner_box(plant.eq.u(i));
    const int obs_dim = plant.nominal->node(i).dims().state;
    const std::uint64_t seed = stream_seed(cfg.seed, kLearnerStream, static_cast<std::uint64_t>(i));
    if (kind == "ddpg") {
      rl::DdpgLiteConfig c = cfg.ddpg;
      c.seed = seed;
      a.learners.push_back(std::make_unique<rl::DdpgLite>(obs_dim, box.lo, box.hi, c));
    } else if (kind == "cem") {
      rl::CemConfig c = cfg.cem;
      c.seed = seed;
      a.learners.push_back(std::make_unique<rl::CemLearner>(obs_dim, box.lo, box.hi, c));
    } else {
      a.learners.push_back(std::make_unique<rl::HoldLearner>(Vec::Zero(box.lo.size())));
    }
    a.stores.emplace_back(obs_dim, plant.nominal->node(i).dims().control, cfg.feedforward);
  }
  return a;
}

nlohmann::json Agents::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < learners.size(); ++i)
    nodes.push_back({{"learner", learners[i]->to_json()}, {"feedforward", stores[i].to_json()}});
  return {{"nodes", nodes}};
}

Agents Agents::from_json(const nlohmann::json& j) {
  Agents a;
  for (const auto& n : j.at("nodes")) {
    a.learners.push_back(rl::learner_from_json(n.at("learner")));
    a.stores.push_back(FeedforwardStore::from_json(n.at("feedforward")));
  }
  return a;
}

LocalView make_local_view(const Network& net, const SupplySpec& supplies,
                          const ShieldConfig& shield, int i, const Vec& x, const Vec& nu,
                          double barrier) {
  LocalView v;
  v.system = &net.node(i);
  v.supply = &supplies.nodes[static_cast<std::size_t>(i)];
  v.config = &shield.nodes[static_cast<std::size_t>(i)];
  v.x = segment(x, net.x_slice(i));
  v.nu = segment(nu, net.nu_slice(i));
  v.barrier = barrier;
  return v;
}

NetworkState initial_state(const Plant& plant, double fraction, std::mt19937_64& rng) {
  NetworkState s = plant.nominal->zero_state();
  if (fraction == 0.0) return s;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index i = 0; i < plant.eq.V.size(); ++i) {
    s.x(2 * i) = fraction * std::abs(plant.eq.I(i)) * n01(rng);
    s.x(2 * i + 1) = fraction * std::abs(plant.eq.V(i)) * n01(rng);
  }
  for (Eigen::Index k = 0; k < plant.eq.Il.size(); ++k)
    s.z(k) = fraction * std::abs(plant.eq.Il(k)) * n01(rng);
  return s;
}

RolloutResult rollout(const RunConfig& cfg, const Plant& plant, Agents& agents,
                      const RolloutOptions& opt) {
  const Network& nominal = *plant.nominal;
  const int n = nominal.node_count();
  const int m = nominal.edge_count();
  const SupplySpec& sup = plant.supplies;
  const auto desired = cfg.shield.desired();

  std::optional<Network> stepped;
  std::int64_t step_idx = std::numeric_limits<std::int64_t>::max();
  if (opt.scenario.load_step) {
    step_idx = std::llround(opt.scenario.load_step->time / node_ts(cfg));
    std::vector<double> g;
    for (const auto& p : cfg.grid.nodes) g.push_back(p.G * (1.0 + opt.scenario.load_step->fraction));
    stepped.emplace(microgrid::make_shifted_network(cfg.grid, plant.eq, g));
  }

  RolloutResult res;
  EpisodeSummary& s = res.summary;
  s.episode = opt.episode;
  s.node_returns = Vec::Zero(n);
  s.min_b = std::numeric_limits<double>::infinity();
  s.invariance_margin = std::numeric_limits<double>::infinity();
  s.comparison_margin = std::numeric_limits<double>::infinity();
  if (opt.keep_log) res.log.emplace().episode = opt.episode;

  std::vector<BarrierState> bars(static_cast<std::size_t>(n), BarrierState(0));
  const std::vector<double> b0(static_cast<std::size_t>(n), 0.0);
  Vec wd_sum = Vec::Zero(n), wn_sum = Vec::Zero(n);
  std::vector<IoRecord> io;
  io.reserve(static_cast<std::size_t>(opt.horizon));

  NetworkState state = opt.init;
  std::vector<DecResult> decs(static_cast<std::size_t>(n));
  std::vector<LocalView> views(static_cast<std::size_t>(n));
  std::vector<Vec> obs(static_cast<std::size_t>(n));
  for (int t = 0; t < opt.horizon; ++t) {
    const Network& net = (stepped && t >= step_idx) ? *stepped : nominal;
    const CouplingSnapshot snap = net.coupling(state);
    Vec u(nominal.control_dim());
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      views[si] = make_local_view(net, sup, cfg.shield, i, state.x, snap.nu, bars[si].value());
      obs[si] = views[si].x.cwiseProduct(cfg.obs_scale);
      const Vec u_rl = agents.learners[si]->act(obs[si], opt.explore);
      decs[si] = dec_control(views[si], u_rl, &agents.stores[si], opt.shield_enabled);
      if (decs[si].fallback) ++s.fallback_steps;
      const Slice us = nominal.u_slice(i);
      u.segment(us.offset, us.size) = decs[si].u_dec;
      s.completeness_residual =
          std::max(s.completeness_residual,
                   max_abs(decs[si].u_dec - (decs[si].u_ff + decs[si].u_cbf)));
    }
    const NetworkState next = net.advance(state, u, snap);

    StepRecord rec;
    if (opt.keep_log) {
      rec.x = state.x;
      rec.z = state.z;
      for (Vec* v : {&rec.u_rl, &rec.u_ff, &rec.u_cbf, &rec.u_dec, &rec.b, &rec.w_n, &rec.w_d,
                     &rec.w_tilde, &rec.r})
        v->resize(n);
      rec.nu = snap.nu;
      rec.y_u = snap.y_u;
      rec.y_nu = snap.y_nu;
      rec.mu = snap.mu;
      rec.omega = snap.omega;
      rec.w_e.resize(m);
    }
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const NodeShieldConfig& nc = cfg.shield.nodes[si];
      const Vec y_u = net.node(i).output_u(views[si].x);
      const Vec y_nu = net.node(i).output_nu(views[si].x);
      const NodeSupplyValues w =
          node_supplies(sup.nodes[si], desired[si], decs[si].u_dec, views[si].nu, y_u, y_nu);
      const double b_prev = bars[si].value();
      bars[si].update(w.w_tilde);
      const double b = bars[si].value();
      s.min_b = std::min(s.min_b, b);
      s.invariance_margin = std::min(s.invariance_margin, b - (1.0 - nc.eta) * b_prev);
      s.comparison_margin = std::min(
          s.comparison_margin, b - std::pow(1.0 - nc.eta, static_cast<double>(t + 1)) * b0[si]);
      s.constraint_residual = std::max(
          s.constraint_residual, std::abs(decs[si].constraint_value - (-w.w_tilde + nc.eta * b_prev)));
      wd_sum(i) += w.w_d;
      wn_sum(i) += w.w_n;
      s.min_wd_prefix = std::min(s.min_wd_prefix, wd_sum(i));
      s.min_wn_prefix = std::min(s.min_wn_prefix, wn_sum(i));

      const Vec x_next = segment(next.x, nominal.x_slice(i));
      const double v_next = net.node(i).output_nu(x_next)(0);
      const double r = microgrid::reward(v_next, 0.0, cfg.grid.reward_k(i));
      s.node_returns(i) += r;
      s.max_abs_v = std::max(s.max_abs_v, std::abs(y_nu(0)));
      if (opt.learn) {
        agents.learners[si]->observe(
            {obs[si], decs[si].u_dec, x_next.cwiseProduct(cfg.obs_scale), r, t + 1 == opt.horizon});
        agents.stores[si].record(views[si].x, decs[si].u_dec - decs[si].u_rl);
      }
      if (opt.keep_log) {
        rec.u_rl(i) = decs[si].u_rl(0);
        rec.u_ff(i) = decs[si].u_ff(0);
        rec.u_cbf(i) = decs[si].u_cbf(0);
        rec.u_dec(i) = decs[si].u_dec(0);
        rec.b(i) = b;
        rec.w_n(i) = w.w_n;
        rec.w_d(i) = w.w_d;
        rec.w_tilde(i) = w.w_tilde;
        rec.r(i) = r;
      }
    }
    if (opt.keep_log) {
      for (int k = 0; k < m; ++k)
        rec.w_e(k) = eval_supply(sup.edges[static_cast<std::size_t>(k)],
                                 segment(snap.mu, nominal.mu_slice(k)),
                                 segment(snap.omega, nominal.omega_slice(k)));
      res.log->steps.push_back(std::move(rec));
    }
    io.push_back(IoRecord{u, snap.nu, snap.y_u, snap.y_nu, snap.mu, snap.omega});
    state = next;
  }
  s.ret = s.node_returns.sum();
  s.tainted = s.fallback_steps > 0;
  const SupplyBoundSeries bound = network_supply_bound(io, sup, desired, nominal.topology());
  s.supply_bound_ok = bound.ok;
  s.supply_bound_margin = bound.min_margin;
  s.supply_bound_max_lhs = bound.max_lhs;
  res.final_state = state;
  return res;
}

nlohmann::json EpisodeSummary::to_json() const {
  return {{"episode", episode},
          {"return", ret},
          {"node_returns", std::vector<double>(node_returns.data(),
                                               node_returns.data() + node_returns.size())},
          {"tainted", tainted},
          {"fallback_steps", fallback_steps},
          {"min_b", min_b},
          {"min_wd_prefix", min_wd_prefix},
          {"min_wn_prefix", min_wn_prefix},
          {"invariance_margin", invariance_margin},
          {"comparison_margin", comparison_margin},
          {"supply_bound_ok", supply_bound_ok},
          {"supply_bound_margin", supply_bound_margin},
          {"supply_bound_max_lhs", supply_bound_max_lhs},
          {"max_abs_v", max_abs_v},
          {"completeness_residual", completeness_residual},
          {"constraint_residual", constraint_residual}};
}

TrainingResult run_training(const RunConfig& cfg) {
  cfg.validate();
  const Plant plant = make_plant(cfg);
  TrainingResult out;
  out.assumptions = check_assumptions(cfg.grid, plant.supplies, cfg.shield);
  if (!out.assumptions.pass)
    throw AssumptionFailure("network assumptions fail: " + out.assumptions.to_json().dump());
  out.agents = make_agents(cfg, plant);
  const int n = plant.nominal->node_count();
  for (int k = 0; k < cfg.episodes; ++k) {
    std::mt19937_64 rng(stream_seed(cfg.seed, kInitStream, static_cast<std::uint64_t>(k)));
    RolloutOptions opt;
    opt.episode = k;
    opt.horizon = cfg.horizon;
    opt.explore = true;
    opt.learn = true;
    opt.keep_log = cfg.trajectories == "all" ||
                   (cfg.trajectories == "first_last" && (k == 0 || k + 1 == cfg.episodes));
    opt.shield_enabled = cfg.shield.enabled;
    opt.scenario = cfg.train_scenario;
    opt.init = initial_state(plant, cfg.init_std_fraction, rng);
    RolloutResult r = rollout(cfg, plant, out.agents, opt);
    const Vec node_returns = r.summary.node_returns;
    for_each_node(n, cfg.threads, [&](int i) {
      out.agents.learners[static_cast<std::size_t>(i)]->end_episode(node_returns(i));
      out.agents.stores[static_cast<std::size_t>(i)].end_episode();
    });
    out.episodes.push_back(std::move(r.summary));
    if (r.log) out.logs.push_back(std::move(*r.log));
  }
  return out;
}

nlohmann::json EvaluationMetrics::to_json() const {
  return {{"band", band},
          {"max_abs_v_error", max_abs_v_error},
          {"max_rel_v_error", max_rel_v_error},
          {"settling_time", optional_json(settling_time)},
          {"pre_step_rel_error", pre_step_rel_error},
          {"recovery_time", optional_json(recovery_time)},
          {"final_rel_error", final_rel_error},
          {"min_b", min_b},
          {"supply_bound_margin", supply_bound_margin},
          {"supply_bound_max_lhs", supply_bound_max_lhs},
          {"supply_bound_ok", supply_bound_ok},
          {"tainted", tainted}};
}

EvaluationResult run_evaluation(const RunConfig& cfg, Agents& agents, bool shield_enabled) {
  cfg.validate();
  const Plant plant = make_plant(cfg);
  if (agents.learners.size() != static_cast<std::size_t>(plant.nominal->node_count()))
    throw ConfigError("checkpoint has " + std::to_string(agents.learners.size()) +
                      " nodes, the configured network has " +
                      std::to_string(plant.nominal->node_count()));
  std::mt19937_64 rng(stream_seed(cfg.seed, kEvalStream, 0));
  RolloutOptions opt;
  opt.episode = -1;
  opt.horizon = cfg.eval_horizon;
  opt.keep_log = true;
  opt.shield_enabled = shield_enabled;
  opt.scenario = cfg.eval_scenario;
  opt.init = initial_state(plant, cfg.eval_init_std_fraction, rng);
  RolloutResult r = rollout(cfg, plant, agents, opt);

  EvaluationResult ev;
  ev.log = std::move(*r.log);
  ev.summary = r.summary;
  EvaluationMetrics& mt = ev.metrics;
  const double ts = node_ts(cfg);
  const auto h = static_cast<std::int64_t>(ev.log.steps.size());
  const Eigen::Index n = plant.eq.V.size();
  std::vector<double> rel(static_cast<std::size_t>(h));
  for (std::int64_t t = 0; t < h; ++t) {
    const Vec& x = ev.log.steps[static_cast<std::size_t>(t)].x;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::abs(x(2 * i + 1));
      mt.max_abs_v_error = std::max(mt.max_abs_v_error, e);
      worst = std::max(worst, e / std::abs(plant.eq.V(i)));
    }
    rel[static_cast<std::size_t>(t)] = worst;
    mt.max_rel_v_error = std::max(mt.max_rel_v_error, worst);
  }
  auto max_over = [&](std::int64_t a, std::int64_t b) {
    double v = 0.0;
    for (std::int64_t t = std::max<std::int64_t>(a, 0); t < b; ++t)
      v = std::max(v, rel[static_cast<std::size_t>(t)]);
    return v;
  };
  // Last index in [a, b) outside the band, or a - 1.
  auto last_violation = [&](std::int64_t a, std::int64_t b) {
    std::int64_t last = a - 1;
    for (std::int64_t t = a; t < b; ++t)
      if (rel[static_cast<std::size_t>(t)] >= mt.band) last = t;
    return last;
  };
  std::int64_t step_idx = h;
  if (cfg.eval_scenario.load_step)
    step_idx = std::min<std::int64_t>(h, std::llround(cfg.eval_scenario.load_step->time / ts));
  const std::int64_t pre_end = step_idx;
  if (pre_end > 0) {
    const std::int64_t last = last_violation(0, pre_end);
    if (last < pre_end - 1) mt.settling_time = static_cast<double>(last + 1) * ts;
    mt.pre_step_rel_error = max_over(pre_end - std::max<std::int64_t>(1, pre_end / 5), pre_end);
  }
  if (step_idx < h) {
    const std::int64_t last = last_violation(step_idx, h);
    if (last < h - 1) mt.recovery_time = static_cast<double>(last + 1 - step_idx) * ts;
  }
  mt.final_rel_error = max_over(h - std::max<std::int64_t>(1, h / 10), h);
  mt.min_b = r.summary.min_b;
  mt.supply_bound_margin = r.summary.supply_bound_margin;
  mt.supply_bound_max_lhs = r.summary.supply_bound_max_lhs;
  mt.supply_bound_ok = r.summary.supply_bound_ok;
  mt.tainted = r.summary.tainted;
  return ev;
}

std::string trajectory_csv(const EpisodeLog& log, const Plant& plant) {
  const Network& net = *plant.nominal;
  const int n = net.node_count();
  const int m = net.edge_count();
  std::vector<std::string> header{"t"};
  static const char* node_cols[] = {"u_rl", "u_ff",  "u_cbf", "u_dec", "nu",      "y_u", "y_nu",
                                    "b",    "w_n",   "w_d",   "w_tilde", "r"};
  for (int i = 0; i < n; ++i) {
    const std::string p = "node" + std::to_string(i) + "_";
    for (Eigen::Index j = 0; j < net.x_slice(i).size; ++j) header.push_back(p + "x" + std::to_string(j));
    for (const char* c : node_cols) header.push_back(p + c);
  }
  for (int k = 0; k < m; ++k) {
    const std::string p = "edge" + std::to_string(k) + "_";
    for (Eigen::Index j = 0; j < net.z_slice(k).size; ++j) header.push_back(p + "z" + std::to_string(j));
    for (const char* c : {"mu", "omega", "w_e"}) header.push_back(p + c);
  }
  std::ostringstream os;
  csv::write_row(os, header);
  using csv::format_double;
  std::vector<std::string> row;
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    const StepRecord& s = log.steps[t];
    row.clear();
    row.push_back(std::to_string(t));
    for (int i = 0; i < n; ++i) {
      const Slice xs = net.x_slice(i);
      for (Eigen::Index j = 0; j < xs.size; ++j) row.push_back(format_double(s.x(xs.offset + j)));
      for (const Vec* v : {&s.u_rl, &s.u_ff, &s.u_cbf, &s.u_dec, &s.nu, &s.y_u, &s.y_nu, &s.b,
                           &s.w_n, &s.w_d, &s.w_tilde, &s.r})
        row.push_back(format_double((*v)(i)));
    }
    for (int k = 0; k < m; ++k) {
      const Slice zs = net.z_slice(k);
      for (Eigen::Index j = 0; j < zs.size; ++j) row.push_back(format_double(s.z(zs.offset + j)));
      row.push_back(format_double(s.mu(k)));
      row.push_back(format_double(s.omega(k)));
      row.push_back(format_double(s.w_e(k)));
    }
    csv::write_row(os, row);
  }
  return os.str();
}

std::string episode_returns_csv(const std::vector<EpisodeSummary>& episodes) {
  std::ostringstream os;
  std::vector<std::string> header{"episode", "return"};
  const Eigen::Index n = episodes.empty() ? 0 : episodes.front().node_returns.size();
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("node" + std::to_string(i) + "_return");
  for (const char* c : {"tainted", "fallback_steps", "min_b"}) header.push_back(c);
  csv::write_row(os, header);
  for (const auto& e : episodes) {
    std::vector<std::string> row{std::to_string(e.episode), csv::format_double(e.ret)};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(csv::format_double(e.node_returns(i)));
    row.push_back(e.tainted ? "1" : "0");
    row.push_back(std::to_string(e.fallback_steps));
    row.push_back(csv::format_double(e.min_b));
    csv::write_row(os, row);
  }
  return os.str();
}

}  // namespace dissipanet::harness
