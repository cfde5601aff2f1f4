#include "dissipanet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dissipanet/errors.hpp"

namespace dissipanet::config {

using nlohmann::json;

namespace {

constexpr const char* kDefaults = R"json({
  "network": {
    "nodes": 4,
    "edges": null
  },
  "microgrid": {
    "R": [0.2, 0.3, 0.5, 0.1],
    "L": [1.8e-3, 2.0e-3, 3.0e-3, 2.2e-3],
    "C": [2.2e-3, 1.9e-3, 1.7e-3, 2.5e-3],
    "R_load": [16.7, 50.0, 16.7, 20.0],
    "Vs": 100.0,
    "Ts": 1e-5,
    "v_ref": 48.0,
    "reward_k": 1.0,
    "lines": {
      "Rl": [0.07, 0.05, 0.08, 0.06],
      "Ll": [2.1e-6, 2.3e-6, 2.0e-6, 1.8e-6]
    },
    "supply_model": "discrete"
  },
  "shield": {
    "enabled": true,
    "eta": 0.5,
    "epsilon_scale": 1.0,
    "delta_d": null,
    "epsilon_d": null,
    "box": true,
    "feedforward": {
      "mode": "knn",
      "k": 5,
      "lambda": 1e-3,
      "window": 1,
      "capacity": 4096
    }
  },
  "learners": {
    "kinds": "ddpg",
    "obs_scale": [1.0, 1.0],
    "ddpg": {
      "gamma": 0.99,
      "actor_hidden": [32, 32],
      "critic_hidden": [32, 32],
      "actor_lr": 1e-3,
      "critic_lr": 1e-3,
      "tau": 0.01,
      "replay_capacity": 100000,
      "batch_size": 64,
      "noise_frac": 0.1,
      "updates_per_episode": 200
    },
    "cem": {
      "population": 8,
      "elite_frac": 0.25,
      "init_std": 0.02,
      "min_std": 1e-4
    }
  },
  "run": {
    "episodes": 200,
    "horizon": 2000,
    "seed": 7,
    "init_std_fraction": 0.01,
    "train_load_step": null,
    "eval_horizon": 15000,
    "eval_init_std_fraction": 0.0,
    "eval_load_step": null,
    "trajectories": "first_last",
    "threads": 1
  }
})json";

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config field '" + path + "': " + msg);
}

bool numeric_like(const json& j) { return j.is_number() || j.is_array(); }

json merge_into(const json& def, const json& user, const std::string& path) {
  if (def.is_null()) return user;
  if (def.is_object()) {
    if (!user.is_object()) fail(path, "expected an object");
    json out = def;
    for (auto it = user.begin(); it != user.end(); ++it) {
      if (!def.contains(it.key())) {
        std::string known;
        for (auto d = def.begin(); d != def.end(); ++d) known += (known.empty() ? "" : ", ") + d.key();
        fail(join(path, it.key()), "unknown key (expected one of: " + known + ")");
      }
      out[it.key()] = merge_into(def[it.key()], it.value(), join(path, it.key()));
    }
    return out;
  }
  if (numeric_like(def)) {
    if (!numeric_like(user)) fail(path, "expected a number or an array");
    return user;
  }
  if (def.is_boolean()) {
    if (!user.is_boolean()) fail(path, "expected true or false");
    return user;
  }
  if (def.is_string()) {
    if (!user.is_string() && !user.is_array()) fail(path, "expected a string");
    return user;
  }
  return user;
}

const json& at(const json& j, const std::string& path) {
  const json* cur = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (!cur->is_object() || !cur->contains(key)) fail(path, "missing");
    cur = &(*cur)[key];
    if (dot == std::string::npos) return *cur;
    start = dot + 1;
  }
}

double number(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::string string(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

/// Scalar broadcast to n entries, or an array of exactly n numbers.
std::vector<double> per_item(const json& v, std::size_t n, const std::string& path,
                             const char* what) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array()) fail(path, "expected a number or an array");
  if (v.size() != n)
    fail(path, "has " + std::to_string(v.size()) + " entries, expected one per " + what + " (" +
                   std::to_string(n) + ")");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<int> int_list(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(path, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::optional<harness::LoadStep> load_step(const json& j, const std::string& path) {
  const json& v = at(j, path);
  if (v.is_null()) return std::nullopt;
  if (!v.is_object()) fail(path, "expected null or {\"time\": ..., \"fraction\": ...}");
  for (auto it = v.begin(); it != v.end(); ++it)
    if (it.key() != "time" && it.key() != "fraction")
      fail(join(path, it.key()), "unknown key (expected time or fraction)");
  return harness::LoadStep{number(j, path + ".time"), number(j, path + ".fraction")};
}

NetworkTopology topology(const json& j, int n) {
  const json& e = at(j, "network.edges");
  if (e.is_null()) return NetworkTopology::ring(n);
  if (!e.is_array()) fail("network.edges", "expected null (ring) or a list of [positive, negative] pairs");
  std::vector<EdgeEnds> edges;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const json& p = e[k];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      fail("network.edges[" + std::to_string(k) + "]", "expected [positive, negative]");
    edges.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  try {
    return NetworkTopology(n, edges);
  } catch (const Error& err) {
    fail("network.edges", err.what());
  }
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

}  // namespace

const json& defaults() {
  static const json d = json::parse(kDefaults);
  return d;
}

json merge(const json& user) { return merge_into(defaults(), user, ""); }

harness::RunConfig to_run_config(const json& j) {
  harness::RunConfig cfg;
  const std::int64_t n64 = integer(j, "network.nodes");
  if (n64 < 1 || n64 > 100000) fail("network.nodes", "must be a positive node count");
  const int n = static_cast<int>(n64);
  const auto nn = static_cast<std::size_t>(n);

  microgrid::MicrogridParams mg;
  mg.topo = topology(j, n);
  const auto m = static_cast<std::size_t>(mg.topo.edge_count());
  const double ts = number(j, "microgrid.Ts");
  const auto r = per_item(at(j, "microgrid.R"), nn, "microgrid.R", "node");
  const auto l = per_item(at(j, "microgrid.L"), nn, "microgrid.L", "node");
  const auto c = per_item(at(j, "microgrid.C"), nn, "microgrid.C", "node");
  const auto rload = per_item(at(j, "microgrid.R_load"), nn, "microgrid.R_load", "node");
  const auto vs = per_item(at(j, "microgrid.Vs"), nn, "microgrid.Vs", "node");
  const auto vref = per_item(at(j, "microgrid.v_ref"), nn, "microgrid.v_ref", "node");
  const auto rk = per_item(at(j, "microgrid.reward_k"), nn, "microgrid.reward_k", "node");
  const auto rl = per_item(at(j, "microgrid.lines.Rl"), m, "microgrid.lines.Rl", "edge");
  const auto ll = per_item(at(j, "microgrid.lines.Ll"), m, "microgrid.lines.Ll", "edge");
  for (std::size_t i = 0; i < nn; ++i) {
    if (!(rload[i] > 0.0)) fail("microgrid.R_load", "load resistances must be positive");
    mg.nodes.push_back({r[i], l[i], c[i], 1.0 / rload[i], vs[i], ts});
  }
  for (std::size_t k = 0; k < m; ++k) mg.lines.push_back({rl[k], ll[k], ts});
  mg.v_ref = Eigen::Map<const Vec>(vref.data(), n);
  mg.reward_k = Eigen::Map<const Vec>(rk.data(), n);
  cfg.grid = mg;
  try {
    cfg.supply_model = microgrid::parse_supply_model(string(j, "microgrid.supply_model"));
  } catch (const InvalidParameter& e) {
    fail("microgrid.supply_model", e.what());
  }

  const auto eq = microgrid::compute_equilibrium(mg.v_ref, mg.nodes, mg.lines, mg.topo);
  const auto supplies = microgrid::microgrid_supplies(mg, cfg.supply_model);
  cfg.shield = microgrid::default_shield(supplies, eq, number(j, "shield.eta"),
                                         number(j, "shield.epsilon_scale"),
                                         boolean(j, "shield.box"));
  cfg.shield.enabled = boolean(j, "shield.enabled");
  if (!at(j, "shield.delta_d").is_null()) {
    const auto d = per_item(at(j, "shield.delta_d"), nn, "shield.delta_d", "node");
    for (std::size_t i = 0; i < nn; ++i) cfg.shield.nodes[i].delta_d = d[i];
  }
  if (!at(j, "shield.epsilon_d").is_null()) {
    const auto e = per_item(at(j, "shield.epsilon_d"), nn, "shield.epsilon_d", "node");
    for (std::size_t i = 0; i < nn; ++i) cfg.shield.nodes[i].epsilon_d = e[i];
  }
  try {
    cfg.feedforward.mode = parse_feedforward_mode(string(j, "shield.feedforward.mode"));
  } catch (const InvalidParameter& e) {
    fail("shield.feedforward.mode", e.what());
  }
  cfg.feedforward.k = static_cast<int>(integer(j, "shield.feedforward.k"));
  cfg.feedforward.lambda = number(j, "shield.feedforward.lambda");
  cfg.feedforward.window = static_cast<int>(integer(j, "shield.feedforward.window"));
  cfg.feedforward.capacity = static_cast<int>(integer(j, "shield.feedforward.capacity"));
  if (cfg.feedforward.k < 1 || cfg.feedforward.window < 1 || cfg.feedforward.capacity < 1 ||
      !(cfg.feedforward.lambda > 0.0))
    fail("shield.feedforward", "k, window, capacity and lambda must be positive");

  const json& kinds = at(j, "learners.kinds");
  if (kinds.is_string()) {
    cfg.learner_kinds.assign(nn, kinds.get<std::string>());
  } else {
    if (!kinds.is_array() || kinds.size() != nn)
      fail("learners.kinds", "expected a string or one string per node");
    for (const auto& k : kinds) {
      if (!k.is_string()) fail("learners.kinds", "expected strings");
      cfg.learner_kinds.push_back(k.get<std::string>());
    }
  }
  const auto os = per_item(at(j, "learners.obs_scale"), 2, "learners.obs_scale", "state entry");
  cfg.obs_scale = Eigen::Map<const Vec>(os.data(), 2);
  auto& d = cfg.ddpg;
  d.gamma = number(j, "learners.ddpg.gamma");
  d.actor_hidden = int_list(j, "learners.ddpg.actor_hidden");
  d.critic_hidden = int_list(j, "learners.ddpg.critic_hidden");
  d.actor_lr = number(j, "learners.ddpg.actor_lr");
  d.critic_lr = number(j, "learners.ddpg.critic_lr");
  d.tau = number(j, "learners.ddpg.tau");
  const std::int64_t cap = integer(j, "learners.ddpg.replay_capacity");
  if (cap < 1) fail("learners.ddpg.replay_capacity", "must be positive");
  d.replay_capacity = static_cast<std::size_t>(cap);
  d.batch_size = static_cast<int>(integer(j, "learners.ddpg.batch_size"));
  d.noise_frac = number(j, "learners.ddpg.noise_frac");
  d.updates_per_episode = static_cast<int>(integer(j, "learners.ddpg.updates_per_episode"));
  auto& ce = cfg.cem;
  ce.population = static_cast<int>(integer(j, "learners.cem.population"));
  ce.elite_frac = number(j, "learners.cem.elite_frac");
  ce.init_std = number(j, "learners.cem.init_std");
  ce.min_std = number(j, "learners.cem.min_std");
  if (ce.population < 1 || !(ce.elite_frac > 0.0 && ce.elite_frac <= 1.0) ||
      !(ce.init_std >= 0.0) || !(ce.min_std >= 0.0))
    fail("learners.cem", "population must be positive, elite_frac in (0, 1], stds nonnegative");

  cfg.episodes = static_cast<int>(integer(j, "run.episodes"));
  cfg.horizon = static_cast<int>(integer(j, "run.horizon"));
  const json& seed = at(j, "run.seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    fail("run.seed", "expected a nonnegative integer");
  cfg.seed = seed.get<std::uint64_t>();
  cfg.init_std_fraction = number(j, "run.init_std_fraction");
  cfg.train_scenario.load_step = load_step(j, "run.train_load_step");
  cfg.eval_horizon = static_cast<int>(integer(j, "run.eval_horizon"));
  cfg.eval_init_std_fraction = number(j, "run.eval_init_std_fraction");
  cfg.eval_scenario.load_step = load_step(j, "run.eval_load_step");
  cfg.trajectories = string(j, "run.trajectories");
  cfg.threads = static_cast<int>(integer(j, "run.threads"));
  cfg.validate();
  return cfg;
}

std::string hash_json(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Loaded load_text(const std::string& text, const std::string& source) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte)) + ": JSON parse error: " +
                      e.what());
  }
  Loaded out;
  out.resolved = merge(user);
  out.run = to_run_config(out.resolved);
  out.hash = hash_json(out.resolved);
  return out;
}

Loaded load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_text(ss.str(), path);
}

Loaded load_defaults() { return load_text("{}", "<defaults>"); }

}  // namespace dissipanet::config
