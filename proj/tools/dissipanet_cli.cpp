// dissipanet: train, evaluate and inspect dissipativity-shielded RL
// controllers on networked systems.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dissipanet/config.hpp"
#include "dissipanet/csv.hpp"
#include "dissipanet/errors.hpp"
#include "dissipanet/harness.hpp"
#include "dissipanet/shield.hpp"

#ifndef DISSIPANET_VERSION
#define DISSIPANET_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dissipanet;

namespace {

constexpr int kExitError = 1;
constexpr int kExitAssumption = 2;
constexpr int kExitDivergence = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string shield;  // "", "on" or "off"
  std::vector<double> load_step;
  bool json_out = false;
  std::string checkpoint;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

config::Loaded load(const Options& o) {
  config::Loaded cfg = o.config.empty() ? config::load_defaults() : config::load_file(o.config);
  json& r = cfg.resolved;
  if (o.seed) r["run"]["seed"] = *o.seed;
  if (o.episodes) r["run"]["episodes"] = *o.episodes;
  if (!o.shield.empty()) r["shield"]["enabled"] = o.shield == "on";
  if (!o.load_step.empty())
    r["run"]["eval_load_step"] = {{"time", o.load_step[0]}, {"fraction", o.load_step[1]}};
  if (const char* env = std::getenv("DISSIPANET_THREADS")) {
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || t < 1)
      throw ConfigError(std::string("DISSIPANET_THREADS must be a positive integer, got '") + env + "'");
    r["run"]["threads"] = t;
  }
  cfg.run = config::to_run_config(r);
  cfg.hash = config::hash_json(r);
  return cfg;
}

void emit(const Options& o, const json& j, const std::string& text) {
  if (o.json_out)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::string fmt(double v) { return csv::format_double(v); }

std::string assumption_text(const harness::AssumptionReport& r) {
  std::ostringstream os;
  os << "structural residual     " << fmt(r.assumption3_residual) << "\n"
     << "alpha                   " << fmt(r.alpha) << "\n"
     << "beta                    " << fmt(r.beta) << "\n"
     << "epsilon_e               " << fmt(r.epsilon_e) << "\n"
     << "delta_e                 " << fmt(r.delta_e) << "\n"
     << "lambda_min B_delta      " << fmt(r.assumption4.lambda_min_b_delta) << "\n"
     << "lambda_min B_epsilon    " << fmt(r.assumption4.lambda_min_b_epsilon) << "\n"
     << (r.pass ? (r.strict ? "PASS (strict)\n" : "PASS\n") : "FAIL\n");
  return os.str();
}

class Manifest {
 public:
  Manifest(fs::path dir, const config::Loaded& cfg, std::string command)
      : dir_(std::move(dir)) {
    doc_ = {{"command", std::move(command)},
            {"version", DISSIPANET_VERSION},
            {"config_hash", cfg.hash},
            {"seed", cfg.run.seed},
            {"started_at", utc_now()},
            {"finished_at", nullptr},
            {"status", "running"},
            {"outputs", json::array()}};
    write();
  }

  void add(const std::string& name) { doc_["outputs"].push_back(name); }
  void finish(const std::string& status) {
    doc_["status"] = status;
    doc_["finished_at"] = utc_now();
    write();
  }

 private:
  void write() { csv::write_file_atomic((dir_ / "manifest.json").string(), doc_.dump(2) + "\n"); }

  fs::path dir_;
  json doc_;
};

json checkpoint_json(const config::Loaded& cfg, const harness::Agents& agents) {
  json j = agents.to_json();
  j["format"] = "dissipanet-checkpoint";
  j["version"] = 1;
  j["config_hash"] = cfg.hash;
  return j;
}

harness::Agents read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "dissipanet-checkpoint" || j.value("version", 0) != 1)
    throw ConfigError("'" + path + "' is not a version 1 dissipanet checkpoint");
  try {
    return harness::Agents::from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

std::string metrics_text(const harness::EvaluationMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) + " s" : std::string("never"); };
  std::ostringstream os;
  os << "max |V - Vref|          " << fmt(m.max_abs_v_error) << " V\n"
     << "max relative error      " << fmt(m.max_rel_v_error) << "\n"
     << "settling time           " << opt(m.settling_time) << "\n"
     << "pre-step error          " << fmt(m.pre_step_rel_error) << "\n"
     << "recovery time           " << opt(m.recovery_time) << "\n"
     << "final error             " << fmt(m.final_rel_error) << "\n"
     << "min barrier             " << fmt(m.min_b) << "\n"
     << "supply bound margin     " << fmt(m.supply_bound_margin) << "\n"
     << "supply bound            " << (m.supply_bound_ok ? "ok" : "VIOLATED") << "\n"
     << "tainted                 " << (m.tainted ? "yes" : "no") << "\n";
  return os.str();
}

void write_eval_outputs(const fs::path& out, const harness::EvaluationResult& ev,
                        const harness::Plant& plant, const std::string& name, Manifest& manifest) {
  const std::string traj = "trajectory_" + name + ".csv";
  csv::write_file_atomic((out / traj).string(), harness::trajectory_csv(ev.log, plant));
  manifest.add(traj);
}

int cmd_check(const Options& o) {
  const auto cfg = load(o);
  const auto plant = harness::make_plant(cfg.run);
  const auto rep = harness::check_assumptions(cfg.run.grid, plant.supplies, cfg.run.shield);
  emit(o, rep.to_json(), assumption_text(rep));
  return rep.pass ? 0 : kExitAssumption;
}

int cmd_train(const Options& o) {
  const auto cfg = load(o);
  const auto plant = harness::make_plant(cfg.run);
  const auto rep = harness::check_assumptions(cfg.run.grid, plant.supplies, cfg.run.shield);
  if (!rep.pass) {
    std::cerr << "assumption check failed\n" << assumption_text(rep);
    if (o.json_out) std::cout << rep.to_json().dump(2) << "\n";
    return kExitAssumption;
  }
  const fs::path out = o.out.empty() ? fs::path("run") : fs::path(o.out);
  fs::create_directories(out);
  Manifest manifest(out, cfg, "train");
  csv::write_file_atomic((out / "config.json").string(), cfg.resolved.dump(2) + "\n");
  manifest.add("config.json");
  try {
    harness::TrainingResult tr = harness::run_training(cfg.run);
    csv::write_file_atomic((out / "episode_returns.csv").string(),
                           harness::episode_returns_csv(tr.episodes));
    manifest.add("episode_returns.csv");
    for (const auto& log : tr.logs) {
      const std::string name = "trajectory_" + std::to_string(log.episode) + ".csv";
      csv::write_file_atomic((out / name).string(), harness::trajectory_csv(log, plant));
      manifest.add(name);
    }
    csv::write_file_atomic((out / "checkpoint.json").string(),
                           checkpoint_json(cfg, tr.agents).dump() + "\n");
    manifest.add("checkpoint.json");

    const auto ev = harness::run_evaluation(cfg.run, tr.agents, cfg.run.shield.enabled);
    write_eval_outputs(out, ev, plant, "eval", manifest);
    int tainted = 0;
    for (const auto& e : tr.episodes) tainted += e.tainted ? 1 : 0;
    double min_b = std::numeric_limits<double>::infinity();
    double min_wd = std::numeric_limits<double>::infinity();
    for (const auto& e : tr.episodes)
      if (!e.tainted) {
        min_b = std::min(min_b, e.min_b);
        min_wd = std::min(min_wd, e.min_wd_prefix);
      }
    // mean and std of the returns over the last tenth of the run
    const std::size_t window = std::max<std::size_t>(1, tr.episodes.size() / 10);
    double mean = 0.0, var = 0.0;
    for (std::size_t i = tr.episodes.size() - window; i < tr.episodes.size(); ++i)
      mean += tr.episodes[i].ret / static_cast<double>(window);
    for (std::size_t i = tr.episodes.size() - window; i < tr.episodes.size(); ++i)
      var += std::pow(tr.episodes[i].ret - mean, 2) / static_cast<double>(window);
    const json metrics = {{"config_hash", cfg.hash},
                          {"assumptions", rep.to_json()},
                          {"training",
                           {{"episodes", tr.episodes.size()},
                            {"tainted_episodes", tainted},
                            {"min_b_untainted", min_b},
                            {"min_wd_prefix_untainted", min_wd},
                            {"final_return", tr.episodes.back().ret},
                            {"final_window", window},
                            {"final_window_return_mean", mean},
                            {"final_window_return_std", std::sqrt(var)}}},
                          {"evaluation", ev.metrics.to_json()}};
    csv::write_file_atomic((out / "metrics.json").string(), metrics.dump(2) + "\n");
    manifest.add("metrics.json");
    manifest.finish("ok");
    std::ostringstream os;
    os << "trained " << tr.episodes.size() << " episodes (" << tainted << " tainted), final return "
       << fmt(tr.episodes.back().ret) << "\n"
       << metrics_text(ev.metrics) << "outputs in " << out.string() << "\n";
    emit(o, metrics, os.str());
    return 0;
  } catch (const NumericalDivergence&) {
    manifest.finish("diverged");
    throw;
  } catch (...) {
    manifest.finish("failed");
    throw;
  }
}

int cmd_evaluate(const Options& o) {
  const auto cfg = load(o);
  harness::Agents agents = read_checkpoint(o.checkpoint);
  const auto plant = harness::make_plant(cfg.run);
  const auto ev = harness::run_evaluation(cfg.run, agents, cfg.run.shield.enabled);
  const json metrics = {{"config_hash", cfg.hash}, {"evaluation", ev.metrics.to_json()}};
  if (!o.out.empty()) {
    const fs::path out(o.out);
    fs::create_directories(out);
    Manifest manifest(out, cfg, "evaluate");
    write_eval_outputs(out, ev, plant, "eval", manifest);
    csv::write_file_atomic((out / "metrics.json").string(), metrics.dump(2) + "\n");
    manifest.add("metrics.json");
    manifest.finish("ok");
  }
  emit(o, metrics, metrics_text(ev.metrics));
  return 0;
}

struct ProjectArgs {
  std::vector<double> r, c, u_ff, lo, hi;
  double k = 0.0;
};

int cmd_project(const Options& o, const ProjectArgs& a) {
  const auto n = static_cast<Eigen::Index>(a.c.size());
  if (a.u_ff.size() != a.c.size())
    throw DimensionError("--u-ff needs as many entries as --c");
  if (a.r.size() != a.c.size() * a.c.size())
    throw DimensionError("--r needs n*n entries (row-major) for n = " + std::to_string(n));
  DissipConstraint con;
  con.r = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(a.r.data(), n, n);
  con.c = Eigen::Map<const Vec>(a.c.data(), n);
  con.k = a.k;
  std::optional<ActionBox> box;
  if (!a.lo.empty() || !a.hi.empty()) {
    if (a.lo.size() != a.c.size() || a.hi.size() != a.c.size())
      throw DimensionError("--lo and --hi need as many entries as --c");
    box = ActionBox{Eigen::Map<const Vec>(a.lo.data(), n), Eigen::Map<const Vec>(a.hi.data(), n)};
  }
  const Vec u_ff = Eigen::Map<const Vec>(a.u_ff.data(), n);
  const Projection p = project(con, u_ff, box);
  auto list = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  std::ostringstream os;
  for (Eigen::Index i = 0; i < n; ++i)
    os << "u[" << i << "] = " << fmt(p.u(i)) << "   a[" << i << "] = " << fmt(p.a(i)) << "\n";
  os << "constraint value = " << fmt(p.residual) << "\n";
  emit(o, {{"u", list(p.u)}, {"a", list(p.a)}, {"constraint_value", p.residual}}, os.str());
  return 0;
}

void add_common(CLI::App* sub, Options& o, bool with_train_flags) {
  sub->add_option("--config", o.config, "JSON run configuration (defaults when omitted)");
  sub->add_option("--seed", o.seed, "override run.seed");
  sub->add_option("--shield", o.shield, "enable or disable the shield")
      ->check(CLI::IsMember({"on", "off"}));
  sub->add_flag("--json", o.json_out, "print machine-readable JSON");
  if (with_train_flags) {
    sub->add_option("--episodes", o.episodes, "override run.episodes")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dissipativity-shielded reinforcement learning on networked systems"};
  app.set_version_flag("--version", DISSIPANET_VERSION);
  app.require_subcommand(1);
  Options o;
  ProjectArgs pa;

  auto* train = app.add_subcommand("train", "check assumptions, train, evaluate and save");
  add_common(train, o, true);
  train->add_option("--out", o.out, "output directory")->default_str("run");
  train->add_option("--load-step", o.load_step, "evaluation load step: <t_sec> <fraction>")
      ->expected(2);

  auto* eval = app.add_subcommand("evaluate", "deterministic rollout of a checkpoint");
  add_common(eval, o, false);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint.json written by train")->required();
  eval->add_option("--out", o.out, "output directory for the trajectory and metrics");
  eval->add_option("--load-step", o.load_step, "load step: <t_sec> <fraction>")->expected(2);

  auto* check = app.add_subcommand("check-assumptions", "structural and spectral network checks");
  add_common(check, o, false);

  auto* proj = app.add_subcommand("project", "project u_ff onto u^T r u - c^T u + k >= 0");
  proj->add_option("--r", pa.r, "r, n*n entries row-major")->required();
  proj->add_option("--c", pa.c, "c, n entries")->required();
  proj->add_option("--k", pa.k, "constant term")->required();
  proj->add_option("--u-ff", pa.u_ff, "point to project, n entries")->required();
  proj->add_option("--lo", pa.lo, "box lower bounds");
  proj->add_option("--hi", pa.hi, "box upper bounds");
  proj->add_flag("--json", o.json_out, "print machine-readable JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_evaluate(o);
    if (*check) return cmd_check(o);
    if (*proj) return cmd_project(o, pa);
  } catch (const AssumptionFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const NumericalDivergence& e) {
    std::cerr << "error: divergence in " << e.component() << " at step " << e.step() << ": "
              << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
