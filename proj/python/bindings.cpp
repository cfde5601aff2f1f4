#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dissipanet/config.hpp"
#include "dissipanet/dissipativity.hpp"
#include "dissipanet/errors.hpp"
#include "dissipanet/harness.hpp"
#include "dissipanet/microgrid.hpp"
#include "dissipanet/shield.hpp"

namespace py = pybind11;
using namespace dissipanet;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with json.loads.
config::Loaded load(const std::optional<std::string>& text) {
  return text ? config::load_text(*text, "<python>") : config::load_defaults();
}

py::dict project_py(const Mat& r, const Vec& c, double k, const Vec& u_ff,
                    const std::optional<Vec>& lo, const std::optional<Vec>& hi) {
  std::optional<ActionBox> box;
  if (lo || hi) {
    if (!lo || !hi) throw InvalidParameter("project: give both lo and hi or neither");
    box = ActionBox{*lo, *hi};
  }
  const Projection p = project(DissipConstraint{r, c, k}, u_ff, box);
  py::dict d;
  d["u"] = p.u;
  d["a"] = p.a;
  d["residual"] = p.residual;
  return d;
}

py::tuple train_py(const std::optional<std::string>& cfg_text) {
  const auto loaded = load(cfg_text);
  harness::TrainingResult tr = [&] {
    py::gil_scoped_release release;
    return harness::run_training(loaded.run);
  }();
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& e : tr.episodes) eps.push_back(e.to_json());
  return py::make_tuple(eps.dump(), tr.agents.to_json().dump(),
                        harness::episode_returns_csv(tr.episodes));
}

py::tuple evaluate_py(const std::optional<std::string>& cfg_text, const std::string& checkpoint,
                      bool shield) {
  const auto loaded = load(cfg_text);
  harness::Agents agents = harness::Agents::from_json(nlohmann::json::parse(checkpoint));
  const harness::EvaluationResult ev = [&] {
    py::gil_scoped_release release;
    return harness::run_evaluation(loaded.run, agents, shield);
  }();
  const harness::Plant plant = harness::make_plant(loaded.run);
  return py::make_tuple(ev.metrics.to_json().dump(), ev.summary.to_json().dump(),
                        harness::trajectory_csv(ev.log, plant));
}

}  // namespace

PYBIND11_MODULE(_dissipanet, m) {
  m.doc() = "dissipativity-shielded RL core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<AssumptionFailure>(m, "AssumptionFailure", base.ptr());
  py::register_exception<NumericalDivergence>(m, "NumericalDivergence", base.ptr());
  py::register_exception<InfeasibleConstraint>(m, "InfeasibleConstraint", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());

  m.def("project", &project_py, py::arg("r"), py::arg("c"), py::arg("k"), py::arg("u_ff"),
        py::arg("lo") = std::nullopt, py::arg("hi") = std::nullopt,
        "Min-norm projection of u_ff onto u^T r u - c^T u + k >= 0.");

  m.def(
      "eval_supply",
      [](const Mat& q, const Mat& s, const Mat& r, const Vec& a, const Vec& y) {
        return eval_supply(QsrSupply(q, s, r), a, y);
      },
      py::arg("q"), py::arg("s"), py::arg("r"), py::arg("a"), py::arg("y"));

  m.def(
      "desired_supply",
      [](const Vec& nu, const Vec& y_u, const Vec& y_nu, double delta, double epsilon,
         const Mat& s_nu) { return desired_supply(nu, y_u, y_nu, delta, epsilon, s_nu); },
      py::arg("nu"), py::arg("y_u"), py::arg("y_nu"), py::arg("delta"), py::arg("epsilon"),
      py::arg("s_nu"));

  m.def(
      "cumulative_supply_check",
      [](const std::vector<double>& trace, double tol) {
        const SupplyCheck r = cumulative_supply_check(trace, tol);
        py::dict d;
        d["ok"] = r.ok;
        d["min_prefix"] = r.min_prefix;
        d["first_violation"] = r.first_violation;
        return d;
      },
      py::arg("trace"), py::arg("tol") = kTrajectoryTol);

  m.def(
      "resolve_config", [](const std::optional<std::string>& text) {
        const auto l = load(text);
        return py::make_tuple(l.resolved.dump(), l.hash);
      },
      py::arg("config") = std::nullopt);

  m.def(
      "check_assumptions",
      [](const std::optional<std::string>& text) {
        const auto l = load(text);
        const harness::Plant plant = harness::make_plant(l.run);
        return harness::check_assumptions(l.run.grid, plant.supplies, l.run.shield).to_json().dump();
      },
      py::arg("config") = std::nullopt);

  m.def(
      "equilibrium",
      [](const std::optional<std::string>& text) {
        const auto l = load(text);
        const auto& g = l.run.grid;
        const auto eq = microgrid::compute_equilibrium(g.v_ref, g.nodes, g.lines, g.topo);
        py::dict d;
        d["I"] = eq.I;
        d["V"] = eq.V;
        d["u"] = eq.u;
        d["Il"] = eq.Il;
        return d;
      },
      py::arg("config") = std::nullopt);

  m.def("train", &train_py, py::arg("config") = std::nullopt,
        "Returns (episodes JSON, checkpoint JSON, episode_returns.csv text).");
  m.def("evaluate", &evaluate_py, py::arg("config"), py::arg("checkpoint"),
        py::arg("shield") = true, "Returns (metrics JSON, summary JSON, trajectory CSV text).");
}
