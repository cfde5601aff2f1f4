#include <string>

#include "doctest.h"

#include "dissipanet/config.hpp"
#include "dissipanet/errors.hpp"

using namespace dissipanet;

namespace {

std::string error_of(const std::string& text) {
  try {
    config::load_text(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults resolve to the default run config") {
  const auto d = config::load_defaults();
  CHECK(d.run.episodes == 200);
  CHECK(d.run.horizon == 2000);
  CHECK(d.run.learner_kinds.size() == 4);
  CHECK(d.hash.size() == 16);
  CHECK(config::load_text("{}").hash == d.hash);
}

TEST_CASE("unknown keys are rejected with the field path") {
  const std::string e = error_of(R"({"run": {"episods": 3}})");
  CHECK(e.find("run.episods") != std::string::npos);
  CHECK(e.find("episodes") != std::string::npos);
  CHECK_FALSE(error_of(R"({"extra": 1})").empty());
}

TEST_CASE("parse errors report the line") {
  const std::string e = error_of("{\n  \"run\": {\n    \"episodes\": 3,,\n  }\n}");
  CHECK(e.find("cfg.json:3:") != std::string::npos);
}

TEST_CASE("per-node values take a scalar or an array of node count") {
  auto l = config::load_text(R"({"microgrid": {"R_load": 25}})");
  CHECK(l.run.grid.nodes.size() == 4);
  l = config::load_text(R"({"learners": {"kinds": ["ddpg", "cem", "hold", "ddpg"]}})");
  CHECK(l.run.learner_kinds[1] == "cem");
  CHECK_FALSE(error_of(R"({"microgrid": {"R_load": [1, 2]}})").empty());
  CHECK_FALSE(error_of(R"({"learners": {"kinds": "sac"}})").empty());
}

TEST_CASE("overrides change the hash and type mismatches are caught") {
  const auto a = config::load_text(R"({"run": {"seed": 1}})");
  const auto b = config::load_text(R"({"run": {"seed": 2}})");
  CHECK(a.hash != b.hash);
  CHECK(a.run.seed == 1);
  CHECK_FALSE(error_of(R"({"run": {"seed": "one"}})").empty());
  CHECK_FALSE(error_of(R"({"run": {"episodes": 0}})").empty());
  CHECK_FALSE(error_of(R"({"shield": {"feedforward": {"lambda": 0}}})").empty());
}

TEST_CASE("load steps accept only time and fraction") {
  auto l = config::load_text(R"({"run": {"eval_load_step": {"time": 0.05, "fraction": 0.05}}})");
  REQUIRE(l.run.eval_scenario.load_step);
  CHECK(l.run.eval_scenario.load_step->time == 0.05);
  CHECK_FALSE(error_of(R"({"run": {"eval_load_step": {"time": 0.05, "size": 1}}})").empty());
}

TEST_CASE("missing file is a config error") {
  CHECK_THROWS_AS(config::load_file("/nonexistent/dir/cfg.json"), ConfigError);
}
