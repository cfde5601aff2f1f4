#pragma once

#include <string>

#include "json.hpp"

#include "dissipanet/harness.hpp"

namespace dissipanet::config {

/// Defaults for every section: network, microgrid, shield, learners, run.
const nlohmann::json& defaults();

/// `user` deep-merged onto the defaults. Unknown keys and type mismatches
/// throw ConfigError naming the field path.
nlohmann::json merge(const nlohmann::json& user);

/// Builds a validated RunConfig from a resolved (merged) document.
harness::RunConfig to_run_config(const nlohmann::json& resolved);

struct Loaded {
  nlohmann::json resolved;
  harness::RunConfig run;
  std::string hash;  // 16 hex digits, FNV-1a of resolved.dump()
};

/// Parse errors carry the line number.
Loaded load_text(const std::string& text, const std::string& source = "<string>");
Loaded load_file(const std::string& path);
/// Defaults only.
Loaded load_defaults();

std::string hash_json(const nlohmann::json& j);

}  // namespace dissipanet::config
