#include "dissipanet/rl/learner.hpp"

#include "dissipanet/errors.hpp"
#include "dissipanet/rl/cem.hpp"
#include "dissipanet/rl/ddpg.hpp"

namespace dissipanet::rl {

std::unique_ptr<Learner> learner_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ddpg") return DdpgLite::from_json(j);
  if (kind == "cem") return CemLearner::from_json(j);
  if (kind == "hold") {
    const auto a = j.at("action").get<std::vector<double>>();
    return std::make_unique<HoldLearner>(
        Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size())));
  }
  throw ConfigError("unknown learner kind '" + kind + "' in checkpoint");
}

}  // namespace dissipanet::rl
