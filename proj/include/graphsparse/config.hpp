#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "graphsparse/trainer.hpp"

namespace graphsparse {

/// Invalid or unknown configuration key. what() names the key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& why)
      : std::invalid_argument("config key '" + key + "': " + why), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct EvalSettings {
  int n_simulations = 600;
  int step_budget = 0;  // 0 means max_robot_moves
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string profile = "paper";
  /// Full-size widths before scaling; train.policy holds the scaled result.
  PolicyConfig base_policy;
  TrainConfig train;
  EvalSettings eval;
};

/// Names of the built-in profiles: "paper", "desk", "tiny".
std::vector<std::string> profile_names();

/// Every key with its profile default. Throws ConfigError for unknown profiles.
nlohmann::json profile_defaults(const std::string& profile);

/// Builds a run configuration from flat keys layered over the profile named by
/// the "profile" key (default "paper"). Unknown keys and invalid values throw
/// ConfigError naming the key.
RunConfig config_from_json(const nlohmann::json& overrides);

/// Flat key map that config_from_json maps back to an identical RunConfig.
nlohmann::json config_to_json(const RunConfig& config);

/// Reads a JSON config file (empty path: profile defaults only) and applies
/// `overrides` key by key on top of it.
RunConfig load_config(const std::string& path, const nlohmann::json& overrides = nlohmann::json::object());

}  // namespace graphsparse
