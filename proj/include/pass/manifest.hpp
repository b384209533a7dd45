#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/baselines.hpp"
#include "pass/config.hpp"
#include "pass/experiments.hpp"
#include "pass/optimizer.hpp"

namespace pass {

inline constexpr const char* kToolVersion = "0.1.0";

/// Fully resolved run description. `raw` holds every configuration key in the
/// units named by the key; the typed members are derived from it, so writing
/// `raw` back out and loading it again reproduces them exactly.
struct RunManifest {
  nlohmann::json raw = nlohmann::json::object();

  SystemConfig system;
  UserLayout users;
  GridConfig grid;
  PAPowerComponents components;
  MotionSpeeds speeds;
  OptimizerConfig optimizer;
  ProtocolKind protocol = ProtocolKind::STT;
  BaselineKind baseline = BaselineKind::MIMO;
  ExperimentSpec experiment;

  std::optional<std::uint64_t> seed;
  std::string subcommand;
  std::string tool_version = kToolVersion;
  std::string timestamp;

  ExperimentContext context() const;
  /// raw plus the run metadata.
  nlohmann::json to_json() const;
  /// SHA-1 of the canonical config dump, hashed the way git hashes a blob.
  std::string config_hash() const;
};

/// Keys accepted in a config file or override, with their defaults.
std::vector<std::string> known_keys();

/// Parses `path` ("default" or an empty file means all defaults), then applies
/// KEY=VALUE overrides. VALUE is read as JSON when it parses, else as a string.
/// `seed` (when given) fills in default seed lists. Throws ConfigError listing
/// every problem found.
RunManifest load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                        std::optional<std::uint64_t> seed = std::nullopt);
RunManifest load_config_json(const nlohmann::json& doc,
                             const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed = std::nullopt);

std::string git_blob_sha1(const std::string& content);

}  // namespace pass
