#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/backend/mock.hpp"
#include "adgen/caption.hpp"
#include "adgen/composition.hpp"
#include "adgen/generation.hpp"
#include "adgen/quality.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adgen {

/// Settings for one remote model service.
struct HttpBackendConfig {
  std::string url;
  std::string api_key_env; // name of the environment variable holding the bearer token
  int timeout_ms = 60000;
  int max_in_flight = 4;
  // Embedding services only.
  std::string model_tag;
  int dimension = 0;
};

struct MockBackendConfig {
  backend::ValidatorPolicy validator = backend::ValidatorPolicy::TokenOverlap;
  int embed_dimension = 256;
  std::uint64_t embed_seed = 0;
  backend::MockGeneratorOptions generator;
};

/// LLM roles that may be bound to different models.
inline const std::vector<std::string> &llm_roles() {
  static const std::vector<std::string> roles{"decompose", "validate", "caption", "advise", "rubric"};
  return roles;
}

struct BackendConfig {
  std::string llm = "mock";       // default binding for every LLM role: mock | http
  std::string embed = "mock";
  std::string generate = "mock";
  std::string aesthetic = "mock";
  /// Keyed by service ("llm", "embed", "generate", "aesthetic") or by an extra
  /// binding name referenced from `roles`.
  std::map<std::string, HttpBackendConfig> http;
  /// role -> "mock", "http" (the llm service) or the name of an http binding.
  std::map<std::string, std::string> roles;
  int max_attempts = 3;
  MockBackendConfig mock;
};

struct RetrievalConfig {
  double product_threshold = 0.39;
  int background_k = 5;
  int product_limit = 5;
  bool embed_label = true;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path static_dir; // review UI build output; empty disables
};

struct EvaluationConfig {
  int ms_ssim_scales = 5;
};

struct PipelineConfig {
  std::uint64_t run_seed = 0;
  std::filesystem::path store_path = "assets.cpst";
  std::filesystem::path runs_dir = "runs";
  BackendConfig backend;
  RetrievalConfig retrieval;
  CaptionOptions caption;
  PlanOptions plan;
  GenerationOptions generation;
  int regeneration_passes = 1;
  SelectionPolicy quality;
  int quality_max_in_flight = 4;
  EvaluationConfig evaluation;
  ServerConfig server;

  /// Throws InputError naming the first offending key.
  void validate() const;
};

/// Every setting, with relative paths as given. Feeding the result back to
/// config_from_json reproduces the configuration exactly.
nlohmann::json config_to_json(const PipelineConfig &config);

/// Missing keys keep their defaults; unknown keys and ill-typed values are
/// rejected with InputError. The result is validated.
PipelineConfig config_from_json(const nlohmann::json &j);

/// YAML document with the same structure as config_to_json. Relative store,
/// runs and static paths are resolved against the file's directory.
PipelineConfig load_config(const std::filesystem::path &path);
PipelineConfig parse_config_yaml(const std::string &yaml_text);

} // namespace adgen
