#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/backend/interfaces.hpp"
#include "adgen/config.hpp"
#include "adgen/decomposition.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

namespace adgen {

/// Backend handles for every stage. LLM roles share a model instance when
/// they are bound to the same service.
struct Backends {
  std::shared_ptr<const backend::StructuredCompleter> decompose;
  std::shared_ptr<const backend::StructuredCompleter> validate;
  std::shared_ptr<const backend::StructuredCompleter> caption;
  std::shared_ptr<const backend::StructuredCompleter> advise;
  std::shared_ptr<const backend::StructuredCompleter> rubric;
  std::shared_ptr<backend::EmbeddingBackend> embed;
  std::shared_ptr<backend::SceneGenerationBackend> generate;
  std::shared_ptr<backend::AestheticBackend> aesthetic;
};

Backends make_backends(const PipelineConfig &config);

std::shared_ptr<AssetStore> open_store(const PipelineConfig &config, std::shared_ptr<backend::EmbeddingBackend> embedder);

struct RunOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  nlohmann::json manifest;
};

/// Run status values recorded in manifests.
namespace run_status {
inline constexpr const char *kCompleted = "completed";
inline constexpr const char *kEmptySelection = "empty_selection";
inline constexpr const char *kGenerationFailed = "generation_failed";
inline constexpr const char *kFailed = "failed";
} // namespace run_status

/// decompose -> retrieve -> caption -> plan -> generate -> quality -> select,
/// persisted as one run directory. Runs are serialized per instance.
class Pipeline {
public:
  Pipeline(PipelineConfig config, Backends backends, std::shared_ptr<AssetStore> store);

  /// Throws InputError for a blank prompt. Backend failures that stop the run
  /// are recorded in the manifest (status "failed" or "generation_failed"),
  /// which is persisted either way.
  RunOutcome run(std::string_view prompt);

  const PipelineConfig &config() const { return config_; }
  const Backends &backends() const { return backends_; }
  AssetStore &store() const { return *store_; }

private:
  PipelineConfig config_;
  Backends backends_;
  std::shared_ptr<AssetStore> store_;
  std::mutex run_mutex_;
};

/// Deterministic run id: "run-" + 12 hex digits of the hash of prompt and config.
std::string make_run_id(std::string_view prompt, const nlohmann::json &config_snapshot);

} // namespace adgen
