#pragma once

#include "adgen/backend/schema.hpp"
#include "adgen/backend/types.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace adgen::backend {

/// Raw text-in / text-out model. Implementations return the model's reply
/// verbatim; parsing and schema validation happen in StructuredCompleter.
/// `repair_hint` is empty on the first attempt and describes the previous
/// reply's defect on retries.
class LanguageModel {
public:
  virtual ~LanguageModel() = default;
  virtual std::string respond(const TextCompletionRequest &request, std::string_view repair_hint) = 0;
};

class EmbeddingBackend {
public:
  virtual ~EmbeddingBackend() = default;
  virtual EmbeddingVector embed_text(std::string_view text) = 0;
  virtual EmbeddingVector embed_image(const Raster &image) = 0;
  virtual std::string model_tag() const = 0;
  virtual int dimension() const = 0;
};

class SceneGenerationBackend {
public:
  virtual ~SceneGenerationBackend() = default;
  virtual GeneratedScene generate_scene(const GenerationRequest &request) = 0;
};

/// Learned aesthetic predictor; scores are on a 0-10 scale.
class AestheticBackend {
public:
  virtual ~AestheticBackend() = default;
  virtual double score(const Raster &image) = 0;
};

/// Structured completion with validation and retry-with-repair.
///
/// Each attempt asks the model for a JSON document and validates it against
/// the requested schema. Unparseable or non-conforming replies, timeouts and
/// unavailability are retried until `max_attempts` replies have been
/// requested. Exhausting the budget on bad replies raises
/// BackendError(schema_violation); exhausting it on transport failures
/// re-raises the last transport error.
class StructuredCompleter {
public:
  explicit StructuredCompleter(std::shared_ptr<LanguageModel> model, int max_attempts = 3,
                               const SchemaRegistry &registry = SchemaRegistry::builtin());

  json complete(const TextCompletionRequest &request) const;

  int max_attempts() const { return max_attempts_; }
  const SchemaRegistry &registry() const { return *registry_; }

private:
  std::shared_ptr<LanguageModel> model_;
  int max_attempts_;
  const SchemaRegistry *registry_;
};

/// Extracts the first JSON value from a model reply, tolerating surrounding
/// prose and Markdown code fences. Returns nullopt when nothing parses.
std::optional<json> extract_json(std::string_view reply);

} // namespace adgen::backend
