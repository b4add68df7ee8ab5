#pragma once

// Remote-service clients. Every backend speaks JSON over HTTP POST; images
// travel as base64-encoded PNG. Wire formats are documented in docs/backends.md.

#include "adgen/backend/interfaces.hpp"

#include <memory>
#include <semaphore>
#include <string>

namespace adgen::backend {

struct HttpEndpoint {
  std::string url;         // e.g. http://localhost:8080/v1/complete
  std::string api_key_env; // name of the environment variable holding a bearer token
  int timeout_ms = 30000;
  int max_in_flight = 4;
};

/// POSTs JSON documents to one endpoint, limiting concurrent requests.
/// Transport failures map onto BackendError kinds: connect errors and 5xx/429
/// are service_unavailable, read/write timeouts are timeout, anything that is
/// not a JSON body is malformed_response.
class JsonHttpClient {
public:
  explicit JsonHttpClient(HttpEndpoint endpoint);
  json post(const json &body) const;
  const HttpEndpoint &endpoint() const { return endpoint_; }

private:
  HttpEndpoint endpoint_;
  std::string origin_; // scheme://host[:port]
  std::string path_;
  std::string bearer_;
  std::shared_ptr<std::counting_semaphore<>> slots_;
};

class HttpLanguageModel : public LanguageModel {
public:
  explicit HttpLanguageModel(HttpEndpoint endpoint,
                             const SchemaRegistry &registry = SchemaRegistry::builtin());
  std::string respond(const TextCompletionRequest &request, std::string_view repair_hint) override;

private:
  JsonHttpClient client_;
  const SchemaRegistry *registry_;
};

class HttpEmbeddingBackend : public EmbeddingBackend {
public:
  HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model_tag, int dimension);
  EmbeddingVector embed_text(std::string_view text) override;
  EmbeddingVector embed_image(const Raster &image) override;
  std::string model_tag() const override { return model_tag_; }
  int dimension() const override { return dimension_; }

private:
  EmbeddingVector parse(const json &reply) const;

  JsonHttpClient client_;
  std::string model_tag_;
  int dimension_;
};

class HttpSceneGenerator : public SceneGenerationBackend {
public:
  explicit HttpSceneGenerator(HttpEndpoint endpoint) : client_(std::move(endpoint)) {}
  GeneratedScene generate_scene(const GenerationRequest &request) override;

private:
  JsonHttpClient client_;
};

class HttpAestheticScorer : public AestheticBackend {
public:
  explicit HttpAestheticScorer(HttpEndpoint endpoint) : client_(std::move(endpoint)) {}
  double score(const Raster &image) override;

private:
  JsonHttpClient client_;
};

} // namespace adgen::backend
