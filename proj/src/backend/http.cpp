#include "adgen/backend/http.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>

namespace adgen::backend {

namespace {

// Releases a semaphore slot on scope exit.
struct SlotGuard {
  std::counting_semaphore<> &sem;
  explicit SlotGuard(std::counting_semaphore<> &s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

std::string png_b64(const Raster &r) { return base64_encode(image_io::encode_png(r)); }

Raster decode_png_b64(const json &reply, const char *field) {
  auto it = reply.find(field);
  if (it == reply.end() || !it->is_string())
    throw BackendError(BackendErrorKind::MalformedResponse, std::string("reply lacks '") + field + "'");
  try {
    return image_io::decode(base64_decode(it->get<std::string>()));
  } catch (const InputError &e) {
    throw BackendError(BackendErrorKind::MalformedResponse, e.what());
  }
}

} // namespace

JsonHttpClient::JsonHttpClient(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      slots_(std::make_shared<std::counting_semaphore<>>(std::max(1, endpoint_.max_in_flight))) {
  const auto scheme_end = endpoint_.url.find("://");
  if (scheme_end == std::string::npos)
    throw InputError("backend url must include a scheme: '" + endpoint_.url + "'");
  const auto path_start = endpoint_.url.find('/', scheme_end + 3);
  origin_ = endpoint_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_.url.substr(path_start);
  if (!endpoint_.api_key_env.empty()) {
    if (const char *key = std::getenv(endpoint_.api_key_env.c_str()))
      bearer_ = key;
  }
}

json JsonHttpClient::post(const json &body) const {
  SlotGuard slot(*slots_);
  httplib::Client cli(origin_);
  const auto sec = endpoint_.timeout_ms / 1000;
  const auto usec = (endpoint_.timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  if (!bearer_.empty())
    cli.set_bearer_token_auth(bearer_);

  auto res = cli.Post(path_, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::Write ||
                       err == httplib::Error::ConnectionTimeout)
                          ? BackendErrorKind::Timeout
                          : BackendErrorKind::ServiceUnavailable;
    throw BackendError(kind, endpoint_.url + ": " + httplib::to_string(err));
  }
  if (res->status == 429 || res->status >= 500)
    throw BackendError(BackendErrorKind::ServiceUnavailable,
                       endpoint_.url + " returned HTTP " + std::to_string(res->status));
  if (res->status >= 400)
    throw BackendError(BackendErrorKind::MalformedResponse,
                       endpoint_.url + " rejected the request with HTTP " + std::to_string(res->status));
  auto parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object())
    throw BackendError(BackendErrorKind::MalformedResponse, endpoint_.url + " returned a non-JSON body");
  return parsed;
}

HttpLanguageModel::HttpLanguageModel(HttpEndpoint endpoint, const SchemaRegistry &registry)
    : client_(std::move(endpoint)), registry_(&registry) {}

std::string HttpLanguageModel::respond(const TextCompletionRequest &request,
                                       std::string_view repair_hint) {
  json body{{"system", request.system_instructions},
            {"user", request.user_content},
            {"schema_id", request.expected_schema_id},
            {"images", json::array()}};
  if (const auto *schema = registry_->find(request.expected_schema_id))
    body["schema"] = schema->to_json_schema();
  if (!repair_hint.empty())
    body["repair_hint"] = std::string(repair_hint);
  for (const auto &img : request.attached_images)
    body["images"].push_back(png_b64(img));

  const auto reply = client_.post(body);
  auto it = reply.find("content");
  if (it == reply.end())
    throw BackendError(BackendErrorKind::MalformedResponse, "completion reply lacks 'content'");
  // Some services return the structured object directly instead of a string.
  return it->is_string() ? it->get<std::string>() : it->dump();
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model_tag, int dimension)
    : client_(std::move(endpoint)), model_tag_(std::move(model_tag)), dimension_(dimension) {
  if (dimension_ < 1)
    throw InputError("embedding dimension must be positive");
}

EmbeddingVector HttpEmbeddingBackend::parse(const json &reply) const {
  auto it = reply.find("embedding");
  if (it == reply.end() || !it->is_array())
    throw BackendError(BackendErrorKind::MalformedResponse, "embedding reply lacks 'embedding'");
  EmbeddingVector v{{}, model_tag_};
  for (const auto &x : *it) {
    if (!x.is_number() || !std::isfinite(x.get<double>()))
      throw BackendError(BackendErrorKind::MalformedResponse, "embedding has a non-finite entry");
    v.values.push_back(x.get<double>());
  }
  if (v.dimension() != dimension_)
    throw BackendError(BackendErrorKind::MalformedResponse,
                       "embedding dimension " + std::to_string(v.dimension()) + " != declared " +
                           std::to_string(dimension_));
  return v;
}

EmbeddingVector HttpEmbeddingBackend::embed_text(std::string_view text) {
  if (text.empty())
    throw InputError("cannot embed empty text");
  return parse(client_.post({{"text", std::string(text)}}));
}

EmbeddingVector HttpEmbeddingBackend::embed_image(const Raster &image) {
  if (image.empty())
    throw InputError("cannot embed an empty image");
  return parse(client_.post({{"image", png_b64(image)}}));
}

GeneratedScene HttpSceneGenerator::generate_scene(const GenerationRequest &request) {
  check_request(request);
  const auto reply = client_.post({{"canvas", png_b64(request.composed_canvas)},
                                   {"mask", png_b64(request.product_mask)},
                                   {"caption", request.caption},
                                   {"seed", request.seed}});
  GeneratedScene scene{decode_png_b64(reply, "image"), {}};
  if (scene.raster.width() != request.composed_canvas.width() ||
      scene.raster.height() != request.composed_canvas.height())
    throw BackendError(BackendErrorKind::MalformedResponse, "generated image size differs from canvas");
  if (auto it = reply.find("annotations"); it != reply.end() && it->is_array())
    for (const auto &a : *it)
      if (a.is_string())
        scene.annotations.push_back(a.get<std::string>());
  return scene;
}

double HttpAestheticScorer::score(const Raster &image) {
  const auto reply = client_.post({{"image", png_b64(image)}});
  auto it = reply.find("score");
  if (it == reply.end() || !it->is_number() || !std::isfinite(it->get<double>()))
    throw BackendError(BackendErrorKind::MalformedResponse, "aesthetic reply lacks a numeric 'score'");
  return it->get<double>();
}

} // namespace adgen::backend
