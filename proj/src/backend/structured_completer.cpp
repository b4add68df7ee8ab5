#include "adgen/backend/interfaces.hpp"

#include "adgen/errors.hpp"

#include <algorithm>
#include <cctype>

namespace adgen::backend {

std::optional<json> extract_json(std::string_view reply) {
  auto parsed = json::parse(reply, nullptr, /*allow_exceptions=*/false);
  if (!parsed.is_discarded())
    return parsed;
  // Fall back to the outermost {...} span, which covers fenced or chatty replies.
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    return std::nullopt;
  parsed = json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded())
    return std::nullopt;
  return parsed;
}

StructuredCompleter::StructuredCompleter(std::shared_ptr<LanguageModel> model, int max_attempts,
                                         const SchemaRegistry &registry)
    : model_(std::move(model)), max_attempts_(max_attempts), registry_(&registry) {
  if (!model_)
    throw InputError("StructuredCompleter needs a language model");
  if (max_attempts_ < 1)
    throw InputError("retry budget must be at least 1");
}

json StructuredCompleter::complete(const TextCompletionRequest &request) const {
  const OutputSchema *schema = registry_->find(request.expected_schema_id);
  if (!schema)
    throw InputError("unregistered output schema '" + request.expected_schema_id + "'");
  if (std::all_of(request.user_content.begin(), request.user_content.end(),
                  [](unsigned char c) { return std::isspace(c); }))
    throw InputError("completion request has empty user content");

  std::string hint;
  std::optional<BackendError> last_transport_error;
  std::string last_defect;
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    std::string reply;
    try {
      reply = model_->respond(request, hint);
    } catch (const BackendError &e) {
      if (!e.retryable())
        throw;
      last_transport_error = e;
      continue;
    }
    last_transport_error.reset();

    auto value = extract_json(reply);
    if (!value) {
      last_defect = "reply was not valid JSON";
    } else if (auto why = schema->violation(*value)) {
      last_defect = *why;
    } else {
      return *value;
    }
    hint = "Your previous reply was rejected (" + last_defect +
           "). Reply with only a JSON object matching schema " + schema->id + ": " +
           schema->to_json_schema().dump();
  }
  if (last_transport_error)
    throw *last_transport_error;
  throw BackendError(BackendErrorKind::SchemaViolation,
                     "no conforming reply for " + schema->id + " after " +
                         std::to_string(max_attempts_) + " attempts: " + last_defect);
}

} // namespace adgen::backend
