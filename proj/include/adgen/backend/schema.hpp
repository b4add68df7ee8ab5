#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace adgen::backend {

using nlohmann::json;

/// Identifiers of the structured-output schemas the pipeline requests.
namespace schema_id {
inline constexpr const char *kBrief = "brief.v1";
inline constexpr const char *kBackgroundVerdict = "background_verdict.v1";
inline constexpr const char *kCaption = "caption.v1";
inline constexpr const char *kScaleAdvice = "scale_advice.v1";
inline constexpr const char *kRubric = "rubric.v1";
} // namespace schema_id

enum class FieldType {
  String,         // any string, may be empty
  NonEmptyString, // string with at least one non-space character
  Number,         // finite JSON number
  Binary,         // integer 0 or 1
};

struct FieldSpec {
  std::string name;
  FieldType type;
  std::string description;
};

/// Flat object schema: every listed field is required, extra fields are ignored.
struct OutputSchema {
  std::string id;
  std::vector<FieldSpec> fields;

  /// JSON-Schema rendering sent to remote models alongside the prompt.
  json to_json_schema() const;
  /// Reason the value fails validation, or nullopt when it conforms.
  std::optional<std::string> violation(const json &value) const;
};

class SchemaRegistry {
public:
  /// Registry pre-populated with the pipeline's five schemas.
  static const SchemaRegistry &builtin();

  void add(OutputSchema schema);
  const OutputSchema *find(const std::string &id) const;
  std::vector<std::string> ids() const;

private:
  std::vector<OutputSchema> schemas_;
};

} // namespace adgen::backend
