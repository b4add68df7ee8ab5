#include "adgen/backend/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace adgen::backend {

json OutputSchema::to_json_schema() const {
  json props = json::object();
  json required = json::array();
  for (const auto &f : fields) {
    json p;
    switch (f.type) {
    case FieldType::String:
      p["type"] = "string";
      break;
    case FieldType::NonEmptyString:
      p["type"] = "string";
      p["minLength"] = 1;
      break;
    case FieldType::Number:
      p["type"] = "number";
      break;
    case FieldType::Binary:
      p["type"] = "integer";
      p["enum"] = {0, 1};
      break;
    }
    if (!f.description.empty())
      p["description"] = f.description;
    props[f.name] = std::move(p);
    required.push_back(f.name);
  }
  return json{{"$id", id}, {"type", "object"}, {"properties", props}, {"required", required}};
}

std::optional<std::string> OutputSchema::violation(const json &value) const {
  if (!value.is_object())
    return "expected a JSON object";
  for (const auto &f : fields) {
    auto it = value.find(f.name);
    if (it == value.end())
      return "missing field '" + f.name + "'";
    switch (f.type) {
    case FieldType::String:
      if (!it->is_string())
        return "field '" + f.name + "' must be a string";
      break;
    case FieldType::NonEmptyString: {
      if (!it->is_string())
        return "field '" + f.name + "' must be a string";
      const auto &s = it->get_ref<const std::string &>();
      if (std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }))
        return "field '" + f.name + "' must not be empty";
      break;
    }
    case FieldType::Number:
      if (!it->is_number() || !std::isfinite(it->get<double>()))
        return "field '" + f.name + "' must be a finite number";
      break;
    case FieldType::Binary:
      if (!it->is_number_integer() || (it->get<long long>() != 0 && it->get<long long>() != 1))
        return "field '" + f.name + "' must be 0 or 1";
      break;
    }
  }
  return std::nullopt;
}

const SchemaRegistry &SchemaRegistry::builtin() {
  static const SchemaRegistry registry = [] {
    SchemaRegistry r;
    r.add({schema_id::kBrief,
           {{"primary_product", FieldType::NonEmptyString, "the main item being promoted"},
            {"background_elements", FieldType::String, "environmental context and scene descriptors"},
            {"theme", FieldType::String, "promotional context or occasion"}}});
    r.add({schema_id::kBackgroundVerdict,
           {{"verdict", FieldType::Binary, "1 when the background suits the prompt"}}});
    r.add({schema_id::kCaption, {{"caption", FieldType::NonEmptyString, "generation caption"}}});
    r.add({schema_id::kScaleAdvice,
           {{"s_w", FieldType::Number, "product width as a fraction of canvas width"},
            {"s_h", FieldType::Number, "product height as a fraction of canvas height"}}});
    r.add({schema_id::kRubric,
           {{"caption_alignment", FieldType::Binary, ""},
            {"product_uniqueness", FieldType::Binary, ""},
            {"physical_realism", FieldType::Binary, ""},
            {"lighting_consistency", FieldType::Binary, ""}}});
    return r;
  }();
  return registry;
}

void SchemaRegistry::add(OutputSchema schema) {
  auto it = std::find_if(schemas_.begin(), schemas_.end(),
                         [&](const OutputSchema &s) { return s.id == schema.id; });
  if (it != schemas_.end())
    *it = std::move(schema);
  else
    schemas_.push_back(std::move(schema));
}

const OutputSchema *SchemaRegistry::find(const std::string &id) const {
  for (const auto &s : schemas_)
    if (s.id == id)
      return &s;
  return nullptr;
}

std::vector<std::string> SchemaRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto &s : schemas_)
    out.push_back(s.id);
  return out;
}

} // namespace adgen::backend
