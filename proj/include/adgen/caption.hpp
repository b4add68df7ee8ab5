#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/decomposition.hpp"

#include <json.hpp>

#include <memory>
#include <string>

namespace adgen {

struct SceneCaption {
  std::string text;
  bool derived_from_background = false;
  std::string brief_ref;   // hash of the brief the caption was written for
  bool fallback = false;   // template caption used because the backend failed
  std::string fallback_reason;

  friend bool operator==(const SceneCaption &, const SceneCaption &) = default;
};

void to_json(nlohmann::json &j, const SceneCaption &c);
void from_json(const nlohmann::json &j, SceneCaption &c);

/// Stable identifier for a brief (first 16 hex digits of the SHA-256 of its JSON).
std::string brief_id(const MarketingBrief &brief);

/// "<product> placed in <background>, <theme> atmosphere, professional marketing photo".
/// Clauses whose field is empty are left out.
std::string template_caption(const MarketingBrief &brief);

/// Keeps the first `max_words` whitespace-separated words.
std::string cap_words(std::string_view text, int max_words);

struct CaptionOptions {
  int max_words = 77;
};

class CaptionGenerator {
public:
  explicit CaptionGenerator(std::shared_ptr<const backend::StructuredCompleter> llm,
                            CaptionOptions options = {});

  /// Never throws for backend trouble: a failed call, or a reply that does not
  /// mention the product, yields the template caption with `fallback` set.
  SceneCaption generate(const MarketingBrief &brief, const Asset *background) const;

private:
  std::shared_ptr<const backend::StructuredCompleter> llm_;
  CaptionOptions options_;
};

} // namespace adgen
