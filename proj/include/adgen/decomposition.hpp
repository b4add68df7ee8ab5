#pragma once

#include "adgen/backend/interfaces.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace adgen {

/// Structured reading of a marketing prompt. Empty background/theme mean
/// "no background retrieval" and "no theme constraint".
struct MarketingBrief {
  std::string primary_product;
  std::string background_elements;
  std::string theme;
  std::string source_prompt; // verbatim input

  friend bool operator==(const MarketingBrief &, const MarketingBrief &) = default;
};

void to_json(nlohmann::json &j, const MarketingBrief &b);
void from_json(const nlohmann::json &j, MarketingBrief &b);

struct Decomposition {
  MarketingBrief brief;
  std::vector<std::string> warnings;
};

/// Asks the language model for a brief using the few-shot decomposition
/// template. When the model names more than one product, only the first is
/// kept and a warning is recorded.
class PromptDecomposer {
public:
  explicit PromptDecomposer(std::shared_ptr<const backend::StructuredCompleter> llm);

  /// Throws InputError for blank prompts; BackendError propagates.
  Decomposition decompose(std::string_view prompt) const;

private:
  std::shared_ptr<const backend::StructuredCompleter> llm_;
};

} // namespace adgen
