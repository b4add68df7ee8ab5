#include "adgen/decomposition.hpp"

#include "adgen/errors.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text_util.hpp"

namespace adgen {

void to_json(nlohmann::json &j, const MarketingBrief &b) {
  j = {{"primary_product", b.primary_product},
       {"background_elements", b.background_elements},
       {"theme", b.theme},
       {"source_prompt", b.source_prompt}};
}

void from_json(const nlohmann::json &j, MarketingBrief &b) {
  j.at("primary_product").get_to(b.primary_product);
  j.at("background_elements").get_to(b.background_elements);
  j.at("theme").get_to(b.theme);
  j.at("source_prompt").get_to(b.source_prompt);
}

namespace {

// Splits "shoe and handbag" / "shoe, handbag" / "shoe & handbag" at the first separator.
std::string first_product(const std::string &product, bool &split) {
  static constexpr std::string_view separators[] = {" and ", ", ", " & ", " plus "};
  std::size_t cut = std::string::npos;
  for (auto sep : separators)
    cut = std::min(cut, product.find(sep));
  split = cut != std::string::npos;
  return split ? text::trim(product.substr(0, cut)) : product;
}

} // namespace

PromptDecomposer::PromptDecomposer(std::shared_ptr<const backend::StructuredCompleter> llm)
    : llm_(std::move(llm)) {
  if (!llm_)
    throw InputError("PromptDecomposer needs a language model");
}

Decomposition PromptDecomposer::decompose(std::string_view prompt) const {
  const std::string trimmed = text::trim(prompt);
  if (trimmed.empty())
    throw InputError("prompt is empty");

  backend::TextCompletionRequest req;
  req.system_instructions = prompts::get(prompts::kDecompose);
  req.user_content = "prompt: " + trimmed;
  req.expected_schema_id = backend::schema_id::kBrief;
  const auto reply = llm_->complete(req);

  Decomposition out;
  out.brief.source_prompt = std::string(prompt);
  out.brief.background_elements = text::trim(reply.at("background_elements").get<std::string>());
  out.brief.theme = text::trim(reply.at("theme").get<std::string>());
  bool split = false;
  out.brief.primary_product =
      first_product(text::trim(reply.at("primary_product").get<std::string>()), split);
  if (split)
    out.warnings.push_back("prompt names more than one product; using '" +
                           out.brief.primary_product + "'");
  if (out.brief.primary_product.empty())
    throw BackendError(BackendErrorKind::SchemaViolation, "decomposition produced an empty product");
  return out;
}

} // namespace adgen
