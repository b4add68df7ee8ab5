#include "adgen/caption.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text_util.hpp"

#include <sstream>

namespace adgen {

void to_json(nlohmann::json &j, const SceneCaption &c) {
  j = {{"text", c.text},
       {"derived_from_background", c.derived_from_background},
       {"brief_ref", c.brief_ref},
       {"fallback", c.fallback},
       {"fallback_reason", c.fallback_reason}};
}

void from_json(const nlohmann::json &j, SceneCaption &c) {
  j.at("text").get_to(c.text);
  j.at("derived_from_background").get_to(c.derived_from_background);
  j.at("brief_ref").get_to(c.brief_ref);
  c.fallback = j.value("fallback", false);
  c.fallback_reason = j.value("fallback_reason", std::string());
}

std::string brief_id(const MarketingBrief &brief) {
  return sha256_hex(nlohmann::json(brief).dump()).substr(0, 16);
}

std::string template_caption(const MarketingBrief &brief) {
  std::string out = brief.primary_product;
  if (!brief.background_elements.empty())
    out += " placed in " + brief.background_elements;
  if (!brief.theme.empty())
    out += ", " + brief.theme + " atmosphere";
  return out + ", professional marketing photo";
}

std::string cap_words(std::string_view text, int max_words) {
  std::istringstream in{std::string(text)};
  std::string word, out;
  for (int n = 0; n < max_words && in >> word; ++n)
    out += (out.empty() ? "" : " ") + word;
  return out;
}

CaptionGenerator::CaptionGenerator(std::shared_ptr<const backend::StructuredCompleter> llm,
                                   CaptionOptions options)
    : llm_(std::move(llm)), options_(options) {
  if (!llm_)
    throw InputError("CaptionGenerator needs a language model");
  if (options_.max_words < 1)
    throw InputError("caption.max_words must be positive");
}

SceneCaption CaptionGenerator::generate(const MarketingBrief &brief, const Asset *background) const {
  if (brief.primary_product.empty())
    throw InputError("brief has no primary product");

  SceneCaption out;
  out.brief_ref = brief_id(brief);
  out.derived_from_background = background != nullptr;

  backend::TextCompletionRequest req;
  req.system_instructions = prompts::get(prompts::kCaption);
  req.user_content = "primary_product: " + brief.primary_product +
                     "\nbackground_elements: " + brief.background_elements +
                     "\ntheme: " + brief.theme + "\nmax_words: " + std::to_string(options_.max_words);
  if (background) {
    req.user_content += "\nbackground_label: " + background->label;
    req.attached_images.push_back(background->raster);
  }
  req.expected_schema_id = backend::schema_id::kCaption;

  try {
    const auto reply = llm_->complete(req);
    out.text = cap_words(reply.at("caption").get<std::string>(), options_.max_words);
    if (!text::contains_ci(out.text, brief.primary_product)) {
      out.fallback = true;
      out.fallback_reason = "caption did not mention '" + brief.primary_product + "'";
    }
  } catch (const BackendError &e) {
    out.fallback = true;
    out.fallback_reason = e.what();
  }
  if (out.fallback)
    out.text = cap_words(template_caption(brief), options_.max_words);
  return out;
}

} // namespace adgen
