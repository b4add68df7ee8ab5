#pragma once

#include <string>
#include <string_view>

namespace adgen::prompts {

// Versioned system-instruction templates, keyed by file name without ".txt"
// (for example "decompose.v1").
inline constexpr const char *kDecompose = "decompose.v1";
inline constexpr const char *kBackgroundValidator = "background_validator.v1";
inline constexpr const char *kCaption = "caption.v1";
inline constexpr const char *kCompositionAdvisor = "composition_advisor.v1";
inline constexpr const char *kQualityRubric = "quality_rubric.v1";

/// Throws std::out_of_range for unknown names.
const std::string &get(std::string_view name);

} // namespace adgen::prompts
