#pragma once

// Deterministic stand-ins for every model backend. Each mock is a pure
// function of its inputs and options, so pipeline runs under mocks are
// reproducible byte-for-byte.

#include "adgen/backend/interfaces.hpp"

#include <string>
#include <vector>

namespace adgen::backend {

struct RuleBasedBrief {
  std::string primary_product;
  std::string background_elements;
  std::string theme;
};

/// The mock decomposer: the words before the first preposition form the
/// product; each following prepositional phrase becomes a background element,
/// unless it contains a time/season/occasion word, in which case it joins the
/// theme. Articles are dropped.
RuleBasedBrief rule_based_brief(std::string_view prompt);

enum class ValidatorPolicy { TokenOverlap, AcceptAll, RejectAll };

struct MockLanguageModelOptions {
  ValidatorPolicy validator = ValidatorPolicy::TokenOverlap;
};

/// Answers every registered schema from the `key: value` lines in the
/// request's user content:
///   brief               <- prompt
///   background_verdict  <- background_elements, candidate_label (policy-dependent)
///   caption             <- primary_product, background_elements, theme (+ attached image)
///   scale_advice        <- category; product aspect from attached image #1
///   rubric              <- generator_notes (comma-separated defect flags)
class MockLanguageModel : public LanguageModel {
public:
  explicit MockLanguageModel(MockLanguageModelOptions options = {}) : options_(options) {}
  std::string respond(const TextCompletionRequest &request, std::string_view repair_hint) override;

private:
  MockLanguageModelOptions options_;
};

/// Relative product size per category used by the mock composition advisor.
double mock_category_size(std::string_view category);

/// Defect flags understood by the mock rubric, in criterion order.
inline constexpr const char *kFlagCaptionMiss = "caption_miss";
inline constexpr const char *kFlagDuplicate = "duplicate";
inline constexpr const char *kFlagFloating = "floating";
inline constexpr const char *kFlagLightingMismatch = "lighting_mismatch";

/// Hash-to-unit-vector embeddings. Text is embedded as the normalized sum of
/// per-word hash vectors (so texts sharing words correlate); images are
/// embedded from a hash of their full pixel content.
class MockEmbeddingBackend : public EmbeddingBackend {
public:
  explicit MockEmbeddingBackend(int dimension = 256, std::uint64_t seed = 0);

  EmbeddingVector embed_text(std::string_view text) override;
  EmbeddingVector embed_image(const Raster &image) override;
  std::string model_tag() const override;
  int dimension() const override { return dimension_; }

private:
  EmbeddingVector hashed(std::uint64_t key) const;

  int dimension_;
  std::uint64_t seed_;
};

struct MockGeneratorOptions {
  /// Amplitude (fraction of full scale) of seeded noise added to product pixels.
  double perturb_product = 0.0;
  /// Flags attached to every output.
  std::vector<std::string> always_flags;
  /// Probability that an output receives one random defect flag.
  double flag_rate = 0.0;
  /// Probability that a request fails with service_unavailable.
  double failure_rate = 0.0;
};

/// Fills everything outside the mask with a seeded procedural texture and
/// copies the masked (product) pixels of the composed canvas verbatim.
class MockSceneGenerator : public SceneGenerationBackend {
public:
  explicit MockSceneGenerator(MockGeneratorOptions options = {}) : options_(std::move(options)) {}
  GeneratedScene generate_scene(const GenerationRequest &request) override;

private:
  MockGeneratorOptions options_;
};

/// Mean absolute luminance difference between 4-neighbours, c, mapped to
/// 10 * c / (c + 8). Zero for flat images, approaches 10 as contrast grows.
class MockAestheticScorer : public AestheticBackend {
public:
  double score(const Raster &image) override;
};

double mean_local_contrast(const Raster &image);

} // namespace adgen::backend
