#pragma once

#include "adgen/backend/interfaces.hpp"
#include "adgen/caption.hpp"
#include "adgen/generation.hpp"

#include <json.hpp>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adgen {

/// Binary rubric verdicts. The member order is also the bit order of selection
/// patterns: index 0 caption_alignment .. index 3 lighting_consistency.
struct RubricScore {
  int caption_alignment = 0;
  int product_uniqueness = 0;
  int physical_realism = 0;
  int lighting_consistency = 0;

  std::array<int, 4> bits() const {
    return {caption_alignment, product_uniqueness, physical_realism, lighting_consistency};
  }
  static RubricScore from_bits(const std::array<int, 4> &b) { return {b[0], b[1], b[2], b[3]}; }
  friend bool operator==(const RubricScore &, const RubricScore &) = default;
};

using Pattern = std::array<int, 4>;

/// Product of the four criteria.
int gate(const RubricScore &r);

struct PatternMatch {
  std::vector<std::size_t> indices;       // into the scored list, ascending
  std::optional<std::size_t> pattern_index; // which pattern matched
};

/// The first pattern that at least one score matches exactly selects every
/// score equal to it; no match yields an empty result.
PatternMatch select_by_patterns(const std::vector<RubricScore> &scores, const std::vector<Pattern> &patterns);

/// w * max(0, cosine). Throws InputError on model or dimension mismatch.
double clip_score(const backend::EmbeddingVector &image_embed, const backend::EmbeddingVector &text_embed,
                  double w);

enum class SelectionMode { StrictGate, Hierarchical };

std::string_view to_string(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view s);

inline const std::vector<Pattern> &default_patterns() {
  static const std::vector<Pattern> p{{1, 1, 1, 1}, {0, 1, 1, 1}, {0, 1, 1, 0}};
  return p;
}

struct SelectionPolicy {
  SelectionMode mode = SelectionMode::Hierarchical;
  std::vector<Pattern> patterns = default_patterns();
  int k = 4;
  double aesthetic_threshold = 5.0; // on the 0-10 scale
  double alpha = 0.5;
  double beta = 0.5;
  bool use_clip_filter = false;
  double clip_threshold = 0.0; // applied only with use_clip_filter
  double clip_weight = 2.5;

  void validate() const;
};

struct QualityReport {
  std::string candidate_id;
  RubricScore rubric;
  int gate = 0;
  std::optional<Pattern> matched_pattern; // set on candidates picked by the pattern stage
  double aesthetic = 0.0;
  double clip_score = 0.0;
  double combined = 0.0;
  std::vector<std::string> flags; // rubric_failed, aesthetic_failed, clip_failed

  friend bool operator==(const QualityReport &, const QualityReport &) = default;
};

void to_json(nlohmann::json &j, const QualityReport &r);
void from_json(const nlohmann::json &j, QualityReport &r);

/// alpha * aesthetic / 10 + beta * clip / w.
double combined_score(double aesthetic, double clip, const SelectionPolicy &policy);

struct SelectionResult {
  std::vector<std::string> selected; // best first, at most k
  std::optional<Pattern> matched_pattern;
  std::vector<std::string> rubric_survivors; // passed the gate or pattern stage
};

/// Gate or pattern stage, then the aesthetic (and optional CLIP) thresholds,
/// then ordering by combined score with candidate_id as tie breaker. The
/// combined score is recomputed from aesthetic and clip_score.
SelectionResult rank_and_select(const std::vector<QualityReport> &reports, const SelectionPolicy &policy);

/// Scores candidates with the rubric model, aesthetic model and embedder.
class QualityController {
public:
  QualityController(std::shared_ptr<const backend::StructuredCompleter> rubric_model,
                    std::shared_ptr<backend::AestheticBackend> aesthetic,
                    std::shared_ptr<backend::EmbeddingBackend> embedder, SelectionPolicy policy,
                    int max_in_flight = 4);

  /// Backend failure yields an all-zero rubric plus the rubric_failed flag.
  RubricScore score_rubric(const CandidateImage &candidate, const SceneCaption &caption,
                           std::vector<std::string> *flags = nullptr) const;
  /// Backend failure yields 0 plus the aesthetic_failed flag.
  double aesthetic_score(const CandidateImage &candidate, std::vector<std::string> *flags = nullptr) const;

  /// Per-candidate reports (input order) with matched_pattern filled in.
  std::vector<QualityReport> evaluate(const std::vector<CandidateImage> &candidates,
                                      const SceneCaption &caption) const;

  const SelectionPolicy &policy() const { return policy_; }

private:
  QualityReport score_one(const CandidateImage &candidate, const SceneCaption &caption,
                          const backend::EmbeddingVector &caption_embed) const;

  std::shared_ptr<const backend::StructuredCompleter> rubric_model_;
  std::shared_ptr<backend::AestheticBackend> aesthetic_;
  std::shared_ptr<backend::EmbeddingBackend> embedder_;
  SelectionPolicy policy_;
  int max_in_flight_;
};

} // namespace adgen
