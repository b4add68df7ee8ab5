#include "adgen/quality.hpp"

#include "adgen/errors.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace adgen {

int gate(const RubricScore &r) {
  return r.caption_alignment * r.product_uniqueness * r.physical_realism * r.lighting_consistency;
}

PatternMatch select_by_patterns(const std::vector<RubricScore> &scores, const std::vector<Pattern> &patterns) {
  PatternMatch out;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i].bits() == patterns[p])
        out.indices.push_back(i);
    if (!out.indices.empty()) {
      out.pattern_index = p;
      break;
    }
  }
  return out;
}

double clip_score(const backend::EmbeddingVector &image_embed, const backend::EmbeddingVector &text_embed,
                  double w) {
  return w * std::max(0.0, backend::cosine(image_embed, text_embed));
}

std::string_view to_string(SelectionMode m) {
  return m == SelectionMode::StrictGate ? "strict_gate" : "hierarchical";
}

SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "strict_gate")
    return SelectionMode::StrictGate;
  if (s == "hierarchical")
    return SelectionMode::Hierarchical;
  throw InputError("quality.mode must be strict_gate or hierarchical, got '" + std::string(s) + "'");
}

void SelectionPolicy::validate() const {
  if (mode == SelectionMode::Hierarchical && patterns.empty())
    throw InputError("quality.patterns must not be empty in hierarchical mode");
  for (const auto &p : patterns)
    for (int b : p)
      if (b != 0 && b != 1)
        throw InputError("quality.patterns entries must be 0 or 1");
  if (k < 1)
    throw InputError("quality.k must be positive");
  if (!(alpha >= 0 && beta >= 0 && alpha + beta > 0))
    throw InputError("quality.alpha and quality.beta must be non-negative with a positive sum");
  if (!(clip_weight > 0))
    throw InputError("quality.clip_weight must be positive");
  if (!std::isfinite(aesthetic_threshold) || !std::isfinite(clip_threshold))
    throw InputError("quality thresholds must be finite");
}

void to_json(nlohmann::json &j, const QualityReport &r) {
  j = {{"candidate_id", r.candidate_id},
       {"rubric",
        {{"caption_alignment", r.rubric.caption_alignment},
         {"product_uniqueness", r.rubric.product_uniqueness},
         {"physical_realism", r.rubric.physical_realism},
         {"lighting_consistency", r.rubric.lighting_consistency}}},
       {"gate", r.gate},
       {"matched_pattern", r.matched_pattern ? nlohmann::json(*r.matched_pattern) : nlohmann::json()},
       {"aesthetic", r.aesthetic},
       {"clip_score", r.clip_score},
       {"combined", r.combined},
       {"flags", r.flags}};
}

void from_json(const nlohmann::json &j, QualityReport &r) {
  j.at("candidate_id").get_to(r.candidate_id);
  const auto &rb = j.at("rubric");
  r.rubric = {rb.at("caption_alignment").get<int>(), rb.at("product_uniqueness").get<int>(),
              rb.at("physical_realism").get<int>(), rb.at("lighting_consistency").get<int>()};
  j.at("gate").get_to(r.gate);
  if (j.at("matched_pattern").is_null())
    r.matched_pattern.reset();
  else
    r.matched_pattern = j.at("matched_pattern").get<Pattern>();
  j.at("aesthetic").get_to(r.aesthetic);
  j.at("clip_score").get_to(r.clip_score);
  j.at("combined").get_to(r.combined);
  j.at("flags").get_to(r.flags);
}

double combined_score(double aesthetic, double clip, const SelectionPolicy &policy) {
  return policy.alpha * aesthetic / 10.0 + policy.beta * clip / policy.clip_weight;
}

SelectionResult rank_and_select(const std::vector<QualityReport> &reports, const SelectionPolicy &policy) {
  SelectionResult out;
  std::vector<const QualityReport *> pool;
  if (policy.mode == SelectionMode::StrictGate) {
    for (const auto &r : reports)
      if (gate(r.rubric) == 1)
        pool.push_back(&r);
    if (!pool.empty())
      out.matched_pattern = Pattern{1, 1, 1, 1};
  } else {
    std::vector<RubricScore> scores;
    scores.reserve(reports.size());
    for (const auto &r : reports)
      scores.push_back(r.rubric);
    const auto match = select_by_patterns(scores, policy.patterns);
    for (auto i : match.indices)
      pool.push_back(&reports[i]);
    if (match.pattern_index)
      out.matched_pattern = policy.patterns[*match.pattern_index];
  }
  for (const auto *r : pool)
    out.rubric_survivors.push_back(r->candidate_id);
  std::sort(out.rubric_survivors.begin(), out.rubric_survivors.end());

  std::vector<std::pair<double, const QualityReport *>> ranked;
  for (const auto *r : pool) {
    if (r->aesthetic < policy.aesthetic_threshold)
      continue;
    if (policy.use_clip_filter && r->clip_score < policy.clip_threshold)
      continue;
    ranked.emplace_back(combined_score(r->aesthetic, r->clip_score, policy), r);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
    if (a.first != b.first)
      return a.first > b.first;
    return a.second->candidate_id < b.second->candidate_id;
  });
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(policy.k); ++i)
    out.selected.push_back(ranked[i].second->candidate_id);
  return out;
}

QualityController::QualityController(std::shared_ptr<const backend::StructuredCompleter> rubric_model,
                                     std::shared_ptr<backend::AestheticBackend> aesthetic,
                                     std::shared_ptr<backend::EmbeddingBackend> embedder,
                                     SelectionPolicy policy, int max_in_flight)
    : rubric_model_(std::move(rubric_model)), aesthetic_(std::move(aesthetic)),
      embedder_(std::move(embedder)), policy_(std::move(policy)), max_in_flight_(max_in_flight) {
  if (!rubric_model_ || !aesthetic_ || !embedder_)
    throw InputError("QualityController needs rubric, aesthetic and embedding backends");
  if (max_in_flight_ < 1)
    throw InputError("max_in_flight must be positive");
  policy_.validate();
}

RubricScore QualityController::score_rubric(const CandidateImage &candidate, const SceneCaption &caption,
                                            std::vector<std::string> *flags) const {
  backend::TextCompletionRequest req;
  req.system_instructions = prompts::get(prompts::kQualityRubric);
  req.user_content = "caption: " + caption.text;
  if (!candidate.annotations.empty())
    req.user_content += "\ngenerator_notes: " + text::join(candidate.annotations, ", ");
  req.attached_images.push_back(candidate.raster);
  req.expected_schema_id = backend::schema_id::kRubric;
  try {
    const auto reply = rubric_model_->complete(req);
    return {reply.at("caption_alignment").get<int>(), reply.at("product_uniqueness").get<int>(),
            reply.at("physical_realism").get<int>(), reply.at("lighting_consistency").get<int>()};
  } catch (const BackendError &) {
    if (flags)
      flags->push_back("rubric_failed");
    return {};
  }
}

double QualityController::aesthetic_score(const CandidateImage &candidate, std::vector<std::string> *flags) const {
  try {
    const double s = aesthetic_->score(candidate.raster);
    if (!std::isfinite(s))
      throw BackendError(BackendErrorKind::MalformedResponse, "aesthetic score is not finite");
    return s;
  } catch (const BackendError &) {
    if (flags)
      flags->push_back("aesthetic_failed");
    return 0.0;
  }
}

QualityReport QualityController::score_one(const CandidateImage &candidate, const SceneCaption &caption,
                                           const backend::EmbeddingVector &caption_embed) const {
  QualityReport r;
  r.candidate_id = candidate.candidate_id;
  r.rubric = score_rubric(candidate, caption, &r.flags);
  r.gate = gate(r.rubric);
  r.aesthetic = aesthetic_score(candidate, &r.flags);
  if (!caption_embed.values.empty()) {
    try {
      r.clip_score = clip_score(embedder_->embed_image(candidate.raster), caption_embed, policy_.clip_weight);
    } catch (const BackendError &) {
      r.flags.push_back("clip_failed");
    }
  } else {
    r.flags.push_back("clip_failed");
  }
  r.combined = combined_score(r.aesthetic, r.clip_score, policy_);
  return r;
}

std::vector<QualityReport> QualityController::evaluate(const std::vector<CandidateImage> &candidates,
                                                       const SceneCaption &caption) const {
  backend::EmbeddingVector caption_embed;
  try {
    caption_embed = embedder_->embed_text(caption.text);
  } catch (const BackendError &) {
  }

  std::vector<QualityReport> reports(candidates.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++)
      reports[i] = score_one(candidates[i], caption, caption_embed);
  };
  const std::size_t threads = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(max_in_flight_));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t)
      pool.emplace_back(worker);
    worker();
  }

  if (policy_.mode == SelectionMode::Hierarchical) {
    std::vector<RubricScore> scores;
    for (const auto &r : reports)
      scores.push_back(r.rubric);
    const auto match = select_by_patterns(scores, policy_.patterns);
    for (auto i : match.indices)
      reports[i].matched_pattern = policy_.patterns[*match.pattern_index];
  } else {
    for (auto &r : reports)
      if (r.gate == 1)
        r.matched_pattern = Pattern{1, 1, 1, 1};
  }
  return reports;
}

} // namespace adgen
