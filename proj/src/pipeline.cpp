#include "adgen/pipeline.hpp"

#include "adgen/backend/http.hpp"
#include "adgen/backend/mock.hpp"
#include "adgen/caption.hpp"
#include "adgen/composition.hpp"
#include "adgen/errors.hpp"
#include "adgen/generation.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"
#include "adgen/quality.hpp"
#include "adgen/run_repository.hpp"
#include "adgen/text_util.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace adgen {

using nlohmann::json;

namespace {

backend::HttpEndpoint endpoint(const HttpBackendConfig &h) {
  return {h.url, h.api_key_env, h.timeout_ms, h.max_in_flight};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json rect_json(const Rect &r) { return {{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}}; }

json result_json(const RetrievalResult &r) {
  json j = {{"asset_id", r.asset->asset_id},
            {"label", r.asset->label},
            {"category", r.asset->category},
            {"similarity", r.similarity}};
  if (r.validator_verdict)
    j["validator_verdict"] = *r.validator_verdict;
  if (!r.note.empty())
    j["note"] = r.note;
  return j;
}

class Stopwatch {
public:
  explicit Stopwatch(json &timings) : timings_(timings) {}
  void lap(const char *stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

private:
  json &timings_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

} // namespace

Backends make_backends(const PipelineConfig &config) {
  config.validate();
  const auto &bc = config.backend;
  std::map<std::string, std::shared_ptr<backend::LanguageModel>> models;
  auto model_for = [&](const std::string &binding) {
    const std::string key = binding == "http" ? "llm" : binding;
    auto &slot = models[key];
    if (!slot) {
      if (key == "mock")
        slot = std::make_shared<backend::MockLanguageModel>(backend::MockLanguageModelOptions{bc.mock.validator});
      else
        slot = std::make_shared<backend::HttpLanguageModel>(endpoint(bc.http.at(key)));
    }
    return slot;
  };
  std::map<std::string, std::shared_ptr<const backend::StructuredCompleter>> completers;
  auto completer_for = [&](const std::string &role) {
    auto it = bc.roles.find(role);
    const std::string binding = it == bc.roles.end() ? bc.llm : it->second;
    auto &slot = completers[binding == "http" ? "llm" : binding];
    if (!slot)
      slot = std::make_shared<backend::StructuredCompleter>(model_for(binding), bc.max_attempts);
    return slot;
  };

  Backends b;
  b.decompose = completer_for("decompose");
  b.validate = completer_for("validate");
  b.caption = completer_for("caption");
  b.advise = completer_for("advise");
  b.rubric = completer_for("rubric");
  if (bc.embed == "mock")
    b.embed = std::make_shared<backend::MockEmbeddingBackend>(bc.mock.embed_dimension, bc.mock.embed_seed);
  else
    b.embed = std::make_shared<backend::HttpEmbeddingBackend>(endpoint(bc.http.at("embed")),
                                                              bc.http.at("embed").model_tag,
                                                              bc.http.at("embed").dimension);
  if (bc.generate == "mock")
    b.generate = std::make_shared<backend::MockSceneGenerator>(bc.mock.generator);
  else
    b.generate = std::make_shared<backend::HttpSceneGenerator>(endpoint(bc.http.at("generate")));
  if (bc.aesthetic == "mock")
    b.aesthetic = std::make_shared<backend::MockAestheticScorer>();
  else
    b.aesthetic = std::make_shared<backend::HttpAestheticScorer>(endpoint(bc.http.at("aesthetic")));
  return b;
}

std::shared_ptr<AssetStore> open_store(const PipelineConfig &config,
                                       std::shared_ptr<backend::EmbeddingBackend> embedder) {
  return std::make_shared<AssetStore>(config.store_path, std::move(embedder),
                                      StoreOptions{config.retrieval.product_threshold, config.retrieval.embed_label});
}

std::string make_run_id(std::string_view prompt, const json &config_snapshot) {
  return "run-" + sha256_hex(std::string(prompt) + "\n" + config_snapshot.dump()).substr(0, 12);
}

Pipeline::Pipeline(PipelineConfig config, Backends backends, std::shared_ptr<AssetStore> store)
    : config_(std::move(config)), backends_(std::move(backends)), store_(std::move(store)) {
  config_.validate();
  if (!store_)
    throw InputError("pipeline needs an asset store");
  if (!backends_.decompose || !backends_.validate || !backends_.caption || !backends_.advise ||
      !backends_.rubric || !backends_.embed || !backends_.generate || !backends_.aesthetic)
    throw InputError("pipeline needs every backend bound");
}

RunOutcome Pipeline::run(std::string_view prompt) {
  if (text::trim(prompt).empty())
    throw InputError("prompt is empty");
  std::lock_guard lock(run_mutex_);

  const json snapshot = config_to_json(config_);
  json m = {{"schema", "adgen.run/1"},
            {"prompt", std::string(prompt)},
            {"created_at", utc_now()},
            {"config", snapshot},
            {"status", run_status::kFailed},
            {"brief", nullptr},
            {"warnings", json::array()},
            {"retrieval", {{"products", json::array()}, {"backgrounds", json::array()}, {"rejected_backgrounds", json::array()}}},
            {"product_asset_id", nullptr},
            {"canvas", nullptr},
            {"caption", nullptr},
            {"scale", nullptr},
            {"variants", json::array()},
            {"candidates", json::array()},
            {"quality_reports", json::array()},
            {"selected", json::array()},
            {"rubric_survivors", json::array()},
            {"matched_pattern", nullptr},
            {"generation_passes", 0},
            {"human_selection", nullptr},
            {"selection_events", json::array()},
            {"stage_timings", json::object()},
            {"failure_log", json::array()}};
  std::map<std::string, std::vector<std::uint8_t>> images;
  auto add_image = [&](const Raster &r) {
    auto png = image_io::encode_png(r);
    auto hash = image_hash(png);
    images.emplace(hash, std::move(png));
    return hash;
  };
  auto log_failure = [&](const std::string &stage, const std::string &detail, json extra = json::object()) {
    extra["stage"] = stage;
    extra["detail"] = detail;
    m["failure_log"].push_back(std::move(extra));
  };
  Stopwatch clock(m["stage_timings"]);

  auto persist = [&] {
    const auto id = RunRepository(config_.runs_dir).commit(make_run_id(prompt, snapshot), m, images);
    m["run_id"] = id;
    return RunOutcome{id, config_.runs_dir / id, m};
  };

  try {
    // Decomposition.
    const auto decomposition = PromptDecomposer(backends_.decompose).decompose(prompt);
    const MarketingBrief &brief = decomposition.brief;
    m["brief"] = brief;
    for (const auto &w : decomposition.warnings)
      m["warnings"].push_back(w);
    clock.lap("decompose");

    // Retrieval.
    const auto products = store_->retrieve_products(brief, config_.retrieval.product_limit);
    for (const auto &p : products)
      m["retrieval"]["products"].push_back(result_json(p));
    std::vector<RetrievalResult> rejected;
    const auto backgrounds =
        store_->retrieve_backgrounds(brief, config_.retrieval.background_k, *backends_.validate, &rejected);
    for (const auto &b : backgrounds)
      m["retrieval"]["backgrounds"].push_back(result_json(b));
    for (const auto &b : rejected) {
      m["retrieval"]["rejected_backgrounds"].push_back(result_json(b));
      if (!b.note.empty())
        log_failure("retrieve", b.note, {{"asset_id", b.asset->asset_id}});
    }
    clock.lap("retrieve");
    if (products.empty()) {
      log_failure("retrieve", "no product asset reached the similarity threshold for '" + brief.primary_product + "'");
      return persist();
    }
    const Asset &product = *products.front().asset;
    const Asset *background = backgrounds.empty() ? nullptr : backgrounds.front().asset.get();
    m["product_asset_id"] = product.asset_id;

    // Caption.
    const auto caption = CaptionGenerator(backends_.caption, config_.caption).generate(brief, background);
    m["caption"] = caption;
    if (caption.fallback)
      log_failure("caption", caption.fallback_reason);
    clock.lap("caption");

    // Composition planning.
    const CompositionPlanner planner(backends_.advise, config_.plan);
    const Canvas canvas = make_canvas(background, config_.plan);
    m["canvas"] = {{"background_source", canvas.background_asset_id ? "asset" : "empty"},
                   {"background_asset_id", canvas.background_asset_id ? json(*canvas.background_asset_id) : json()},
                   {"width", canvas.width()},
                   {"height", canvas.height()},
                   {"image", add_image(canvas.raster)}};
    const auto advice = planner.advise_scale(canvas, product, caption);
    m["scale"] = {{"s_w", advice.scale.s_w}, {"s_h", advice.scale.s_h}, {"fallback", advice.fallback}};
    for (const auto &w : advice.warnings) {
      m["warnings"].push_back(w);
      if (advice.fallback)
        log_failure("plan", w);
    }
    const auto variants = planner.enumerate_variants(canvas, product, advice.scale);
    for (const auto &v : variants)
      m["variants"].push_back({{"variant_id", v.variant_id},
                               {"slot", to_string(v.slot)},
                               {"rotation_deg", v.rotation_deg},
                               {"scale", {{"s_w", v.scale.s_w}, {"s_h", v.scale.s_h}}},
                               {"reduction_steps", v.reduction_steps},
                               {"shifted", v.shifted},
                               {"placed_bbox", rect_json(v.placed_bbox)},
                               {"composed", add_image(v.composed)},
                               {"mask", add_image(v.mask)}});
    clock.lap("plan");

    // Generation and quality control, with regeneration passes on an empty result.
    const SceneGenerator generator(backends_.generate, config_.generation);
    const QualityController qc(backends_.rubric, backends_.aesthetic, backends_.embed, config_.quality,
                               config_.quality_max_in_flight);
    bool generated_any = false;
    SelectionResult selection;
    double generate_ms = 0, quality_ms = 0;
    for (int attempt = 1; attempt <= 1 + config_.regeneration_passes; ++attempt) {
      m["generation_passes"] = attempt;
      const auto t0 = std::chrono::steady_clock::now();
      GenerationBatch batch;
      try {
        batch = generator.generate_all(variants, caption, config_.run_seed, attempt);
      } catch (const GenerationFailed &e) {
        batch.failures = e.failures();
      }
      for (const auto &f : batch.failures)
        log_failure("generate", f.error,
                    {{"variant_id", f.variant_id}, {"seed", f.seed}, {"seed_index", f.seed_index}, {"attempt", f.attempt}});
      const auto t1 = std::chrono::steady_clock::now();
      generate_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (batch.candidates.empty())
        continue;
      generated_any = true;
      for (const auto &c : batch.candidates)
        m["candidates"].push_back({{"candidate_id", c.candidate_id},
                                   {"variant_id", c.variant_id},
                                   {"seed", c.seed},
                                   {"seed_index", c.seed_index},
                                   {"attempt", c.attempt},
                                   {"annotations", c.annotations},
                                   {"image", add_image(c.raster)}});
      const auto reports = qc.evaluate(batch.candidates, caption);
      for (const auto &r : reports)
        m["quality_reports"].push_back(r);
      selection = rank_and_select(reports, config_.quality);
      quality_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count();
      if (!selection.selected.empty())
        break;
    }
    m["stage_timings"]["generate"] = generate_ms;
    m["stage_timings"]["quality"] = quality_ms;

    m["selected"] = selection.selected;
    m["rubric_survivors"] = selection.rubric_survivors;
    m["matched_pattern"] = selection.matched_pattern ? json(*selection.matched_pattern) : json();
    if (!generated_any)
      m["status"] = run_status::kGenerationFailed;
    else
      m["status"] = selection.selected.empty() ? run_status::kEmptySelection : run_status::kCompleted;
  } catch (const BackendError &e) {
    log_failure("pipeline", e.what());
    m["status"] = run_status::kFailed;
  }
  return persist();
}

} // namespace adgen
