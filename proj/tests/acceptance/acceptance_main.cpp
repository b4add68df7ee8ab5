#include "adgen/asset_store.hpp"
#include "adgen/backend/mock.hpp"
#include "adgen/composition.hpp"
#include "adgen/evaluation.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image_io.hpp"
#include "adgen/pipeline.hpp"
#include "adgen/quality.hpp"
#include "adgen/run_evaluation.hpp"
#include "adgen/run_repository.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace adgen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Collects the first few failure messages of one criterion.
class Check {
public:
  void expect(bool ok, const std::string &what) {
    if (ok)
      return;
    if (failures_.size() < 5)
      failures_.push_back(what);
    ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string detail() const {
    std::ostringstream s;
    s << count_ << " failed check(s)";
    for (const auto &f : failures_)
      s << "; " << f;
    return s.str();
  }

private:
  std::vector<std::string> failures_;
  int count_ = 0;
};

struct Criterion {
  std::string name;
  double time_limit_s; // 0: no bound
  std::function<void(Check &)> body;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::array<int, 4> bits_of(int m) { return {(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1}; }

void pattern_equivalence(Check &c) {
  const auto &policy = default_patterns();
  const std::vector<std::array<int, 4>> policy_arrays(policy.begin(), policy.end());
  c.expect(policy_arrays == std::vector<std::array<int, 4>>{{1, 1, 1, 1}, {0, 1, 1, 1}, {0, 1, 1, 0}},
           "default pattern list");
  std::size_t lists = 0;
  for (int len = 0; len <= 4; ++len) {
    const int total = 1 << (4 * len);
    for (int code = 0; code < total; ++code) {
      std::vector<RubricScore> scores;
      std::vector<std::array<int, 4>> raw;
      for (int i = 0, v = code; i < len; ++i, v >>= 4) {
        raw.push_back(bits_of(v & 15));
        scores.push_back(RubricScore::from_bits(raw.back()));
      }
      const auto got = select_by_patterns(scores, policy);
      c.expect(got.indices == oracle::select_by_patterns(raw, policy_arrays),
               "list length " + std::to_string(len) + " code " + std::to_string(code));
      ++lists;
    }
  }
  c.expect(lists == 69905, "list count " + std::to_string(lists));
}

void gate_exhaustive(Check &c) {
  for (int m = 0; m < 16; ++m)
    c.expect(gate(RubricScore::from_bits(bits_of(m))) == (m == 15 ? 1 : 0), "pattern " + std::to_string(m));
}

void clip_pairs(Check &c) {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto a = testing::random_vector(2 * i, 64);
    const auto b = testing::random_vector(2 * i + 1, 64);
    const double s = clip_score({a, "m"}, {b, "m"}, 2.5);
    const double want = 2.5 * std::max(0.0, oracle::cosine(a, b));
    c.expect(std::abs(s - want) <= 1e-9, "pair " + std::to_string(i) + " got " + num(s) + " want " + num(want));
    c.expect(s >= 0.0 && s <= 2.5, "range, pair " + std::to_string(i));
    auto a2 = a, b2 = b;
    const double ka = 0.01 + 10.0 * static_cast<double>(i % 17), kb = 0.5 + static_cast<double>(i % 5);
    for (auto &v : a2)
      v *= ka;
    for (auto &v : b2)
      v *= kb;
    c.expect(std::abs(clip_score({a2, "m"}, {b2, "m"}, 2.5) - s) <= 1e-9, "scaling, pair " + std::to_string(i));
  }
}

void ranking(Check &c) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SelectionPolicy p;
    SplitMix64 rng(seed * 31 + 7);
    p.mode = rng.uniform() < 0.3 ? SelectionMode::StrictGate : SelectionMode::Hierarchical;
    p.k = 1 + static_cast<int>(rng.next() % 6);
    p.alpha = rng.uniform();
    p.beta = 1.0 - p.alpha * rng.uniform();
    p.use_clip_filter = rng.uniform() < 0.3;
    p.clip_threshold = rng.uniform() * 2.0;
    p.aesthetic_threshold = static_cast<double>(rng.next() % 8);
    auto reports = testing::random_reports(seed, 1 + static_cast<int>(rng.next() % 40));
    const auto base = rank_and_select(reports, p);
    c.expect(base.selected == oracle::rank_and_select(reports, p), "oracle, set " + std::to_string(seed));

    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      for (std::size_t i = reports.size() - 1; i > 0; --i)
        std::swap(reports[i], reports[rng.next() % (i + 1)]);
      c.expect(rank_and_select(reports, p).selected == base.selected, "permutation, set " + std::to_string(seed));
    }

    if (base.selected.empty() || p.alpha == 0.0)
      continue;
    auto wide = p;
    wide.k = static_cast<int>(reports.size());
    const auto before = rank_and_select(reports, wide).selected;
    const auto &target = before[before.size() / 2];
    auto it = std::find_if(reports.begin(), reports.end(), [&](auto &r) { return r.candidate_id == target; });
    it->aesthetic = std::min(10.0, it->aesthetic + 1.0);
    const auto after = rank_and_select(reports, wide).selected;
    const auto pos = [&](const std::vector<std::string> &v) { return std::find(v.begin(), v.end(), target) - v.begin(); };
    c.expect(pos(after) < static_cast<long>(after.size()) && pos(after) <= pos(before),
             "monotonicity, set " + std::to_string(seed));
  }
}

void ms_ssim_checks(Check &c) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto img = testing::random_rgb(200, 180, seed);
    const double s = eval::ms_ssim(img, img);
    c.expect(std::abs(s - 1.0) <= 1e-6, "self similarity " + num(s));
  }
  std::ifstream in(testing::fixture("ms_ssim/expected.json"));
  const auto expected = json::parse(in);
  c.expect(expected.size() == 10, "fixture count");
  for (const auto &rec : expected) {
    const auto a = image_io::load(testing::fixture("ms_ssim/" + rec["a"].get<std::string>()));
    const auto b = image_io::load(testing::fixture("ms_ssim/" + rec["b"].get<std::string>()));
    const double got = eval::ms_ssim(a, b), want = rec["ms_ssim"].get<double>();
    c.expect(std::abs(got - want) <= 1e-4, rec["a"].get<std::string>() + " got " + num(got) + " want " + num(want));
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto img = testing::random_rgb(192, 176, seed);
    double previous = 1.0;
    for (double sigma : {5.0, 15.0, 30.0}) {
      const double s = eval::ms_ssim(img, testing::add_gaussian_noise(img, sigma, seed + 100));
      c.expect(s < previous, "noise sigma " + num(sigma) + " seed " + std::to_string(seed));
      previous = s;
    }
  }
}

void composition_grid(Check &c) {
  auto advisor = std::make_shared<backend::StructuredCompleter>(std::make_shared<backend::MockLanguageModel>());
  CompositionPlanner planner(advisor);
  const Canvas canvas = make_canvas(nullptr, planner.options());
  const Asset shoe{"shoe", AssetKind::Product, testing::ellipse_product(300, 180, 40, 60, 200), {}, "shoe", "shoe"};
  SceneCaption caption;
  caption.text = "shoe placed on a white floor";
  const auto advice = planner.advise_scale(canvas, shoe, caption);

  for (const ScaleFactors scale : {advice.scale, ScaleFactors{0.8, 0.8}}) {
    const auto variants = planner.enumerate_variants(canvas, shoe, scale);
    c.expect(variants.size() == 9, "variant count " + std::to_string(variants.size()));
    for (const auto &v : variants) {
      c.expect(v.mask.width() == canvas.width() && v.mask.height() == canvas.height(), v.variant_id + " mask size");
      c.expect(v.placed_bbox.inside(canvas.width(), canvas.height()), v.variant_id + " bbox outside canvas");
      std::size_t stray = 0, on = 0;
      for (int y = 0; y < v.mask.height(); ++y)
        for (int x = 0; x < v.mask.width(); ++x)
          if (v.mask.at(x, y, 0)) {
            ++on;
            stray += !v.placed_bbox.contains(x, y);
          }
      c.expect(on > 0 && stray == 0, v.variant_id + " mask pixels outside bbox: " + std::to_string(stray));
      if (v.rotation_deg == 15) {
        const int w = static_cast<int>(std::floor(v.scale.s_w * canvas.width()));
        const int h = static_cast<int>(std::floor(v.scale.s_h * canvas.height()));
        const auto want = oracle::corner_extent(w, h, 15);
        c.expect(std::pair{v.placed_bbox.width, v.placed_bbox.height} == want,
                 v.variant_id + " bbox " + std::to_string(v.placed_bbox.width) + "x" +
                     std::to_string(v.placed_bbox.height));
      }
    }
  }
}

void retrieval(Check &c) {
  testing::TempDir tmp("adgen-accept");
  auto e = std::make_shared<backend::MockEmbeddingBackend>(256, 0);
  const MarketingBrief brief{"red shoe", "", "", "red shoe"};
  const auto query = e->embed_text(brief.primary_product);
  std::vector<std::pair<std::string, std::vector<double>>> stored;
  {
    AssetStore store(tmp / "assets.cpst", e);
    SplitMix64 rng(42);
    for (int i = 0; i < 1000; ++i) {
      const double mix = rng.uniform();
      std::vector<double> v(256);
      for (std::size_t d = 0; d < v.size(); ++d)
        v[d] = mix * query.values[d] + (1 - mix) * (rng.uniform() - 0.5) * 0.15;
      char id[16];
      std::snprintf(id, sizeof id, "p%04d", (i * 7919) % 1000);
      store.add({id, AssetKind::Product, Raster(2, 2, 4, 255), {v, e->model_tag()}, id, ""});
      stored.emplace_back(id, store.find(id)->embedding.values);
    }
  }
  std::vector<std::pair<double, std::string>> want;
  for (const auto &[id, v] : stored)
    if (const double s = oracle::cosine(query.values, v); s >= 0.39)
      want.emplace_back(s, id);
  std::sort(want.begin(), want.end(), [](auto &a, auto &b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  c.expect(want.size() > 20, "oracle keeps only " + std::to_string(want.size()));

  const auto bytes = image_io::read_file(tmp / "assets.cpst");
  AssetStore reopened(tmp / "assets.cpst", e);
  c.expect(reopened.size() == 1000, "reopened size");
  const auto hits = reopened.retrieve_products(brief, 1000);
  c.expect(hits.size() == want.size(), "hit count " + std::to_string(hits.size()));
  for (std::size_t i = 0; i < std::min(hits.size(), want.size()); ++i) {
    c.expect(hits[i].asset->asset_id == want[i].second, "order at " + std::to_string(i));
    c.expect(std::abs(hits[i].similarity - want[i].first) <= 1e-12, "similarity at " + std::to_string(i));
    c.expect(hits[i].similarity >= 0.39, "below threshold at " + std::to_string(i));
  }
  c.expect(image_io::read_file(tmp / "assets.cpst") == bytes, "store bytes changed on reopen");
  AssetStore again(tmp / "assets.cpst", e);
  const auto hits2 = again.retrieve_products(brief, 1000);
  c.expect(hits2.size() == hits.size(), "second reopen hit count");
  for (std::size_t i = 0; i < std::min(hits.size(), hits2.size()); ++i)
    c.expect(hits2[i].asset->asset_id == hits[i].asset->asset_id && hits2[i].similarity == hits[i].similarity &&
                 hits2[i].asset->raster == hits[i].asset->raster,
             "second reopen differs at " + std::to_string(i));
}

void t_test(Check &c) {
  std::ifstream in(testing::fixture("stats/paired_t.json"));
  const auto cases = json::parse(in);
  const json *known = nullptr;
  for (const auto &cs : cases)
    if (cs["name"] == "t2.2622_n10")
      known = &cs;
  c.expect(known != nullptr, "fixture t2.2622_n10 missing");
  if (!known)
    return;
  const auto base = (*known)["baseline"].get<std::vector<double>>();
  const auto treat = (*known)["treatment"].get<std::vector<double>>();
  const auto r = eval::paired_t_test(base, treat);
  c.expect(r.n == 10, "n");
  c.expect(std::abs(r.t_statistic - 2.2622) <= 1e-4, "t " + num(r.t_statistic));
  c.expect(std::abs(r.p_value - 0.0500) <= 1e-3, "p " + num(r.p_value));
  c.expect(std::abs(r.p_value - (*known)["p"].get<double>()) <= 1e-8, "p against oracle " + num(r.p_value));
  for (const auto &cs : cases) {
    const auto b = cs["baseline"].get<std::vector<double>>(), t = cs["treatment"].get<std::vector<double>>();
    const auto fwd = eval::paired_t_test(b, t), rev = eval::paired_t_test(t, b);
    c.expect(rev.t_statistic == -fwd.t_statistic && rev.p_value == fwd.p_value,
             "antisymmetry " + cs["name"].get<std::string>());
  }
}

RunOutcome run_once(const PipelineConfig &config, std::string_view prompt) {
  auto backends = make_backends(config);
  Pipeline pipeline(config, backends, open_store(config, backends.embed));
  return pipeline.run(prompt);
}

const char *kShoePrompt = "Shoe on the floor on an urban street at sunset";

void end_to_end(Check &c) {
  testing::TempDir tmp("adgen-accept");
  auto config = testing::seeded_config(tmp.path(), 1024);
  c.expect(config.plan.canvas_width == 1024 && config.plan.canvas_height == 1024, "canvas size");
  const auto a = run_once(config, kShoePrompt);
  const auto b = run_once(config, kShoePrompt);
  c.expect(a.manifest["status"] == run_status::kCompleted, "status " + a.manifest["status"].dump());
  c.expect(a.manifest["candidates"].size() == 9, "candidate count");
  c.expect(canonical_manifest(a.manifest) == canonical_manifest(b.manifest), "manifests differ");
  c.expect(canonical_manifest(load_run(a.run_dir).manifest) == canonical_manifest(load_run(b.run_dir).manifest),
           "persisted manifests differ");
  c.expect(verify_manifest(a.manifest, a.run_dir).empty(), "manifest references");

  auto degraded_config = config;
  degraded_config.backend.mock.generator.perturb_product = 0.1;
  const auto d = run_once(degraded_config, kShoePrompt);

  auto embed = std::make_shared<backend::MockEmbeddingBackend>();
  AssetStore refs(config.store_path, embed);
  const auto clean = eval::evaluate_runs({a.run_dir}, refs);
  const auto worse = eval::evaluate_runs({d.run_dir}, refs);
  c.expect(clean.rows.size() == 2 && worse.rows.size() == 2, "fidelity row count");
  for (const auto &row : clean.rows)
    c.expect(std::abs(row.record.ms_ssim - 1.0) <= 1e-6, "mock fidelity " + row.condition + " " + num(row.record.ms_ssim));
  for (std::size_t i = 0; i < std::min(clean.rows.size(), worse.rows.size()); ++i)
    c.expect(worse.rows[i].record.ms_ssim < clean.rows[i].record.ms_ssim,
             "degraded " + worse.rows[i].condition + " " + num(worse.rows[i].record.ms_ssim));
}

void fallbacks(Check &c) {
  testing::TempDir tmp("adgen-accept");
  auto config = testing::seeded_config(tmp.path());
  {
    auto cfg = config;
    cfg.backend.mock.validator = backend::ValidatorPolicy::RejectAll;
    const auto out = run_once(cfg, kShoePrompt);
    const auto &m = out.manifest;
    c.expect(m["status"] == run_status::kCompleted, "rejected backgrounds: status " + m["status"].dump());
    c.expect(m["canvas"]["background_source"] == "empty" && m["canvas"]["background_asset_id"].is_null(),
             "rejected backgrounds: canvas not empty");
    c.expect(!m["retrieval"]["rejected_backgrounds"].empty(), "rejected backgrounds: none recorded");
    c.expect(m["candidates"].size() == 9, "rejected backgrounds: candidate count");
    c.expect(verify_manifest(m, out.run_dir).empty(), "rejected backgrounds: manifest references");
  }
  {
    auto cfg = config;
    cfg.backend.mock.generator.always_flags = {backend::kFlagDuplicate};
    const auto out = run_once(cfg, kShoePrompt);
    const auto m = load_run(out.run_dir).manifest;
    c.expect(m["status"] == run_status::kEmptySelection, "all fail: status " + m["status"].dump());
    c.expect(m["generation_passes"] == 2, "all fail: passes " + m["generation_passes"].dump());
    c.expect(m["selected"].is_array() && m["selected"].empty(), "all fail: selection not empty");
    c.expect(m["candidates"].size() == 18, "all fail: candidate count");
    c.expect(verify_manifest(m, out.run_dir).empty(), "all fail: manifest references");
  }
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"pattern selection equals exhaustive oracle (lists <= 4)", 1.0, pattern_equivalence},
      {"gate is one iff all criteria pass (16 patterns)", 0.0, gate_exhaustive},
      {"clip score on 1000 pairs within 1e-9, range, scale invariance", 1.0, clip_pairs},
      {"ranking equals oracle on 200 sets, permutation, monotonicity", 5.0, ranking},
      {"ms-ssim self similarity, 10 fixtures within 1e-4, noise ordering", 30.0, ms_ssim_checks},
      {"composition grid: 9 variants, masks in canvas, 15 deg bbox oracle", 5.0, composition_grid},
      {"retrieval equals full scan, threshold 0.39, byte-identical reopen", 5.0, retrieval},
      {"paired t-test p = 0.0500 +- 1e-3, exact antisymmetry", 0.0, t_test},
      {"end-to-end determinism at 1024, mock fidelity 1.0, degraded lower", 60.0, end_to_end},
      {"fallbacks: empty canvas, one regeneration then empty selection", 0.0, fallbacks},
  };

  int failed = 0;
  for (const auto &crit : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      crit.body(check);
    } catch (const std::exception &e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (crit.time_limit_s > 0 && secs >= crit.time_limit_s)
      check.expect(false, "took " + num(secs) + " s, limit " + num(crit.time_limit_s) + " s");
    std::printf("%s  %-70s %8.3f s%s%s\n", check.ok() ? "PASS" : "FAIL", crit.name.c_str(), secs,
                check.ok() ? "" : "  ", check.ok() ? "" : check.detail().c_str());
    failed += !check.ok();
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
