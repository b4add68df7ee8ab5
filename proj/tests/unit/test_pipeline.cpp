#include "adgen/errors.hpp"
#include "adgen/image_io.hpp"
#include "adgen/pipeline.hpp"
#include "adgen/run_evaluation.hpp"
#include "adgen/run_repository.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace adgen;
namespace fs = std::filesystem;

namespace {

const char *kShoePrompt = "Shoe on the floor on an urban street at sunset";

RunOutcome run_once(const PipelineConfig &config, std::string_view prompt = kShoePrompt) {
  auto backends = make_backends(config);
  Pipeline pipeline(config, backends, open_store(config, backends.embed));
  return pipeline.run(prompt);
}

std::set<std::string> ids_of(const nlohmann::json &arr, const char *key) {
  std::set<std::string> out;
  for (const auto &e : arr)
    out.insert(e.at(key).get<std::string>());
  return out;
}

} // namespace

TEST_CASE("mock run produces nine variants and candidates, reproducibly") {
  testing::TempDir tmp;
  const auto config = testing::seeded_config(tmp.path());
  const auto a = run_once(config);
  const auto &m = a.manifest;
  CHECK(m["status"] == run_status::kCompleted);
  CHECK(m["brief"]["primary_product"] == "shoe");
  CHECK(m["variants"].size() == 9);
  CHECK(m["candidates"].size() == 9);
  CHECK(m["quality_reports"].size() == 9);
  CHECK(m["generation_passes"] == 1);
  CHECK_FALSE(m["selected"].empty());
  CHECK(m["selected"].size() <= 4);
  CHECK(m["canvas"]["background_source"] == "asset");
  CHECK(m["caption"]["text"].get<std::string>().find("shoe") != std::string::npos);
  CHECK(verify_manifest(m, a.run_dir).empty());
  CHECK(fs::exists(a.run_dir / "manifest.json"));

  const auto b = run_once(config);
  CHECK(b.run_id != a.run_id);
  CHECK(b.run_id.rfind(a.run_id, 0) == 0);
  CHECK(canonical_manifest(a.manifest) == canonical_manifest(b.manifest));
  CHECK(canonical_manifest(load_run(a.run_dir).manifest) == canonical_manifest(load_run(b.run_dir).manifest));
  for (const auto &entry : fs::directory_iterator(config.runs_dir))
    CHECK(entry.path().filename().string().front() != '.');
}

TEST_CASE("a different seed changes the run") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  const auto a = run_once(config);
  config.run_seed = 8;
  const auto b = run_once(config);
  CHECK(canonical_manifest(a.manifest) != canonical_manifest(b.manifest));
}

TEST_CASE("rejected backgrounds fall back to an empty canvas") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  config.backend.mock.validator = backend::ValidatorPolicy::RejectAll;
  const auto out = run_once(config);
  CHECK(out.manifest["status"] == run_status::kCompleted);
  CHECK(out.manifest["canvas"]["background_source"] == "empty");
  CHECK(out.manifest["canvas"]["background_asset_id"].is_null());
  CHECK(out.manifest["retrieval"]["backgrounds"].empty());
  CHECK_FALSE(out.manifest["retrieval"]["rejected_backgrounds"].empty());
  CHECK(out.manifest["candidates"].size() == 9);
  CHECK(verify_manifest(out.manifest, out.run_dir).empty());
}

TEST_CASE("relaxed pattern is recorded when the strict ones match nothing") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  config.backend.mock.generator.always_flags = {backend::kFlagCaptionMiss, backend::kFlagLightingMismatch};
  const auto out = run_once(config);
  CHECK(out.manifest["matched_pattern"] == nlohmann::json({0, 1, 1, 0}));
  CHECK(out.manifest["rubric_survivors"].size() == 9);
  CHECK(out.manifest["generation_passes"] == 1);
}

TEST_CASE("an empty selection triggers exactly one regeneration pass") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  config.backend.mock.generator.always_flags = {backend::kFlagDuplicate};
  const auto out = run_once(config);
  const auto &m = out.manifest;
  CHECK(m["status"] == run_status::kEmptySelection);
  CHECK(m["generation_passes"] == 2);
  CHECK(m["selected"].empty());
  CHECK(m["matched_pattern"].is_null());
  CHECK(m["candidates"].size() == 18);
  std::set<int> attempts;
  for (const auto &c : m["candidates"])
    attempts.insert(c["attempt"].get<int>());
  CHECK(attempts == std::set<int>{1, 2});
  CHECK(verify_manifest(m, out.run_dir).empty());
}

TEST_CASE("total generation failure is recorded after the retry budget") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  config.backend.mock.generator.failure_rate = 1.0;
  const auto out = run_once(config);
  CHECK(out.manifest["status"] == run_status::kGenerationFailed);
  CHECK(out.manifest["generation_passes"] == 2);
  CHECK(out.manifest["candidates"].empty());
  CHECK(out.manifest["failure_log"].size() == 18);
  CHECK(verify_manifest(out.manifest, out.run_dir).empty());
}

TEST_CASE("a prompt with no matching product fails cleanly") {
  testing::TempDir tmp;
  const auto config = testing::seeded_config(tmp.path());
  const auto out = run_once(config, "Spaceship on the moon");
  CHECK(out.manifest["status"] == run_status::kFailed);
  CHECK_FALSE(out.manifest["failure_log"].empty());
  CHECK(verify_manifest(out.manifest, out.run_dir).empty());
  CHECK_THROWS_AS(run_once(config, "   "), InputError);
}

TEST_CASE("human selection is validated, persisted and idempotent") {
  testing::TempDir tmp;
  const auto config = testing::seeded_config(tmp.path());
  const auto out = run_once(config);
  RunRepository repo(config.runs_dir);
  const auto selected = out.manifest["selected"].get<std::vector<std::string>>();
  REQUIRE(selected.size() >= 2);
  const std::vector<std::string> pick{selected[1], selected[0]};
  const auto m1 = repo.record_human_selection(out.run_id, pick);
  CHECK(m1["human_selection"] == nlohmann::json({selected[0], selected[1]}));
  CHECK(m1["selection_events"].size() == 1);
  const auto bytes1 = image_io::read_file(out.run_dir / "manifest.json");
  const auto m2 = repo.record_human_selection(out.run_id, pick);
  CHECK(m2 == m1);
  CHECK(image_io::read_file(out.run_dir / "manifest.json") == bytes1);
  CHECK(verify_manifest(repo.load(out.run_id), out.run_dir).empty());

  const auto all = ids_of(out.manifest["candidates"], "candidate_id");
  std::string outside;
  for (const auto &id : all)
    if (std::find(selected.begin(), selected.end(), id) == selected.end())
      outside = id;
  REQUIRE_FALSE(outside.empty());
  CHECK_THROWS_AS(repo.record_human_selection(out.run_id, {outside}), InputError);
  CHECK_THROWS_AS(repo.record_human_selection(out.run_id, {"nope"}), InputError);
  CHECK_THROWS_AS(repo.record_human_selection(out.run_id, {}), InputError);
  CHECK_THROWS_AS(repo.record_human_selection("run-unknown", {selected[0]}), InputError);
  CHECK_THROWS_AS(repo.load("../etc"), InputError);
  CHECK(repo.load(out.run_id)["human_selection"] == m1["human_selection"]);
}

TEST_CASE("verify_manifest catches dangling references") {
  testing::TempDir tmp;
  const auto config = testing::seeded_config(tmp.path());
  const auto out = run_once(config);
  auto broken = out.manifest;
  broken["selected"].push_back("ghost");
  CHECK_FALSE(verify_manifest(broken).empty());
  broken = out.manifest;
  broken["candidates"][0]["variant_id"] = "nowhere";
  CHECK_FALSE(verify_manifest(broken).empty());
  fs::remove_all(out.run_dir / "images");
  CHECK_FALSE(verify_manifest(out.manifest, out.run_dir).empty());
}

TEST_CASE("run evaluation scores baseline and pipeline conditions") {
  testing::TempDir tmp;
  auto config = testing::seeded_config(tmp.path());
  const auto a = run_once(config);
  config.run_seed = 99;
  const auto b = run_once(config, "Mug on a kitchen counter");
  auto embed = std::make_shared<backend::MockEmbeddingBackend>();
  AssetStore refs(config.store_path, embed);
  const auto ev = eval::evaluate_runs({a.run_dir, b.run_dir}, refs);
  CHECK(ev.rows.size() == 4);
  for (const auto &row : ev.rows) {
    CHECK(row.record.ms_ssim == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(row.record.embed_cosine == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(ev.summary["runs"] == 2);
  CHECK(ev.summary["conditions"]["pipeline"]["ms_ssim"]["n"] == 2);
  CHECK_FALSE(ev.summary["paired_t_tests"].is_null());
  const auto csv = eval::fidelity_csv(ev.rows);
  CHECK(csv.rfind("pair_id,ms_ssim,embed_cosine\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
