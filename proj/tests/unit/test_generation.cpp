#include "adgen/backend/mock.hpp"
#include "adgen/errors.hpp"
#include "adgen/generation.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

using namespace adgen;

namespace {

std::vector<CompositionVariant> small_variants() {
  PlanOptions opts;
  opts.canvas_width = 128;
  opts.canvas_height = 128;
  CompositionPlanner planner(std::make_shared<backend::StructuredCompleter>(std::make_shared<backend::MockLanguageModel>()),
                             opts);
  const Canvas canvas = make_canvas(nullptr, opts);
  const Asset prod{"p", AssetKind::Product, testing::ellipse_product(40, 30, 9, 9, 200), {}, "p", ""};
  return planner.enumerate_variants(canvas, prod, {0.3, 0.3});
}

const SceneCaption kCaption{"shoe on a street", false, "ref", false, ""};

// Fails for a chosen set of seeds and sleeps a seed-dependent amount so
// completion order differs from request order.
class ScriptedGenerator : public backend::SceneGenerationBackend {
public:
  explicit ScriptedGenerator(std::set<std::uint64_t> failing) : failing_(std::move(failing)) {}
  backend::GeneratedScene generate_scene(const backend::GenerationRequest &req) override {
    const int now = ++in_flight;
    int seen = max_seen.load();
    while (now > seen && !max_seen.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(req.seed % 7));
    --in_flight;
    if (failing_.contains(req.seed))
      throw BackendError(BackendErrorKind::ServiceUnavailable, "scripted failure");
    return inner_.generate_scene(req);
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> max_seen{0};

private:
  std::set<std::uint64_t> failing_;
  backend::MockSceneGenerator inner_;
};

} // namespace

TEST_CASE("nine variants give nine deterministic candidates") {
  const auto variants = small_variants();
  REQUIRE(variants.size() == 9);
  SceneGenerator gen(std::make_shared<backend::MockSceneGenerator>());
  const auto a = gen.generate_all(variants, kCaption, 1234);
  const auto b = gen.generate_all(variants, kCaption, 1234);
  REQUIRE(a.candidates.size() == 9);
  CHECK(a.failures.empty());
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(a.candidates[i].variant_id == variants[i].variant_id);
    CHECK(a.candidates[i].candidate_id == variants[i].variant_id + "-s0-a1");
    CHECK(a.candidates[i].raster == b.candidates[i].raster);
    CHECK(a.candidates[i].seed == derive_seed(1234, variants[i].variant_id, 1, 0));
    CHECK(a.candidates[i].raster.width() == 128);
  }
  const auto other = gen.generate_all(variants, kCaption, 99);
  CHECK_FALSE(other.candidates[0].raster == a.candidates[0].raster);
}

TEST_CASE("scripted failures are recorded and skipped") {
  const auto variants = small_variants();
  const std::set<std::uint64_t> failing{derive_seed(5, variants[2].variant_id, 1, 0),
                                        derive_seed(5, variants[6].variant_id, 1, 0)};
  auto backend = std::make_shared<ScriptedGenerator>(failing);
  SceneGenerator gen(backend, {1, 3});
  const auto batch = gen.generate_all(variants, kCaption, 5);
  CHECK(batch.candidates.size() == 7);
  REQUIRE(batch.failures.size() == 2);
  CHECK(batch.failures[0].variant_id == variants[2].variant_id);
  CHECK(batch.failures[1].variant_id == variants[6].variant_id);
  CHECK(batch.failures[0].error.find("scripted failure") != std::string::npos);
  std::size_t j = 0;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (i == 2 || i == 6)
      continue;
    CHECK(batch.candidates[j++].variant_id == variants[i].variant_id);
  }
  CHECK(backend->max_seen <= 3);
}

TEST_CASE("two seeds per variant give eighteen distinct seeds") {
  const auto variants = small_variants();
  SceneGenerator gen(std::make_shared<backend::MockSceneGenerator>(), {2, 4});
  const auto batch = gen.generate_all(variants, kCaption, 0);
  REQUIRE(batch.candidates.size() == 18);
  std::set<std::uint64_t> seeds;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < 18; ++i) {
    seeds.insert(batch.candidates[i].seed);
    ids.insert(batch.candidates[i].candidate_id);
    CHECK(batch.candidates[i].variant_id == variants[i / 2].variant_id);
    CHECK(batch.candidates[i].seed_index == static_cast<int>(i % 2));
  }
  CHECK(seeds.size() == 18);
  CHECK(ids.size() == 18);
}

TEST_CASE("attempts change the seeds") {
  const auto variants = small_variants();
  SceneGenerator gen(std::make_shared<backend::MockSceneGenerator>());
  const auto first = gen.generate_all(variants, kCaption, 3, 1);
  const auto second = gen.generate_all(variants, kCaption, 3, 2);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    CHECK(first.candidates[i].seed != second.candidates[i].seed);
    CHECK(second.candidates[i].attempt == 2);
    CHECK(second.candidates[i].candidate_id == variants[i].variant_id + "-s0-a2");
  }
}

TEST_CASE("a batch where everything fails raises") {
  const auto variants = small_variants();
  backend::MockGeneratorOptions o;
  o.failure_rate = 1.0;
  SceneGenerator gen(std::make_shared<backend::MockSceneGenerator>(o));
  try {
    gen.generate_all(variants, kCaption, 0);
    FAIL("expected GenerationFailed");
  } catch (const GenerationFailed &e) {
    CHECK(e.failures().size() == 9);
  }
  CHECK_THROWS_AS(gen.generate_all({}, kCaption, 0), InputError);
}
