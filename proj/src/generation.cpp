#include "adgen/generation.hpp"

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"

#include <atomic>
#include <optional>
#include <thread>

namespace adgen {

GenerationFailed::GenerationFailed(std::vector<GenerationFailure> failures)
    : std::runtime_error("all " + std::to_string(failures.size()) + " generation requests failed"),
      failures_(std::move(failures)) {}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view variant_id, int attempt, int seed_index) {
  const std::string key =
      std::string(variant_id) + "#" + std::to_string(attempt) + "#" + std::to_string(seed_index);
  return run_seed ^ fnv1a64(key);
}

std::string candidate_id(std::string_view variant_id, int seed_index, int attempt) {
  return std::string(variant_id) + "-s" + std::to_string(seed_index) + "-a" + std::to_string(attempt);
}

SceneGenerator::SceneGenerator(std::shared_ptr<backend::SceneGenerationBackend> backend,
                               GenerationOptions options)
    : backend_(std::move(backend)), options_(options) {
  if (!backend_)
    throw InputError("SceneGenerator needs a generation backend");
  if (options_.seeds_per_variant < 1)
    throw InputError("generation.seeds_per_variant must be positive");
  if (options_.max_in_flight < 1)
    throw InputError("generation.max_in_flight must be positive");
}

GenerationBatch SceneGenerator::generate_all(const std::vector<CompositionVariant> &variants,
                                             const SceneCaption &caption, std::uint64_t run_seed,
                                             int attempt) const {
  if (variants.empty())
    throw InputError("no composition variants to generate from");
  if (attempt < 1)
    throw InputError("attempt numbers start at 1");

  const std::size_t per = static_cast<std::size_t>(options_.seeds_per_variant);
  const std::size_t total = variants.size() * per;
  struct Slot {
    std::optional<CandidateImage> image;
    std::optional<GenerationFailure> failure;
  };
  std::vector<Slot> slots(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const auto &variant = variants[i / per];
      const int seed_index = static_cast<int>(i % per);
      const auto seed = derive_seed(run_seed, variant.variant_id, attempt, seed_index);
      backend::GenerationRequest req{variant.composed, variant.mask, caption.text, seed};
      try {
        auto scene = backend_->generate_scene(req);
        if (scene.raster.width() != variant.composed.width() ||
            scene.raster.height() != variant.composed.height())
          throw BackendError(BackendErrorKind::MalformedResponse,
                             "generated image size differs from the canvas");
        slots[i].image = CandidateImage{candidate_id(variant.variant_id, seed_index, attempt),
                                        variant.variant_id,
                                        to_rgb(scene.raster),
                                        seed,
                                        seed_index,
                                        attempt,
                                        std::move(scene.annotations)};
      } catch (const std::exception &e) {
        slots[i].failure = GenerationFailure{variant.variant_id, seed, seed_index, attempt, e.what()};
      }
    }
  };

  const std::size_t threads = std::min<std::size_t>(total, static_cast<std::size_t>(options_.max_in_flight));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t)
      pool.emplace_back(worker);
    worker();
  }

  GenerationBatch batch;
  for (auto &s : slots) {
    if (s.image)
      batch.candidates.push_back(std::move(*s.image));
    else
      batch.failures.push_back(std::move(*s.failure));
  }
  if (batch.candidates.empty())
    throw GenerationFailed(std::move(batch.failures));
  return batch;
}

} // namespace adgen
