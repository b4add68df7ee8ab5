#pragma once

#include "adgen/backend/interfaces.hpp"
#include "adgen/caption.hpp"
#include "adgen/composition.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace adgen {

struct CandidateImage {
  std::string candidate_id; // "<variant_id>-s<seed_index>-a<attempt>"
  std::string variant_id;
  Raster raster;
  std::uint64_t seed = 0;
  int seed_index = 0;
  int attempt = 1;
  std::vector<std::string> annotations; // backend-provided notes, passed to the rubric
};

struct GenerationFailure {
  std::string variant_id;
  std::uint64_t seed = 0;
  int seed_index = 0;
  int attempt = 1;
  std::string error;
};

struct GenerationBatch {
  std::vector<CandidateImage> candidates;
  std::vector<GenerationFailure> failures;
};

/// Raised when every request of a batch failed.
class GenerationFailed : public std::runtime_error {
public:
  explicit GenerationFailed(std::vector<GenerationFailure> failures);
  const std::vector<GenerationFailure> &failures() const { return failures_; }

private:
  std::vector<GenerationFailure> failures_;
};

/// run_seed xor a hash of (variant_id, attempt, seed_index).
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view variant_id, int attempt, int seed_index);

std::string candidate_id(std::string_view variant_id, int seed_index, int attempt);

struct GenerationOptions {
  int seeds_per_variant = 1;
  int max_in_flight = 4;
};

class SceneGenerator {
public:
  SceneGenerator(std::shared_ptr<backend::SceneGenerationBackend> backend, GenerationOptions options = {});

  /// One request per (variant, seed index), issued concurrently. Results come
  /// back in variant order, then seed order, regardless of completion order.
  /// Failed requests are listed in `failures`; GenerationFailed is thrown only
  /// when nothing succeeded.
  GenerationBatch generate_all(const std::vector<CompositionVariant> &variants, const SceneCaption &caption,
                               std::uint64_t run_seed, int attempt = 1) const;

private:
  std::shared_ptr<backend::SceneGenerationBackend> backend_;
  GenerationOptions options_;
};

} // namespace adgen
