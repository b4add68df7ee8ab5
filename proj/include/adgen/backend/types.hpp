#pragma once

#include "adgen/raster.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adgen::backend {

/// A fixed-length embedding tagged with the model that produced it. Vectors from
/// different models are never compared.
struct EmbeddingVector {
  std::vector<double> values;
  std::string model_tag;

  int dimension() const { return static_cast<int>(values.size()); }
  friend bool operator==(const EmbeddingVector &, const EmbeddingVector &) = default;
};

/// Validates finiteness and non-zero dimension; throws InputError.
void check_embedding(const EmbeddingVector &v);

/// Cosine similarity. Throws InputError when tags or dimensions differ or a
/// vector has zero norm.
double cosine(const EmbeddingVector &a, const EmbeddingVector &b);

/// Scales to unit L2 norm (the zero vector is rejected).
EmbeddingVector normalized(EmbeddingVector v);

struct TextCompletionRequest {
  std::string system_instructions;
  std::string user_content;
  std::vector<Raster> attached_images;
  std::string expected_schema_id;
};

struct GenerationRequest {
  Raster composed_canvas;
  Raster product_mask; // single channel, nonzero on the product footprint
  std::string caption;
  std::uint64_t seed = 0;
};

/// Throws InputError when the mask does not match the canvas.
void check_request(const GenerationRequest &req);

/// Output of a generation backend. `annotations` carries free-form notes some
/// backends attach to an image (the mock generator uses them to report planted
/// defects); real backends normally leave it empty.
struct GeneratedScene {
  Raster raster;
  std::vector<std::string> annotations;
};

} // namespace adgen::backend
