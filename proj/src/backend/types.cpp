#include "adgen/backend/types.hpp"

#include "adgen/errors.hpp"

#include <algorithm>
#include <cmath>

namespace adgen::backend {

void check_embedding(const EmbeddingVector &v) {
  if (v.values.empty())
    throw InputError("embedding has zero dimension");
  for (double x : v.values)
    if (!std::isfinite(x))
      throw InputError("embedding contains a non-finite value");
}

double cosine(const EmbeddingVector &a, const EmbeddingVector &b) {
  if (a.model_tag != b.model_tag)
    throw InputError("embedding model tags differ: '" + a.model_tag + "' vs '" + b.model_tag + "'");
  if (a.values.size() != b.values.size())
    throw InputError("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0)
    throw InputError("cosine of a zero vector is undefined");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector normalized(EmbeddingVector v) {
  double n = 0;
  for (double x : v.values)
    n += x * x;
  if (n == 0 || !std::isfinite(n))
    throw InputError("cannot normalize a zero or non-finite vector");
  n = std::sqrt(n);
  for (double &x : v.values)
    x /= n;
  return v;
}

void check_request(const GenerationRequest &req) {
  if (req.composed_canvas.empty())
    throw InputError("generation request has an empty canvas");
  if (req.product_mask.channels() != 1)
    throw InputError("product mask must be single-channel");
  if (req.product_mask.width() != req.composed_canvas.width() ||
      req.product_mask.height() != req.composed_canvas.height())
    throw InputError("product mask dimensions differ from the canvas");
}

} // namespace adgen::backend
