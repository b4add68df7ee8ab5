#include "adgen/evaluation.hpp"

#include "adgen/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace adgen::eval {

namespace {

constexpr std::array<double, 5> kScaleWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(size));
  const double center = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += taps[i];
  }
  for (double &t : taps)
    t /= sum;
  return taps;
}

// Valid-mode separable filtering.
Plane filter_valid(const Plane &src, const std::vector<double> &taps) {
  const int n = static_cast<int>(taps.size());
  const int w = src.width - n + 1, h = src.height - n + 1;
  Plane rows(w, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += taps[k] * src(x + k, y);
      rows(x, y) = acc;
    }
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += taps[k] * rows(x, y + k);
      out(x, y) = acc;
    }
  return out;
}

Plane multiply(const Plane &a, const Plane &b) {
  Plane out(a.width, a.height);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    out.values[i] = a.values[i] * b.values[i];
  return out;
}

Plane add(const Plane &a, const Plane &b) {
  Plane out(a.width, a.height);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    out.values[i] = a.values[i] + b.values[i];
  return out;
}

// 2x2 mean pooling; an odd trailing row/column is mirrored before pooling.
Plane downsample(const Plane &src) {
  const int w = (src.width + 1) / 2, h = (src.height + 1) / 2;
  Plane out(w, h);
  auto at = [&](int x, int y) { return src(std::min(x, src.width - 1), std::min(y, src.height - 1)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = (at(2 * x, 2 * y) + at(2 * x + 1, 2 * y) + at(2 * x, 2 * y + 1) + at(2 * x + 1, 2 * y + 1)) / 4.0;
  return out;
}

struct ScaleTerms {
  double ssim;
  double cs;
};

ScaleTerms ssim_terms(const Plane &x, const Plane &y, const std::vector<double> &taps, const MsSsimOptions &o) {
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const Plane mx = filter_valid(x, taps);
  const Plane my = filter_valid(y, taps);
  const Plane mxy = filter_valid(multiply(x, y), taps);
  const Plane msq = filter_valid(add(multiply(x, x), multiply(y, y)), taps);
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mx.values.size(); ++i) {
    const double num0 = 2.0 * mx.values[i] * my.values[i];
    const double den0 = mx.values[i] * mx.values[i] + my.values[i] * my.values[i];
    const double lum = (num0 + c1) / (den0 + c1);
    const double cs = (2.0 * mxy.values[i] - num0 + c2) / (msq.values[i] - den0 + c2);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  const double n = static_cast<double>(mx.values.size());
  return {ssim_sum / n, cs_sum / n};
}

} // namespace

int ms_ssim_min_side(const MsSsimOptions &options) { return options.window << (options.scales - 1); }

double ms_ssim(const Raster &a, const Raster &b, const MsSsimOptions &options) {
  if (options.scales < 1 || options.scales > static_cast<int>(kScaleWeights.size()))
    throw InputError("ms_ssim supports 1 to 5 scales");
  if (a.width() != b.width() || a.height() != b.height())
    throw InputError("ms_ssim needs images of equal size");
  const int min_side = ms_ssim_min_side(options);
  if (std::min(a.width(), a.height()) < min_side)
    throw InputError("ms_ssim needs images of at least " + std::to_string(min_side) + " pixels per side");

  // Fewer scales renormalize the leading weights.
  std::vector<double> weights(kScaleWeights.begin(), kScaleWeights.begin() + options.scales);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (options.scales < 5)
    for (double &w : weights)
      w /= wsum;

  const auto taps = gaussian_taps(options.window, options.sigma);
  Plane x = luminance(a), y = luminance(b);
  double result = 1.0;
  for (int s = 0; s < options.scales; ++s) {
    if (s > 0) {
      x = downsample(x);
      y = downsample(y);
    }
    const auto terms = ssim_terms(x, y, taps, options);
    const double v = s + 1 == options.scales ? terms.ssim : terms.cs;
    result *= std::pow(std::max(0.0, v), weights[s]);
  }
  return std::clamp(result, 0.0, 1.0);
}

Raster extract_product(const Raster &image, const CompositionVariant &variant) {
  const Rect &box = variant.placed_bbox;
  if (box.empty() || !box.inside(image.width(), image.height()))
    throw InputError("placed bbox is degenerate or outside the image");
  if (variant.mask.width() != image.width() || variant.mask.height() != image.height())
    throw InputError("variant mask does not match the image size");
  Raster out = crop(to_rgb(image), box);
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x)
      if (variant.mask.at(box.x + x, box.y + y, 0) == 0)
        for (int c = 0; c < 3; ++c)
          out.at(x, y, c) = 255;
  return out;
}

FidelityRecord product_fidelity(const CandidateImage &generated, const CompositionVariant &variant,
                                const Asset &reference, backend::EmbeddingBackend &embedder,
                                const MsSsimOptions &options) {
  if (generated.variant_id != variant.variant_id)
    throw InputError("candidate " + generated.candidate_id + " was not generated from variant " +
                     variant.variant_id);
  if (reference.raster.empty())
    throw InputError("reference asset has no pixels");
  const Raster actual = extract_product(generated.raster, variant);
  const Raster expected = extract_product(variant.composed, variant);

  int w = reference.raster.width(), h = reference.raster.height();
  const int min_side = ms_ssim_min_side(options);
  if (std::min(w, h) < min_side) {
    const double f = static_cast<double>(min_side) / std::min(w, h);
    w = std::max(min_side, static_cast<int>(std::ceil(w * f)));
    h = std::max(min_side, static_cast<int>(std::ceil(h * f)));
  }
  const Raster a = resize_bilinear(actual, w, h);
  const Raster e = resize_bilinear(expected, w, h);

  FidelityRecord rec;
  rec.pair_id = generated.candidate_id;
  rec.ms_ssim = ms_ssim(a, e, options);
  rec.embed_cosine = backend::cosine(embedder.embed_image(a), embedder.embed_image(e));
  return rec;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0))
    throw InputError("incomplete_beta needs a, b > 0");
  if (x <= 0)
    return 0.0;
  if (x >= 1)
    return 1.0;
  // Continued fraction (modified Lentz), evaluated on the side where it converges fast.
  auto fraction = [](double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny)
      d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((a + m2 - 1) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny)
        d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny)
        c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny)
        d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny)
        c = tiny;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < eps)
        break;
    }
    return h;
  };
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(log_front) * fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0))
    throw InputError("degrees of freedom must be positive");
  if (std::isinf(t))
    return 0.0;
  return std::clamp(incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t)), 0.0, 1.0);
}

PairedTestResult paired_t_test(const std::vector<double> &baseline, const std::vector<double> &treatment) {
  if (baseline.size() != treatment.size())
    throw InputError("paired t-test needs equally long samples");
  if (baseline.size() < 2)
    throw InputError("paired t-test needs at least two pairs");
  PairedTestResult r;
  r.n = static_cast<int>(baseline.size());
  std::vector<double> d(baseline.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = treatment[i] - baseline[i];
    if (!std::isfinite(d[i]))
      throw InputError("paired t-test samples must be finite");
  }
  double sum = 0.0;
  for (double v : d)
    sum += v;
  r.mean_diff = sum / r.n;
  double ss = 0.0;
  for (double v : d)
    ss += (v - r.mean_diff) * (v - r.mean_diff);
  const double sd = std::sqrt(ss / (r.n - 1));
  if (sd == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.t_statistic = r.mean_diff / (sd / std::sqrt(static_cast<double>(r.n)));
  r.p_value = student_t_two_sided_p(r.t_statistic, r.n - 1);
  return r;
}

PreferenceTally preference_rate(const std::vector<Vote> &votes, int qc_empty, std::string model_tag) {
  if (qc_empty < 0)
    throw InputError("qc_empty must not be negative");
  std::map<std::string, std::pair<int, int>> per_pair; // pipeline, baseline
  for (const auto &v : votes)
    (v.winner == Winner::Pipeline ? per_pair[v.pair_id].first : per_pair[v.pair_id].second)++;

  PreferenceTally t;
  t.model_tag = std::move(model_tag);
  t.qc_empty_cases = qc_empty;
  for (const auto &[id, counts] : per_pair) {
    if ((counts.first + counts.second) % 2 == 0)
      throw InputError("pair " + id + " has an even number of votes");
    (counts.first > counts.second ? t.pipeline_wins : t.baseline_wins)++;
  }
  const int total = t.pipeline_wins + t.baseline_wins + t.qc_empty_cases;
  if (total == 0)
    throw InputError("no votes or qc-empty cases to tally");
  t.preference_rate = static_cast<double>(t.pipeline_wins) / total;
  return t;
}

Summary summarize(const std::vector<double> &values) {
  Summary s;
  s.n = static_cast<int>(values.size());
  if (values.empty())
    return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values)
      ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

} // namespace adgen::eval
