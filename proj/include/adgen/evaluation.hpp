#pragma once

#include "adgen/asset_store.hpp"
#include "adgen/composition.hpp"
#include "adgen/generation.hpp"

#include <string>
#include <vector>

namespace adgen::eval {

struct MsSsimOptions {
  int scales = 5;
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Smallest side length accepted for the given options (window * 2^(scales-1)).
int ms_ssim_min_side(const MsSsimOptions &options = {});

/// Multi-scale SSIM over BT.601 luminance. Gaussian-weighted statistics over
/// valid windows, 2x2 average pooling between scales (odd sizes are padded by
/// repeating the last row/column), contrast-structure terms at every scale and
/// the full SSIM at the coarsest, combined with the standard exponents.
/// Throws InputError on size mismatch or images below ms_ssim_min_side().
double ms_ssim(const Raster &a, const Raster &b, const MsSsimOptions &options = {});

struct FidelityRecord {
  std::string pair_id;
  double ms_ssim = 0.0;
  double embed_cosine = 0.0;
};

/// Crops the product footprint out of `generated` at the variant's placed
/// box, blanking pixels outside the mask to white, and compares it with the
/// same crop of the composed input (the reference product as it was placed).
/// Both crops are resized to the reference asset's size, enlarged uniformly
/// when needed so the short side reaches ms_ssim_min_side().
FidelityRecord product_fidelity(const CandidateImage &generated, const CompositionVariant &variant,
                                const Asset &reference, backend::EmbeddingBackend &embedder,
                                const MsSsimOptions &options = {});

/// Masked crop used by product_fidelity, exposed for tests and tools.
Raster extract_product(const Raster &image, const CompositionVariant &variant);

struct PairedTestResult {
  double mean_diff = 0.0; // mean of treatment - baseline
  double t_statistic = 0.0;
  double p_value = 1.0;   // two-sided
  int n = 0;
  bool degenerate = false; // differences have zero variance
};

/// Two-sided paired t-test. Zero-variance differences report t = 0, p = 1
/// and set `degenerate`. Throws InputError unless sizes match and n >= 2.
PairedTestResult paired_t_test(const std::vector<double> &baseline, const std::vector<double> &treatment);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

enum class Winner { Pipeline, Baseline };

struct Vote {
  std::string pair_id;
  Winner winner = Winner::Pipeline;
};

struct PreferenceTally {
  std::string model_tag;
  int pipeline_wins = 0;
  int baseline_wins = 0;
  int qc_empty_cases = 0;
  double preference_rate = 0.0;
};

/// Majority vote per pair; every pair where quality control returned nothing
/// counts as an extra baseline win. Throws InputError when a pair has an even
/// number of votes, qc_empty is negative, or there is nothing to tally.
PreferenceTally preference_rate(const std::vector<Vote> &votes, int qc_empty, std::string model_tag = {});

struct Summary {
  int n = 0;
  double mean = 0.0;
  double std = 0.0; // sample standard deviation (n - 1), 0 when n < 2
};

Summary summarize(const std::vector<double> &values);

} // namespace adgen::eval
