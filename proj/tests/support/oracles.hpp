#pragma once

// Brute-force reference implementations used to check the library. They are
// written independently of the code under test and favor obviousness over speed.

#include "adgen/quality.hpp"
#include "adgen/raster.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

/// Scan patterns in order; the first with any exact match wins.
std::vector<std::size_t> select_by_patterns(const std::vector<std::array<int, 4>> &scores,
                                            const std::vector<std::array<int, 4>> &patterns);

/// Filter + full sort implementation of the selection policy.
std::vector<std::string> rank_and_select(const std::vector<adgen::QualityReport> &reports,
                                         const adgen::SelectionPolicy &policy);

/// Axis-aligned extent of a w x h rectangle rotated by deg, from its four corners.
std::pair<int, int> corner_extent(int w, int h, double deg);

/// Number of canvas pixels whose center falls on an opaque source pixel when
/// the scaled product (scaled_alpha > 0) is rotated by deg about the center
/// of a bw x bh box. Uses complex multiplication for the rotation.
std::size_t rotated_footprint(const adgen::Raster &scaled_rgba, int bw, int bh, double deg);

/// Plain cosine similarity.
double cosine(const std::vector<double> &a, const std::vector<double> &b);

} // namespace oracle
