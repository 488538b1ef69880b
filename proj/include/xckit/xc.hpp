#pragma once

#include <cstddef>
#include <optional>

#include "xckit/attribution.hpp"
#include "xckit/geometry.hpp"

namespace xckit {

struct XcConfig {
  double a_thresh = 0.1;
  double margin_m = 0.2;

  void validate() const;
};

// Accumulators for one attribution sign. s/S sum significant magnitudes
// inside the enlarged box / over the whole grid; c/C count those pixels.
struct SignedConcentration {
  double s = 0.0;
  double S = 0.0;
  std::size_t c = 0;
  std::size_t C = 0;
  // Empty when the denominator is zero.
  std::optional<double> xc_s;
  std::optional<double> xc_c;

  friend bool operator==(const SignedConcentration&, const SignedConcentration&) = default;
};

struct XcScores {
  SignedConcentration positive;
  SignedConcentration negative;

  friend bool operator==(const XcScores&, const XcScores&) = default;
};

// Pixels whose aggregate reaches the threshold (inclusive).
Mask significance_mask(const AggregatedMap& agg, double a_thresh);

XcScores xc_scores(const AttributionMap& map, const Box3D& box, const GridMeta& grid,
                   const XcConfig& cfg);

// Same accumulation over a precomputed membership mask.
SignedConcentration concentrate(const AggregatedMap& agg, const Mask& inside, double a_thresh);

}  // namespace xckit
