#include "xckit/xc.hpp"

#include <cmath>

#include "xckit/error.hpp"

namespace xckit {

void XcConfig::validate() const {
  if (!(a_thresh >= 0.0) || !std::isfinite(a_thresh)) {
    throw Error(ErrorCode::kInvalidArgument, "a_thresh must be >= 0");
  }
  if (!(margin_m >= 0.0) || !std::isfinite(margin_m)) {
    throw Error(ErrorCode::kNegativeMargin, "margin must be >= 0");
  }
}

Mask significance_mask(const AggregatedMap& agg, double a_thresh) {
  Mask mask{agg.height, agg.width, std::vector<std::uint8_t>(agg.values.size(), 0)};
  for (std::size_t p = 0; p < agg.values.size(); ++p) {
    mask.bits[p] = agg.values[p] >= a_thresh ? 1 : 0;
  }
  return mask;
}

SignedConcentration concentrate(const AggregatedMap& agg, const Mask& inside, double a_thresh) {
  SignedConcentration out;
  for (std::size_t p = 0; p < agg.values.size(); ++p) {
    const double a = agg.values[p];
    if (!(a >= a_thresh)) continue;
    out.S += a;
    ++out.C;
    if (inside.bits[p]) {
      out.s += a;
      ++out.c;
    }
  }
  if (out.S > 0.0) out.xc_s = out.s / out.S;
  if (out.C > 0) out.xc_c = static_cast<double>(out.c) / static_cast<double>(out.C);
  return out;
}

XcScores xc_scores(const AttributionMap& map, const Box3D& box, const GridMeta& grid,
                   const XcConfig& cfg) {
  cfg.validate();
  grid.validate();
  if (map.height() != grid.height || map.width() != grid.width) {
    throw Error(ErrorCode::kShapeMismatch, "attribution map " + shape_to_string(map.values.shape()) +
                                               " does not match grid");
  }
  const Mask inside = membership_mask(project_to_bev(enlarge(box, cfg.margin_m)), grid);
  return {concentrate(aggregate_signed(map, Sign::kPositive), inside, cfg.a_thresh),
          concentrate(aggregate_signed(map, Sign::kNegative), inside, cfg.a_thresh)};
}

}  // namespace xckit
