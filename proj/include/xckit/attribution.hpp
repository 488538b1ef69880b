#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xckit/geometry.hpp"
#include "xckit/model.hpp"
#include "xckit/tensor.hpp"

namespace xckit {

// BEV feature grid, (y, x, c) layout, with its metric placement.
struct PseudoImage {
  Tensor features;
  GridMeta grid;

  void validate() const;
  std::size_t channels() const { return features.shape().at(2); }
};

// Which prediction and class an attribution map explains, and the flat model
// output index carrying that class score.
struct AttributionTarget {
  std::size_t box_index = 0;
  std::size_t class_index = 0;
  std::size_t output_index = 0;

  friend bool operator==(const AttributionTarget&, const AttributionTarget&) = default;
};

enum class AttributionMethod : std::uint8_t {
  kBackprop = 0,
  kIntegratedGradients = 1,
  kIgNoInputMult = 2,
};

std::string to_string(AttributionMethod method);
AttributionMethod parse_attribution_method(std::string_view name);

struct AttributionMap {
  Tensor values;  // same (H, W, C) shape as the pseudo image
  AttributionTarget target;
  AttributionMethod method = AttributionMethod::kBackprop;
  std::uint32_t ig_steps = 0;
  std::string baseline_id;

  std::size_t height() const { return values.shape()[0]; }
  std::size_t width() const { return values.shape()[1]; }
  std::size_t channels() const { return values.shape()[2]; }

  friend bool operator==(const AttributionMap&, const AttributionMap&) = default;
};

enum class PathRule {
  kMidpoint,       // alpha_k = (k - 0.5) / steps
  kRightEndpoint,  // alpha_k = k / steps; steps = 1 evaluates at the input
};

struct IgOptions {
  std::uint32_t steps = 32;
  PathRule rule = PathRule::kMidpoint;
  unsigned jobs = 1;
  std::string baseline_id = "zeros";
};

AttributionMap backprop_saliency(const ModelGraph& model, const Tensor& image,
                                 const AttributionTarget& target);

// One forward pass shared by every target.
std::vector<AttributionMap> backprop_saliency(const ModelGraph& model, const Tensor& image,
                                              std::span<const AttributionTarget> targets);

AttributionMap integrated_gradients(const ModelGraph& model, const Tensor& image,
                                    const Tensor& baseline, const IgOptions& options,
                                    const AttributionTarget& target);

// Path-averaged gradient without the final (x - x') factor.
AttributionMap modified_ig(const ModelGraph& model, const Tensor& image,
                           const Tensor& baseline, const IgOptions& options,
                           const AttributionTarget& target);

AttributionMap attribute(const ModelGraph& model, const Tensor& image,
                         AttributionMethod method, const IgOptions& options,
                         const AttributionTarget& target);

enum class Sign : std::uint8_t { kPositive, kNegative };

// Per-pixel channel sum of one sign, as a non-negative magnitude.
struct AggregatedMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  Sign sign = Sign::kPositive;
};

AggregatedMap aggregate_signed(const AttributionMap& map, Sign sign);

}  // namespace xckit
