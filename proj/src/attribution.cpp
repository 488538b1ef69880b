#include "xckit/attribution.hpp"

#include <algorithm>

#include "xckit/autodiff.hpp"
#include "xckit/error.hpp"
#include "xckit/parallel.hpp"

namespace xckit {

namespace {

// Fixed chunking keeps the reduction order independent of the job count.
constexpr std::uint32_t kStepsPerChunk = 8;

void check_target(const ModelGraph& model, const AttributionTarget& target) {
  const std::size_t n_out = shape_size(model.output_shape());
  if (target.output_index >= n_out) {
    throw Error(ErrorCode::kTargetOutOfRange,
                "output " + std::to_string(target.output_index) + " of " + std::to_string(n_out));
  }
}

void check_image(const ModelGraph& model, const Tensor& image) {
  if (image.shape() != model.input_shape()) {
    throw Error(ErrorCode::kShapeMismatch, "image " + shape_to_string(image.shape()) +
                                               " vs model input " +
                                               shape_to_string(model.input_shape()));
  }
  if (image.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "attribution needs an (H, W, C) input");
  }
}

// Mean gradient of the target output along the straight path from baseline
// to image, in float64.
std::vector<double> path_average_gradient(const ModelGraph& model, const Tensor& image,
                                          const Tensor& baseline, const IgOptions& options,
                                          std::size_t output_index) {
  if (options.steps == 0) throw Error(ErrorCode::kZeroSteps, "integrated gradients needs steps >= 1");
  if (baseline.shape() != image.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "baseline " + shape_to_string(baseline.shape()) +
                                               " vs image " + shape_to_string(image.shape()));
  }
  const std::size_t n = image.size();
  const std::uint32_t steps = options.steps;
  const std::size_t n_chunks = (steps + kStepsPerChunk - 1) / kStepsPerChunk;
  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n, 0.0));

  parallel_for(n_chunks, options.jobs, [&](std::size_t chunk) {
    std::vector<double> point(n);
    const std::uint32_t k0 = static_cast<std::uint32_t>(chunk) * kStepsPerChunk;
    const std::uint32_t k1 = std::min(steps, k0 + kStepsPerChunk);
    for (std::uint32_t k = k0 + 1; k <= k1; ++k) {
      const double alpha = options.rule == PathRule::kMidpoint
                               ? (static_cast<double>(k) - 0.5) / steps
                               : static_cast<double>(k) / steps;
      for (std::size_t i = 0; i < n; ++i) {
        const double base = baseline[i];
        point[i] = base + alpha * (static_cast<double>(image[i]) - base);
      }
      const Tape tape = record(model, point);
      const auto g = input_gradient_f64(model, tape, output_index);
      auto& acc = partial[chunk];
      for (std::size_t i = 0; i < n; ++i) acc[i] += g[i];
    }
  });

  std::vector<double> total(n, 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < n; ++i) total[i] += p[i];
  }
  for (double& v : total) v /= steps;
  return total;
}

Tensor to_float_tensor(const Shape& shape, const std::vector<double>& values) {
  std::vector<float> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Tensor(shape, std::move(out));
}

}  // namespace

void PseudoImage::validate() const {
  grid.validate();
  const Shape& s = features.shape();
  if (s.size() != 3 || s[0] != grid.height || s[1] != grid.width) {
    throw Error(ErrorCode::kShapeMismatch, "pseudo image " + shape_to_string(s) +
                                               " does not match grid " +
                                               std::to_string(grid.height) + "x" +
                                               std::to_string(grid.width));
  }
}

std::string to_string(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::kBackprop: return "backprop";
    case AttributionMethod::kIntegratedGradients: return "ig";
    case AttributionMethod::kIgNoInputMult: return "ig-nomult";
  }
  return "unknown";
}

AttributionMethod parse_attribution_method(std::string_view name) {
  if (name == "backprop") return AttributionMethod::kBackprop;
  if (name == "ig") return AttributionMethod::kIntegratedGradients;
  if (name == "ig-nomult" || name == "ig-no-input-mult") return AttributionMethod::kIgNoInputMult;
  throw Error(ErrorCode::kInvalidArgument, "unknown attribution method '" + std::string(name) + "'");
}

AttributionMap backprop_saliency(const ModelGraph& model, const Tensor& image,
                                 const AttributionTarget& target) {
  const AttributionTarget targets[] = {target};
  return std::move(backprop_saliency(model, image, targets).front());
}

std::vector<AttributionMap> backprop_saliency(const ModelGraph& model, const Tensor& image,
                                              std::span<const AttributionTarget> targets) {
  check_image(model, image);
  std::vector<std::size_t> outputs;
  for (const auto& t : targets) {
    check_target(model, t);
    outputs.push_back(t.output_index);
  }
  auto grads = input_gradients(model, image, outputs);
  std::vector<AttributionMap> maps;
  maps.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    maps.push_back({std::move(grads[i].input_grad), targets[i], AttributionMethod::kBackprop, 0, ""});
  }
  return maps;
}

AttributionMap modified_ig(const ModelGraph& model, const Tensor& image, const Tensor& baseline,
                           const IgOptions& options, const AttributionTarget& target) {
  check_image(model, image);
  check_target(model, target);
  const auto avg = path_average_gradient(model, image, baseline, options, target.output_index);
  return {to_float_tensor(image.shape(), avg), target, AttributionMethod::kIgNoInputMult,
          options.steps, options.baseline_id};
}

AttributionMap integrated_gradients(const ModelGraph& model, const Tensor& image,
                                    const Tensor& baseline, const IgOptions& options,
                                    const AttributionTarget& target) {
  AttributionMap map = modified_ig(model, image, baseline, options, target);
  auto values = map.values.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float delta = image[i] - baseline[i];
    values[i] = values[i] * delta;
  }
  map.method = AttributionMethod::kIntegratedGradients;
  return map;
}

AttributionMap attribute(const ModelGraph& model, const Tensor& image, AttributionMethod method,
                         const IgOptions& options, const AttributionTarget& target) {
  switch (method) {
    case AttributionMethod::kBackprop:
      return backprop_saliency(model, image, target);
    case AttributionMethod::kIntegratedGradients:
      return integrated_gradients(model, image, Tensor::zeros(image.shape()), options, target);
    case AttributionMethod::kIgNoInputMult:
      return modified_ig(model, image, Tensor::zeros(image.shape()), options, target);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown attribution method");
}

AggregatedMap aggregate_signed(const AttributionMap& map, Sign sign) {
  const std::size_t h = map.height(), w = map.width(), c = map.channels();
  AggregatedMap out{h, w, std::vector<double>(h * w, 0.0), sign};
  const auto v = map.values.data();
  for (std::size_t p = 0; p < h * w; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double a = v[p * c + k];
      acc += sign == Sign::kPositive ? std::max(a, 0.0) : std::max(-a, 0.0);
    }
    out.values[p] = acc;
  }
  return out;
}

}  // namespace xckit
