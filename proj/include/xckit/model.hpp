#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xckit/tensor.hpp"

namespace xckit {

// Fully connected layer; consumes any input with `in` elements (implicit
// flatten) and produces a rank-1 output of `out` elements.
// weight is [out, in], bias is [out].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Tensor weight;
  Tensor bias;
};

// 2-D convolution over (y, x, c) inputs, stride 1, zero padding that keeps
// the spatial size. kernel is odd. weight is [k, k, in_channels, out_channels].
struct Conv2dLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  Tensor weight;
  Tensor bias;
};

struct ReluLayer {};
struct SigmoidLayer {};
struct FlattenLayer {};

using Layer =
    std::variant<DenseLayer, Conv2dLayer, ReluLayer, SigmoidLayer, FlattenLayer>;

std::string layer_kind(const Layer& layer);

// Declarative layer description; parameters left empty are drawn from the
// model seed as uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
struct LayerSpec {
  std::string kind;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::optional<std::vector<float>> weight;
  std::optional<std::vector<float>> bias;
};

struct ModelSpec {
  Shape input_shape;
  std::uint64_t seed = 0;
  std::vector<LayerSpec> layers;
};

// Validated feed-forward model. Treat as immutable when shared; trainers
// own a private copy and write through mutable_parameters().
class ModelGraph {
 public:
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  // shapes()[i] is the input shape of layer i; shapes().back() is the output.
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }

  std::vector<std::string> parameter_names() const;
  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> mutable_parameters();
  std::size_t parameter_count() const;

 private:
  friend ModelGraph build_model(const ModelSpec& spec);
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
};

ModelGraph build_model(const ModelSpec& spec);

// Inverse of build_model with every parameter inlined.
ModelSpec to_spec(const ModelGraph& model);

ModelSpec parse_model_spec(std::string_view json_text);
std::string model_spec_to_json(const ModelSpec& spec);
ModelGraph load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelGraph& model);

}  // namespace xckit
