#include "xckit/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xckit/error.hpp"
#include "xckit/rng.hpp"

namespace xckit {

namespace {

using nlohmann::json;

Tensor init_or_take(const std::optional<std::vector<float>>& given, Shape shape,
                    std::size_t fan_in, Rng& rng, const std::string& what) {
  const std::size_t n = shape_size(shape);
  if (given) {
    if (given->size() != n) {
      throw Error(ErrorCode::kShapeMismatch,
                  what + " expects " + std::to_string(n) + " values, got " +
                      std::to_string(given->size()));
    }
    return Tensor(std::move(shape), *given);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<float> values(n);
  for (auto& v : values) v = static_cast<float>(rng.uniform(-bound, bound));
  return Tensor(std::move(shape), std::move(values));
}

std::string where(std::size_t index) {
  return "layer " + std::to_string(index);
}

}  // namespace

std::string layer_kind(const Layer& layer) {
  struct Visitor {
    std::string operator()(const DenseLayer&) const { return "dense"; }
    std::string operator()(const Conv2dLayer&) const { return "conv2d"; }
    std::string operator()(const ReluLayer&) const { return "relu"; }
    std::string operator()(const SigmoidLayer&) const { return "sigmoid"; }
    std::string operator()(const FlattenLayer&) const { return "flatten"; }
  };
  return std::visit(Visitor{}, layer);
}

ModelGraph build_model(const ModelSpec& spec) {
  if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0) {
    throw Error(ErrorCode::kShapeMismatch, "input_shape must be non-empty");
  }
  ModelGraph model;
  model.input_shape_ = spec.input_shape;
  model.shapes_.push_back(spec.input_shape);

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    const Shape& in_shape = model.shapes_.back();
    Rng rng(derive_seed(spec.seed, i));

    if (ls.kind == "dense") {
      if (ls.in == 0 || ls.out == 0) {
        throw Error(ErrorCode::kShapeMismatch, where(i) + ": dense needs in, out > 0");
      }
      if (shape_size(in_shape) != ls.in) {
        throw Error(ErrorCode::kShapeMismatch,
                    where(i) + ": dense expects " + std::to_string(ls.in) +
                        " inputs but receives " + shape_to_string(in_shape));
      }
      DenseLayer d;
      d.in = ls.in;
      d.out = ls.out;
      d.weight = init_or_take(ls.weight, {ls.out, ls.in}, ls.in, rng, where(i) + " weight");
      d.bias = init_or_take(ls.bias, {ls.out}, ls.in, rng, where(i) + " bias");
      model.layers_.emplace_back(std::move(d));
      model.shapes_.push_back({ls.out});
    } else if (ls.kind == "conv2d") {
      if (in_shape.size() != 3 || in_shape[2] != ls.in_channels) {
        throw Error(ErrorCode::kShapeMismatch,
                    where(i) + ": conv2d expects (H, W, " +
                        std::to_string(ls.in_channels) + ") input, got " +
                        shape_to_string(in_shape));
      }
      if (ls.kernel == 0 || ls.kernel % 2 == 0 || ls.out_channels == 0) {
        throw Error(ErrorCode::kShapeMismatch,
                    where(i) + ": conv2d kernel must be odd and out_channels > 0");
      }
      Conv2dLayer c;
      c.in_channels = ls.in_channels;
      c.out_channels = ls.out_channels;
      c.kernel = ls.kernel;
      const std::size_t fan_in = ls.kernel * ls.kernel * ls.in_channels;
      c.weight = init_or_take(ls.weight, {ls.kernel, ls.kernel, ls.in_channels, ls.out_channels},
                              fan_in, rng, where(i) + " weight");
      c.bias = init_or_take(ls.bias, {ls.out_channels}, fan_in, rng, where(i) + " bias");
      model.layers_.emplace_back(std::move(c));
      model.shapes_.push_back({in_shape[0], in_shape[1], ls.out_channels});
    } else if (ls.kind == "relu") {
      model.layers_.emplace_back(ReluLayer{});
      model.shapes_.push_back(in_shape);
    } else if (ls.kind == "sigmoid") {
      model.layers_.emplace_back(SigmoidLayer{});
      model.shapes_.push_back(in_shape);
    } else if (ls.kind == "flatten") {
      model.layers_.emplace_back(FlattenLayer{});
      model.shapes_.push_back({shape_size(in_shape)});
    } else {
      throw Error(ErrorCode::kUnknownLayerKind, where(i) + ": '" + ls.kind + "'");
    }
  }
  return model;
}

std::vector<std::string> ModelGraph::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<DenseLayer>(layers_[i]) ||
        std::holds_alternative<Conv2dLayer>(layers_[i])) {
      names.push_back(std::to_string(i) + ".weight");
      names.push_back(std::to_string(i) + ".bias");
    }
  }
  return names;
}

std::vector<const Tensor*> ModelGraph::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& layer : layers_) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    }
  }
  return out;
}

std::vector<Tensor*> ModelGraph::mutable_parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
      out.push_back(&c->weight);
      out.push_back(&c->bias);
    }
  }
  return out;
}

std::size_t ModelGraph::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

ModelSpec to_spec(const ModelGraph& model) {
  ModelSpec spec;
  spec.input_shape = model.input_shape();
  for (const auto& layer : model.layers()) {
    LayerSpec ls;
    ls.kind = layer_kind(layer);
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      ls.in = d->in;
      ls.out = d->out;
      ls.weight = d->weight.values();
      ls.bias = d->bias.values();
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      ls.in_channels = c->in_channels;
      ls.out_channels = c->out_channels;
      ls.kernel = c->kernel;
      ls.weight = c->weight.values();
      ls.bias = c->bias.values();
    }
    spec.layers.push_back(std::move(ls));
  }
  return spec;
}

ModelSpec parse_model_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("model spec: ") + e.what());
  }
  try {
    ModelSpec spec;
    spec.input_shape = doc.at("input_shape").get<Shape>();
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& jl : doc.at("layers")) {
      LayerSpec ls;
      ls.kind = jl.at("kind").get<std::string>();
      ls.in = jl.value("in", std::size_t{0});
      ls.out = jl.value("out", std::size_t{0});
      ls.in_channels = jl.value("in_channels", std::size_t{0});
      ls.out_channels = jl.value("out_channels", std::size_t{0});
      ls.kernel = jl.value("kernel", std::size_t{0});
      if (jl.contains("weight")) ls.weight = jl.at("weight").get<std::vector<float>>();
      if (jl.contains("bias")) ls.bias = jl.at("bias").get<std::vector<float>>();
      spec.layers.push_back(std::move(ls));
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("model spec: ") + e.what());
  }
}

std::string model_spec_to_json(const ModelSpec& spec) {
  json doc;
  doc["format"] = "xckit-model";
  doc["version"] = 1;
  doc["input_shape"] = spec.input_shape;
  doc["seed"] = spec.seed;
  doc["layers"] = json::array();
  for (const auto& ls : spec.layers) {
    json jl;
    jl["kind"] = ls.kind;
    if (ls.kind == "dense") {
      jl["in"] = ls.in;
      jl["out"] = ls.out;
    } else if (ls.kind == "conv2d") {
      jl["in_channels"] = ls.in_channels;
      jl["out_channels"] = ls.out_channels;
      jl["kernel"] = ls.kernel;
    }
    if (ls.weight) jl["weight"] = *ls.weight;
    if (ls.bias) jl["bias"] = *ls.bias;
    doc["layers"].push_back(std::move(jl));
  }
  return doc.dump(1);
}

ModelGraph load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return build_model(parse_model_spec(buffer.str()));
}

void save_model(const std::filesystem::path& path, const ModelGraph& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << model_spec_to_json(to_spec(model)) << '\n';
}

}  // namespace xckit
