#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "xckit/model.hpp"
#include "xckit/tensor.hpp"

namespace xckit {

// Activations recorded by one forward pass. Internally everything is kept in
// float64; acts[0] is the input and acts[i + 1] the output of layer i.
struct Tape {
  std::vector<std::vector<double>> acts;
  const std::vector<double>& output() const { return acts.back(); }
};

Tape record(const ModelGraph& model, std::span<const double> input);

Tensor forward(const ModelGraph& model, const Tensor& input);

// Full-precision forward used by finite-difference probes.
std::vector<double> forward_f64(const ModelGraph& model, std::span<const double> input);

struct GradientResult {
  Tensor input_grad;
  double output_value = 0.0;
};

GradientResult input_gradient(const ModelGraph& model, const Tensor& input,
                              std::size_t target);

// Same as input_gradient for several outputs, sharing one forward pass.
std::vector<GradientResult> input_gradients(const ModelGraph& model, const Tensor& input,
                                            std::span<const std::size_t> targets);

// d output[target] / d input in float64, from an existing tape.
std::vector<double> input_gradient_f64(const ModelGraph& model, const Tape& tape,
                                       std::size_t target);

enum class LossKind { kBceWithLogits };

struct Sample {
  Tensor input;
  float target = 0.0f;
};

// Per-parameter float64 accumulators aligned with ModelGraph::parameters().
using GradientBuffers = std::vector<std::vector<double>>;

GradientBuffers zero_gradients(const ModelGraph& model);

// Mean binary cross entropy over the batch, with the model output read as a
// logit. A trailing sigmoid layer is skipped so the loss sees its input.
// Adds mean-over-batch gradients into `grads`; returns the mean loss.
double accumulate_param_gradients(const ModelGraph& model, std::span<const Sample> batch,
                                  LossKind loss, GradientBuffers& grads);

std::map<std::string, Tensor> param_gradients(const ModelGraph& model,
                                              std::span<const Sample> batch,
                                              LossKind loss);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ModelGraph& model, AdamConfig config);
  void step(ModelGraph& model, const GradientBuffers& grads);
  long steps_taken() const noexcept { return t_; }

 private:
  AdamConfig config_;
  GradientBuffers m_;
  GradientBuffers v_;
  long t_ = 0;
};

}  // namespace xckit
