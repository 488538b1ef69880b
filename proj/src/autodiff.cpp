#include "xckit/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "xckit/error.hpp"

namespace xckit {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Numerically stable log(1 + exp(z)).
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void dense_forward(const DenseLayer& d, std::span<const double> in, std::vector<double>& out) {
  out.assign(d.out, 0.0);
  const auto w = d.weight.data();
  for (std::size_t o = 0; o < d.out; ++o) {
    double acc = d.bias[o];
    const float* row = w.data() + o * d.in;
    for (std::size_t i = 0; i < d.in; ++i) acc += static_cast<double>(row[i]) * in[i];
    out[o] = acc;
  }
}

// Scatter formulation: zero inputs are skipped, which makes sparse BEV
// grids cheap.
void conv_forward(const Conv2dLayer& c, const Shape& in_shape, std::span<const double> in,
                  std::vector<double>& out) {
  const std::size_t h = in_shape[0], w = in_shape[1], cin = c.in_channels,
                    cout = c.out_channels, k = c.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  out.resize(h * w * cout);
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t o = 0; o < cout; ++o) out[p * cout + o] = c.bias[o];
  }
  const float* weight = c.weight.data().data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* px = in.data() + (y * w + x) * cin;
      if (std::all_of(px, px + cin, [](double v) { return v == 0.0; })) continue;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(ky) + pad;
        if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(kx) + pad;
          if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(w)) continue;
          double* po = out.data() + (static_cast<std::size_t>(oy) * w + static_cast<std::size_t>(ox)) * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = px[ci];
            if (v == 0.0) continue;
            const float* wk = weight + ((ky * k + kx) * cin + ci) * cout;
            for (std::size_t o = 0; o < cout; ++o) po[o] += v * wk[o];
          }
        }
      }
    }
  }
}

// Output positions with zero upstream gradient are skipped, so a one-hot
// target only touches its receptive field.
void conv_backward(const Conv2dLayer& c, const Shape& in_shape, std::span<const double> in,
                   std::span<const double> grad_out, std::vector<double>& grad_in,
                   std::vector<double>* grad_w, std::vector<double>* grad_b) {
  const std::size_t h = in_shape[0], w = in_shape[1], cin = c.in_channels,
                    cout = c.out_channels, k = c.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  grad_in.assign(h * w * cin, 0.0);
  const float* weight = c.weight.data().data();
  for (std::size_t oy = 0; oy < h; ++oy) {
    for (std::size_t ox = 0; ox < w; ++ox) {
      const double* g = grad_out.data() + (oy * w + ox) * cout;
      if (std::all_of(g, g + cout, [](double v) { return v == 0.0; })) continue;
      if (grad_b) {
        for (std::size_t o = 0; o < cout; ++o) (*grad_b)[o] += g[o];
      }
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy) + static_cast<std::ptrdiff_t>(ky) - pad;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox) + static_cast<std::ptrdiff_t>(kx) - pad;
          if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t pix = (static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * cin;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const std::size_t widx = ((ky * k + kx) * cin + ci) * cout;
            const float* wk = weight + widx;
            double acc = 0.0;
            for (std::size_t o = 0; o < cout; ++o) acc += g[o] * wk[o];
            grad_in[pix + ci] += acc;
            if (grad_w) {
              const double v = in[pix + ci];
              if (v != 0.0) {
                for (std::size_t o = 0; o < cout; ++o) (*grad_w)[widx + o] += v * g[o];
              }
            }
          }
        }
      }
    }
  }
}

// Index of each layer's first parameter in ModelGraph::parameters(), or -1.
std::vector<int> parameter_slots(const ModelGraph& model) {
  std::vector<int> slots;
  int next = 0;
  for (const auto& layer : model.layers()) {
    if (std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer)) {
      slots.push_back(next);
      next += 2;
    } else {
      slots.push_back(-1);
    }
  }
  return slots;
}

// Propagates `grad` (d loss / d acts[top]) down to the input. Parameter
// gradients are added into `pgrads` when given.
std::vector<double> backward(const ModelGraph& model, const Tape& tape, std::size_t top,
                             std::vector<double> grad, GradientBuffers* pgrads) {
  const auto slots = pgrads ? parameter_slots(model) : std::vector<int>{};
  std::vector<double> next;
  for (std::size_t i = top; i-- > 0;) {
    const Layer& layer = model.layers()[i];
    const std::vector<double>& in = tape.acts[i];
    const std::vector<double>& out = tape.acts[i + 1];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      next.assign(d->in, 0.0);
      const auto w = d->weight.data();
      std::vector<double>* gw = pgrads ? &(*pgrads)[static_cast<std::size_t>(slots[i])] : nullptr;
      std::vector<double>* gb = pgrads ? &(*pgrads)[static_cast<std::size_t>(slots[i]) + 1] : nullptr;
      for (std::size_t o = 0; o < d->out; ++o) {
        const double g = grad[o];
        if (g == 0.0) continue;
        const float* row = w.data() + o * d->in;
        for (std::size_t j = 0; j < d->in; ++j) next[j] += g * row[j];
        if (gw) {
          double* gwr = gw->data() + o * d->in;
          for (std::size_t j = 0; j < d->in; ++j) gwr[j] += g * in[j];
          (*gb)[o] += g;
        }
      }
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      std::vector<double>* gw = pgrads ? &(*pgrads)[static_cast<std::size_t>(slots[i])] : nullptr;
      std::vector<double>* gb = pgrads ? &(*pgrads)[static_cast<std::size_t>(slots[i]) + 1] : nullptr;
      conv_backward(*c, model.shapes()[i], in, grad, next, gw, gb);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      next.resize(grad.size());
      for (std::size_t j = 0; j < grad.size(); ++j) next[j] = in[j] > 0.0 ? grad[j] : 0.0;
    } else if (std::holds_alternative<SigmoidLayer>(layer)) {
      next.resize(grad.size());
      for (std::size_t j = 0; j < grad.size(); ++j) next[j] = grad[j] * out[j] * (1.0 - out[j]);
    } else {
      next = grad;
    }
    grad.swap(next);
  }
  return grad;
}

void check_input(const ModelGraph& model, const Shape& shape) {
  if (shape != model.input_shape()) {
    throw Error(ErrorCode::kShapeMismatch, "model expects input " +
                                               shape_to_string(model.input_shape()) +
                                               ", got " + shape_to_string(shape));
  }
}

std::vector<double> widen(std::span<const float> values) {
  return {values.begin(), values.end()};
}

Tensor narrow(const Shape& shape, std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(values[i]);
  return Tensor(shape, std::move(out));
}

}  // namespace

Tape record(const ModelGraph& model, std::span<const double> input) {
  if (input.size() != shape_size(model.input_shape())) {
    throw Error(ErrorCode::kShapeMismatch,
                "model expects " + std::to_string(shape_size(model.input_shape())) +
                    " input values, got " + std::to_string(input.size()));
  }
  Tape tape;
  tape.acts.reserve(model.layers().size() + 1);
  tape.acts.emplace_back(input.begin(), input.end());
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    const std::vector<double>& in = tape.acts.back();
    std::vector<double> out;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      dense_forward(*d, in, out);
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      conv_forward(*c, model.shapes()[i], in, out);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      out.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
    } else if (std::holds_alternative<SigmoidLayer>(layer)) {
      out.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) out[j] = sigmoid(in[j]);
    } else {
      out = in;
    }
    tape.acts.push_back(std::move(out));
  }
  return tape;
}

std::vector<double> forward_f64(const ModelGraph& model, std::span<const double> input) {
  return record(model, input).output();
}

Tensor forward(const ModelGraph& model, const Tensor& input) {
  check_input(model, input.shape());
  return narrow(model.output_shape(), forward_f64(model, widen(input.data())));
}

std::vector<double> input_gradient_f64(const ModelGraph& model, const Tape& tape,
                                       std::size_t target) {
  const std::size_t n_out = tape.output().size();
  if (target >= n_out) {
    throw Error(ErrorCode::kTargetOutOfRange, "target " + std::to_string(target) +
                                                  " but model has " + std::to_string(n_out) +
                                                  " outputs");
  }
  std::vector<double> seed(n_out, 0.0);
  seed[target] = 1.0;
  return backward(model, tape, model.layers().size(), std::move(seed), nullptr);
}

GradientResult input_gradient(const ModelGraph& model, const Tensor& input, std::size_t target) {
  const std::size_t targets[] = {target};
  return std::move(input_gradients(model, input, targets).front());
}

std::vector<GradientResult> input_gradients(const ModelGraph& model, const Tensor& input,
                                            std::span<const std::size_t> targets) {
  check_input(model, input.shape());
  const Tape tape = record(model, widen(input.data()));
  std::vector<GradientResult> out;
  out.reserve(targets.size());
  for (std::size_t t : targets) {
    const auto g = input_gradient_f64(model, tape, t);
    out.push_back({narrow(model.input_shape(), g), tape.output()[t]});
  }
  return out;
}

GradientBuffers zero_gradients(const ModelGraph& model) {
  GradientBuffers g;
  for (const Tensor* p : model.parameters()) g.emplace_back(p->size(), 0.0);
  return g;
}

double accumulate_param_gradients(const ModelGraph& model, std::span<const Sample> batch,
                                  LossKind loss, GradientBuffers& grads) {
  (void)loss;  // only kBceWithLogits exists
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "param_gradients needs samples");
  const auto& layers = model.layers();
  const std::size_t top =
      !layers.empty() && std::holds_alternative<SigmoidLayer>(layers.back()) ? layers.size() - 1
                                                                             : layers.size();
  if (shape_size(model.shapes()[top]) != 1) {
    throw Error(ErrorCode::kShapeMismatch, "binary cross entropy needs a scalar logit, model gives " +
                                               shape_to_string(model.shapes()[top]));
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> input;
  for (const Sample& s : batch) {
    check_input(model, s.input.shape());
    if (s.target != 0.0f && s.target != 1.0f) {
      throw Error(ErrorCode::kInvalidArgument, "binary targets must be 0 or 1");
    }
    input.assign(s.input.data().begin(), s.input.data().end());
    const Tape tape = record(model, input);
    const double logit = tape.acts[top][0];
    total += softplus(logit) - logit * s.target;
    backward(model, tape, top, {(sigmoid(logit) - s.target) * scale}, &grads);
  }
  return total * scale;
}

std::map<std::string, Tensor> param_gradients(const ModelGraph& model,
                                              std::span<const Sample> batch, LossKind loss) {
  GradientBuffers grads = zero_gradients(model);
  accumulate_param_gradients(model, batch, loss, grads);
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.emplace(names[i], narrow(params[i]->shape(), grads[i]));
  }
  return out;
}

Adam::Adam(const ModelGraph& model, AdamConfig config)
    : config_(config), m_(zero_gradients(model)), v_(zero_gradients(model)) {}

void Adam::step(ModelGraph& model, const GradientBuffers& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto params = model.mutable_parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[p][i];
      m_[p][i] = config_.beta1 * m_[p][i] + (1.0 - config_.beta1) * g;
      v_[p][i] = config_.beta2 * v_[p][i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m_[p][i] / c1;
      const double vhat = v_[p][i] / c2;
      values[i] = static_cast<float>(values[i] - config_.learning_rate * mhat /
                                                     (std::sqrt(vhat) + config_.epsilon));
    }
  }
}

}  // namespace xckit
