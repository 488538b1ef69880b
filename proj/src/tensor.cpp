#include "xckit/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "xckit/error.hpp"

namespace xckit {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "shape " + shape_to_string(shape_) + " holds " +
                    std::to_string(shape_size(shape_)) + " values, got " +
                    std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::kNonFinite,
                  "tensor element " + std::to_string(i) + " is not finite");
    }
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0f); }

Tensor Tensor::filled(Shape shape, float value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value));
}

}  // namespace xckit
