#include "xckit/detection.hpp"

#include <cmath>

namespace xckit {

std::optional<std::size_t> Detection::top_class_index() const {
  if (scores.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].score > scores[best].score) best = i;
  }
  return best;
}

const std::string& Detection::top_label() const {
  const auto idx = top_class_index();
  return idx ? scores[*idx].label : label;
}

double Detection::top_score() const {
  const auto idx = top_class_index();
  return idx ? scores[*idx].score : 0.0;
}

double Detection::distance_or_norm() const {
  if (distance) return *distance;
  return std::sqrt(box.cx * box.cx + box.cy * box.cy + box.cz * box.cz);
}

}  // namespace xckit
