#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xckit/geometry.hpp"

namespace xckit {

struct ClassScore {
  std::string label;
  double score = 0.0;

  friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct Detection {
  std::string frame_id;
  Box3D box;
  std::string label;               // informational; matching uses top_label()
  std::vector<ClassScore> scores;  // per-class sigmoid scores, in class order
  std::int64_t n_points = 0;
  std::optional<double> distance;
  std::optional<std::size_t> anchor;  // flat model output row for this box

  // argmax over scores (first on ties); falls back to `label`.
  const std::string& top_label() const;
  double top_score() const;
  std::optional<std::size_t> top_class_index() const;
  // Stored distance, or the 3-D norm of the box center.
  double distance_or_norm() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  std::string frame_id;
  Box3D box;
  std::string label;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace xckit
