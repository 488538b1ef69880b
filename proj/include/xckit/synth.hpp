#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xckit/attribution.hpp"
#include "xckit/detection.hpp"
#include "xckit/model.hpp"

namespace xckit {

struct ClassSpec {
  std::string label;
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  std::array<double, 3> size_min{1, 1, 1};  // dx, dy, dz in meters
  std::array<double, 3> size_max{1, 1, 1};
  double iou_thresh = 0.5;  // TP perturbations stay above this
};

// Fraction of a source's signal pixels placed inside its enlarged box.
struct ConcentrationProfile {
  double tp_inside = 0.9;
  double fp_inside = 0.3;
};

// Shape of the fixed toy detector: a 1x1 gate (gain * (x - threshold)) per
// channel, then a disk-shaped k x k aggregation into one score per class.
struct DetectorSpec {
  std::size_t kernel = 41;
  double gain = 20.0;
  double threshold = 0.95;
  double own_weight = 0.1;
  double negative_weight = 0.1;
  double other_weight = 0.1;
  double bias = -3.0;
};

// Per-source pixel counts and values.
struct SignalSpec {
  std::size_t tp_min = 20, tp_max = 28;
  std::size_t fp_min = 14, fp_max = 22;
  std::size_t neg_min = 2, neg_max = 6;
  double value_min = 1.0, value_max = 1.1;
  // Fraction of pixels carrying sub-threshold clutter in every channel.
  double clutter_density = 0.05;
  double clutter_max = 0.5;
  double margin_m = 0.2;
};

struct SceneSpec {
  GridMeta grid{160, 160, 0.0, -12.8, 0.16};
  std::vector<ClassSpec> classes;
  double fp_rate = 0.25;
  ConcentrationProfile concentration;
  DetectorSpec detector;
  SignalSpec signal;
  // Correlation between the latent log point count and TP-ness.
  double points_correlation = 0.4;
  double points_median = 100.0;
  double points_log_sd = 1.0;
  std::uint64_t seed = 0;
  std::string frame_prefix = "frame_";

  void validate() const;
  std::size_t channels() const { return classes.size() + 1; }
};

// Car / pedestrian / cyclist defaults.
SceneSpec default_scene_spec();

SceneSpec parse_scene_spec(std::string_view json_text);
std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec load_scene_spec(const std::filesystem::path& path);

ModelSpec toy_detector_spec(const SceneSpec& spec);
std::shared_ptr<const ModelGraph> build_toy_detector(const SceneSpec& spec);

struct SyntheticFrame {
  std::string frame_id;
  PseudoImage image;
  std::vector<GroundTruth> gts;
  std::vector<Detection> preds;
  std::vector<bool> planted_tp;  // per prediction
  std::shared_ptr<const ModelGraph> model;
};

// Deterministic in (spec.seed, index).
SyntheticFrame generate_frame(const SceneSpec& spec, std::size_t index,
                              std::shared_ptr<const ModelGraph> model);
SyntheticFrame generate_frame(const SceneSpec& spec, std::size_t index = 0);

struct ClassCounts {
  std::size_t gt = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct Manifest {
  std::size_t frames = 0;
  std::map<std::string, ClassCounts> per_class;
  std::vector<std::map<std::string, ClassCounts>> per_frame;

  ClassCounts totals() const;
  double fp_fraction() const;
};

Manifest count_frame(const SyntheticFrame& frame);
std::string manifest_to_json(const Manifest& m);

struct Benchmark {
  std::shared_ptr<const ModelGraph> model;
  std::vector<SyntheticFrame> frames;
  Manifest manifest;
};

Benchmark generate_benchmark(const SceneSpec& spec, std::size_t n_frames, unsigned jobs = 1);

// Small random conv nets for testing attribution code.
enum class Activation { kRelu, kSigmoid };

ModelSpec random_conv_net_spec(const Shape& input_shape, std::uint64_t seed,
                               Activation activation, std::size_t hidden_channels = 4,
                               std::size_t outputs = 3);

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo, double hi);

}  // namespace xckit
