#include "xckit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "xckit/autodiff.hpp"
#include "xckit/error.hpp"
#include "xckit/geometry.hpp"
#include "xckit/io.hpp"
#include "xckit/parallel.hpp"
#include "xckit/rng.hpp"

namespace xckit {

namespace {

using nlohmann::json;

constexpr int kMaxPlacementAttempts = 1000;
constexpr int kMaxPerturbAttempts = 100;

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must lie in [0, 1]");
  }
}

struct Source {
  Box3D box;           // box whose enlarged footprint counts as inside
  std::size_t klass;   // index into spec.classes
  bool tp;
  std::size_t gt = 0;  // ground-truth index for TP sources
  std::size_t anchor_row = 0, anchor_col = 0;
};

struct PixelIndex {
  std::size_t row, col;
};

std::optional<PixelIndex> pixel_of(const GridMeta& g, double x, double y) {
  const double c = std::floor((x - g.origin_x) / g.pixel_size);
  const double r = std::floor((y - g.origin_y) / g.pixel_size);
  if (c < 0 || r < 0 || c >= static_cast<double>(g.width) || r >= static_cast<double>(g.height)) {
    return std::nullopt;
  }
  return PixelIndex{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

Box3D random_box(const ClassSpec& cls, double cx, double cy, Rng& rng) {
  Box3D b;
  b.dx = rng.uniform(cls.size_min[0], cls.size_max[0]);
  b.dy = rng.uniform(cls.size_min[1], cls.size_max[1]);
  b.dz = rng.uniform(cls.size_min[2], cls.size_max[2]);
  b.cx = cx;
  b.cy = cy;
  b.cz = b.dz / 2.0;
  b.yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
  return b;
}

Box3D perturb(const Box3D& gt, double iou_floor, Rng& rng) {
  for (int attempt = 0; attempt < kMaxPerturbAttempts; ++attempt) {
    Box3D p = gt;
    p.cx += 0.03 * gt.dx * rng.normal();
    p.cy += 0.03 * gt.dy * rng.normal();
    p.cz += 0.03 * gt.dz * rng.normal();
    p.dx *= 1.0 + rng.uniform(-0.05, 0.05);
    p.dy *= 1.0 + rng.uniform(-0.05, 0.05);
    p.dz *= 1.0 + rng.uniform(-0.05, 0.05);
    p.yaw = normalize_yaw(p.yaw + rng.uniform(-0.05, 0.05));
    if (iou_3d(p, gt) >= iou_floor) return p;
  }
  return gt;
}

// Draws `n` distinct entries, fewer if the pool is smaller.
std::vector<PixelIndex> sample_pixels(std::vector<PixelIndex>& pool, std::size_t n, Rng& rng) {
  std::vector<PixelIndex> out;
  for (std::size_t i = 0; i < n && i < pool.size(); ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(out.size()));
  return out;
}

std::size_t draw_count(std::size_t lo, std::size_t hi, Rng& rng) {
  return lo + rng.below(hi - lo + 1);
}

ClassSpec class_from_json(const json& j, const ClassSpec& fallback) {
  ClassSpec c = fallback;
  c.label = j.at("label").get<std::string>();
  if (j.contains("count")) {
    const auto& n = j["count"];
    if (n.is_array()) {
      c.min_count = n.at(0).get<std::size_t>();
      c.max_count = n.at(1).get<std::size_t>();
    } else {
      c.min_count = c.max_count = n.get<std::size_t>();
    }
  }
  if (j.contains("size_min")) c.size_min = j["size_min"].get<std::array<double, 3>>();
  if (j.contains("size_max")) c.size_max = j["size_max"].get<std::array<double, 3>>();
  c.iou_thresh = j.value("iou_thresh", c.iou_thresh);
  return c;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
      throw Error(ErrorCode::kParseError, "unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace

void SceneSpec::validate() const {
  grid.validate();
  check_fraction(fp_rate, "fp_rate");
  check_fraction(concentration.tp_inside, "concentration.tp_inside");
  check_fraction(concentration.fp_inside, "concentration.fp_inside");
  check_fraction(signal.clutter_density, "signal.clutter_density");
  if (!(points_correlation >= -1.0 && points_correlation <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "points correlation must lie in [-1, 1]");
  }
  if (classes.empty()) throw Error(ErrorCode::kInvalidArgument, "scene needs at least one class");
  for (const auto& c : classes) {
    if (c.label.empty()) throw Error(ErrorCode::kInvalidArgument, "class label is empty");
    if (c.min_count > c.max_count) {
      throw Error(ErrorCode::kInvalidArgument, c.label + ": count range is reversed");
    }
    for (int i = 0; i < 3; ++i) {
      if (!(c.size_min[i] > 0.0 && c.size_min[i] <= c.size_max[i])) {
        throw Error(ErrorCode::kInvalidArgument, c.label + ": bad size range");
      }
    }
    if (!(c.iou_thresh > 0.0 && c.iou_thresh <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, c.label + ": iou_thresh must lie in (0, 1]");
    }
  }
  if (detector.kernel % 2 == 0 || detector.kernel < 3) {
    throw Error(ErrorCode::kInvalidArgument, "detector kernel must be odd and >= 3");
  }
  if (signal.tp_min > signal.tp_max || signal.fp_min > signal.fp_max || signal.neg_min > signal.neg_max) {
    throw Error(ErrorCode::kInvalidArgument, "signal count range is reversed");
  }
  if (!(signal.value_min > detector.threshold && signal.value_min <= signal.value_max)) {
    throw Error(ErrorCode::kInvalidArgument, "signal values must exceed the detector threshold");
  }
  if (!(signal.clutter_max < detector.threshold)) {
    throw Error(ErrorCode::kInvalidArgument, "clutter must stay below the detector threshold");
  }
  if (signal.margin_m < 0.0) throw Error(ErrorCode::kNegativeMargin, "signal margin is negative");
  if (!(points_median > 0.0 && points_log_sd >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "points distribution needs median > 0, log_sd >= 0");
  }
}

SceneSpec default_scene_spec() {
  SceneSpec s;
  s.classes = {
      {"car", 1, 2, {3.6, 1.55, 1.4}, {4.4, 1.9, 1.7}, 0.5},
      {"pedestrian", 1, 1, {0.5, 0.5, 1.5}, {0.9, 0.9, 1.9}, 0.25},
      {"cyclist", 0, 1, {1.5, 0.5, 1.6}, {1.9, 0.7, 1.8}, 0.25},
  };
  return s;
}

SceneSpec parse_scene_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("scene spec: ") + e.what());
  }
  SceneSpec s = default_scene_spec();
  try {
    reject_unknown(j, {"grid", "classes", "fp_rate", "concentration", "detector", "signal", "points",
                       "seed", "frame_prefix"},
                   "scene spec");
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      s.grid.height = g.value("height", s.grid.height);
      s.grid.width = g.value("width", s.grid.width);
      s.grid.origin_x = g.value("origin_x", s.grid.origin_x);
      s.grid.origin_y = g.value("origin_y", s.grid.origin_y);
      s.grid.pixel_size = g.value("pixel_size", s.grid.pixel_size);
    }
    if (j.contains("classes")) {
      const auto defaults = s.classes;
      s.classes.clear();
      for (const auto& c : j["classes"]) {
        ClassSpec base;
        for (const auto& d : defaults) {
          if (d.label == c.at("label").get<std::string>()) base = d;
        }
        s.classes.push_back(class_from_json(c, base));
      }
    }
    s.fp_rate = j.value("fp_rate", s.fp_rate);
    if (j.contains("concentration")) {
      const auto& c = j["concentration"];
      s.concentration.tp_inside = c.value("tp_inside", s.concentration.tp_inside);
      s.concentration.fp_inside = c.value("fp_inside", s.concentration.fp_inside);
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      s.detector.kernel = d.value("kernel", s.detector.kernel);
      s.detector.gain = d.value("gain", s.detector.gain);
      s.detector.threshold = d.value("threshold", s.detector.threshold);
      s.detector.own_weight = d.value("own_weight", s.detector.own_weight);
      s.detector.negative_weight = d.value("negative_weight", s.detector.negative_weight);
      s.detector.other_weight = d.value("other_weight", s.detector.other_weight);
      s.detector.bias = d.value("bias", s.detector.bias);
    }
    if (j.contains("signal")) {
      const auto& g = j["signal"];
      s.signal.tp_min = g.value("tp_min", s.signal.tp_min);
      s.signal.tp_max = g.value("tp_max", s.signal.tp_max);
      s.signal.fp_min = g.value("fp_min", s.signal.fp_min);
      s.signal.fp_max = g.value("fp_max", s.signal.fp_max);
      s.signal.neg_min = g.value("neg_min", s.signal.neg_min);
      s.signal.neg_max = g.value("neg_max", s.signal.neg_max);
      s.signal.value_min = g.value("value_min", s.signal.value_min);
      s.signal.value_max = g.value("value_max", s.signal.value_max);
      s.signal.clutter_density = g.value("clutter_density", s.signal.clutter_density);
      s.signal.clutter_max = g.value("clutter_max", s.signal.clutter_max);
      s.signal.margin_m = g.value("margin_m", s.signal.margin_m);
    }
    if (j.contains("points")) {
      const auto& p = j["points"];
      s.points_correlation = p.value("correlation", s.points_correlation);
      s.points_median = p.value("median", s.points_median);
      s.points_log_sd = p.value("log_sd", s.points_log_sd);
    }
    s.seed = j.value("seed", s.seed);
    s.frame_prefix = j.value("frame_prefix", s.frame_prefix);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string scene_spec_to_json(const SceneSpec& s) {
  json j;
  j["grid"] = {{"height", s.grid.height},       {"width", s.grid.width},
               {"origin_x", s.grid.origin_x},   {"origin_y", s.grid.origin_y},
               {"pixel_size", s.grid.pixel_size}};
  j["classes"] = json::array();
  for (const auto& c : s.classes) {
    j["classes"].push_back({{"label", c.label},
                            {"count", {c.min_count, c.max_count}},
                            {"size_min", c.size_min},
                            {"size_max", c.size_max},
                            {"iou_thresh", c.iou_thresh}});
  }
  j["fp_rate"] = s.fp_rate;
  j["concentration"] = {{"tp_inside", s.concentration.tp_inside},
                        {"fp_inside", s.concentration.fp_inside}};
  j["detector"] = {{"kernel", s.detector.kernel},
                   {"gain", s.detector.gain},
                   {"threshold", s.detector.threshold},
                   {"own_weight", s.detector.own_weight},
                   {"negative_weight", s.detector.negative_weight},
                   {"other_weight", s.detector.other_weight},
                   {"bias", s.detector.bias}};
  j["signal"] = {{"tp_min", s.signal.tp_min},
                 {"tp_max", s.signal.tp_max},
                 {"fp_min", s.signal.fp_min},
                 {"fp_max", s.signal.fp_max},
                 {"neg_min", s.signal.neg_min},
                 {"neg_max", s.signal.neg_max},
                 {"value_min", s.signal.value_min},
                 {"value_max", s.signal.value_max},
                 {"clutter_density", s.signal.clutter_density},
                 {"clutter_max", s.signal.clutter_max},
                 {"margin_m", s.signal.margin_m}};
  j["points"] = {{"correlation", s.points_correlation},
                 {"median", s.points_median},
                 {"log_sd", s.points_log_sd}};
  j["seed"] = s.seed;
  j["frame_prefix"] = s.frame_prefix;
  return j.dump(2);
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  try {
    return parse_scene_spec(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

ModelSpec toy_detector_spec(const SceneSpec& spec) {
  spec.validate();
  const std::size_t k = spec.classes.size();
  const std::size_t c = spec.channels();
  const DetectorSpec& d = spec.detector;
  ModelSpec m;
  m.input_shape = {spec.grid.height, spec.grid.width, c};
  m.seed = spec.seed;

  LayerSpec gate{.kind = "conv2d", .in_channels = c, .out_channels = c, .kernel = 1};
  gate.weight = std::vector<float>(c * c, 0.0f);
  for (std::size_t i = 0; i < c; ++i) (*gate.weight)[i * c + i] = static_cast<float>(d.gain);
  gate.bias = std::vector<float>(c, static_cast<float>(-d.gain * d.threshold));

  const std::size_t ks = d.kernel;
  const double radius = static_cast<double>(ks / 2);
  LayerSpec head{.kind = "conv2d", .in_channels = c, .out_channels = k, .kernel = ks};
  head.weight = std::vector<float>(ks * ks * c * k, 0.0f);
  for (std::size_t ky = 0; ky < ks; ++ky) {
    for (std::size_t kx = 0; kx < ks; ++kx) {
      const double dy = static_cast<double>(ky) - radius, dx = static_cast<double>(kx) - radius;
      if (dy * dy + dx * dx > radius * radius) continue;
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t co = 0; co < k; ++co) {
          double w = -d.other_weight;
          if (ci == co) w = d.own_weight;
          if (ci == k) w = -d.negative_weight;
          (*head.weight)[((ky * ks + kx) * c + ci) * k + co] = static_cast<float>(w);
        }
      }
    }
  }
  head.bias = std::vector<float>(k, static_cast<float>(d.bias));

  m.layers = {gate, {.kind = "relu"}, head, {.kind = "sigmoid"}, {.kind = "flatten"}};
  return m;
}

std::shared_ptr<const ModelGraph> build_toy_detector(const SceneSpec& spec) {
  return std::make_shared<const ModelGraph>(build_model(toy_detector_spec(spec)));
}

SyntheticFrame generate_frame(const SceneSpec& spec, std::size_t index) {
  return generate_frame(spec, index, build_toy_detector(spec));
}

SyntheticFrame generate_frame(const SceneSpec& spec, std::size_t index,
                              std::shared_ptr<const ModelGraph> model) {
  spec.validate();
  const GridMeta& g = spec.grid;
  const std::size_t k = spec.classes.size();
  const std::size_t c = spec.channels();
  if (model->input_shape() != Shape{g.height, g.width, c}) {
    throw Error(ErrorCode::kShapeMismatch, "toy detector does not match the scene grid");
  }
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(index)));

  SyntheticFrame f;
  f.frame_id = spec.frame_prefix;
  {
    std::string num = std::to_string(index);
    f.frame_id += std::string(num.size() < 4 ? 4 - num.size() : 0, '0') + num;
  }
  f.model = model;

  // How many sources of each kind.
  std::vector<std::size_t> object_classes;
  for (std::size_t ci = 0; ci < k; ++ci) {
    const std::size_t n = draw_count(spec.classes[ci].min_count, spec.classes[ci].max_count, rng);
    object_classes.insert(object_classes.end(), n, ci);
  }
  std::vector<std::size_t> fp_classes;
  if (spec.fp_rate >= 1.0) {
    fp_classes = std::move(object_classes);
    object_classes.clear();
  } else {
    const double expected = static_cast<double>(object_classes.size()) * spec.fp_rate / (1.0 - spec.fp_rate);
    std::size_t n_fp = static_cast<std::size_t>(std::floor(expected));
    if (rng.bernoulli(expected - std::floor(expected))) ++n_fp;
    for (std::size_t i = 0; i < n_fp; ++i) fp_classes.push_back(rng.below(k));
  }

  // Anchor placement with non-overlapping receptive fields.
  const std::size_t radius = spec.detector.kernel / 2;
  const double min_sep = 2.0 * static_cast<double>(radius) + 3.0;
  const std::size_t edge = std::min<std::size_t>(4, std::min(g.height, g.width) / 2);
  std::vector<std::pair<double, double>> centers;
  auto place = [&]() -> std::pair<double, double> {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const double row = rng.uniform(static_cast<double>(edge), static_cast<double>(g.height - edge));
      const double col = rng.uniform(static_cast<double>(edge), static_cast<double>(g.width - edge));
      bool ok = true;
      for (const auto& [r, q] : centers) {
        if (std::hypot(row - r, col - q) < min_sep) {
          ok = false;
          break;
        }
      }
      if (ok) {
        centers.emplace_back(row, col);
        return {g.origin_x + col * g.pixel_size, g.origin_y + row * g.pixel_size};
      }
    }
    throw Error(ErrorCode::kPlacementFailure,
                "frame " + f.frame_id + ": could not place " + std::to_string(centers.size() + 1) +
                    " sources after " + std::to_string(kMaxPlacementAttempts) + " attempts");
  };

  std::vector<Source> sources;
  for (std::size_t ci : object_classes) {
    const auto [x, y] = place();
    GroundTruth gt{f.frame_id, random_box(spec.classes[ci], x, y, rng), spec.classes[ci].label};
    Source s;
    s.klass = ci;
    s.tp = true;
    s.gt = f.gts.size();
    s.box = perturb(gt.box, std::min(1.0, spec.classes[ci].iou_thresh + 0.05), rng);
    f.gts.push_back(std::move(gt));
    sources.push_back(s);
  }
  for (std::size_t ci : fp_classes) {
    const auto [x, y] = place();
    Source s;
    s.klass = ci;
    s.tp = false;
    s.box = random_box(spec.classes[ci], x, y, rng);
    sources.push_back(s);
  }

  // Sub-threshold clutter, then planted signal.
  std::vector<float> pixels(g.pixels() * c, 0.0f);
  for (std::size_t p = 0; p < g.pixels(); ++p) {
    if (!rng.bernoulli(spec.signal.clutter_density)) continue;
    for (std::size_t ch = 0; ch < c; ++ch) {
      pixels[p * c + ch] = static_cast<float>(rng.uniform(0.0, spec.signal.clutter_max));
    }
  }

  const double reach = static_cast<double>(radius) - 0.5;
  for (Source& s : sources) {
    const auto anchor = pixel_of(g, s.box.cx, s.box.cy);
    if (!anchor) throw Error(ErrorCode::kPlacementFailure, "prediction center left the grid");
    s.anchor_row = anchor->row;
    s.anchor_col = anchor->col;
    const Mask inside = membership_mask(project_to_bev(enlarge(s.box, spec.signal.margin_m)), g);
    std::vector<PixelIndex> in_pool, out_pool;
    const std::size_t r0 = s.anchor_row > radius ? s.anchor_row - radius : 0;
    const std::size_t c0 = s.anchor_col > radius ? s.anchor_col - radius : 0;
    for (std::size_t r = r0; r < std::min(g.height, s.anchor_row + radius + 1); ++r) {
      for (std::size_t q = c0; q < std::min(g.width, s.anchor_col + radius + 1); ++q) {
        const double dr = static_cast<double>(r) - static_cast<double>(s.anchor_row);
        const double dq = static_cast<double>(q) - static_cast<double>(s.anchor_col);
        if (std::hypot(dr, dq) > reach) continue;
        (inside.at(r, q) ? in_pool : out_pool).push_back({r, q});
      }
    }
    const double frac = s.tp ? spec.concentration.tp_inside : spec.concentration.fp_inside;
    auto plant = [&](std::size_t n, std::size_t channel) {
      std::size_t n_in = 0;
      for (std::size_t i = 0; i < n; ++i) n_in += rng.bernoulli(frac) ? 1 : 0;
      auto chosen = sample_pixels(in_pool, n_in, rng);
      auto more = sample_pixels(out_pool, n - chosen.size(), rng);
      chosen.insert(chosen.end(), more.begin(), more.end());
      for (const auto& px : chosen) {
        pixels[(px.row * g.width + px.col) * c + channel] =
            static_cast<float>(rng.uniform(spec.signal.value_min, spec.signal.value_max));
      }
    };
    std::vector<PixelIndex> in_all = in_pool, out_all = out_pool;
    const std::size_t n_pos = s.tp ? draw_count(spec.signal.tp_min, spec.signal.tp_max, rng)
                                   : draw_count(spec.signal.fp_min, spec.signal.fp_max, rng);
    plant(n_pos, s.klass);
    in_pool = std::move(in_all);
    out_pool = std::move(out_all);
    plant(draw_count(spec.signal.neg_min, spec.signal.neg_max, rng), k);
  }

  f.image = PseudoImage{Tensor({g.height, g.width, c}, std::move(pixels)), g};
  const Tensor out = forward(*model, f.image.features);

  // Latent log point count correlated with TP-ness.
  const double p_tp = 1.0 - spec.fp_rate;
  const double rho = spec.points_correlation;

  std::vector<std::size_t> order(sources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t si : order) {
    const Source& s = sources[si];
    Detection d;
    d.frame_id = f.frame_id;
    d.box = s.box;
    d.label = spec.classes[s.klass].label;
    const std::size_t anchor = s.anchor_row * g.width + s.anchor_col;
    d.anchor = anchor;
    for (std::size_t ci = 0; ci < k; ++ci) {
      d.scores.push_back({spec.classes[ci].label, static_cast<double>(out[anchor * k + ci])});
    }
    if (d.top_class_index() != s.klass) {
      throw Error(ErrorCode::kInvalidArgument,
                  "frame " + f.frame_id + ": toy detector does not rank the planted class first");
    }
    const double t = s.tp ? 1.0 : 0.0;
    const double t_std = (p_tp > 0.0 && p_tp < 1.0) ? (t - p_tp) / std::sqrt(p_tp * (1.0 - p_tp)) : 0.0;
    const double z = rho * t_std + std::sqrt(1.0 - rho * rho) * rng.normal();
    d.n_points = std::llround(spec.points_median * std::exp(spec.points_log_sd * z));
    if (s.tp) {
      if (iou_3d(d.box, f.gts[s.gt].box) < spec.classes[s.klass].iou_thresh) {
        throw Error(ErrorCode::kInvalidArgument, "TP perturbation fell below the IoU threshold");
      }
    } else {
      for (const auto& gt : f.gts) {
        if (iou_3d(d.box, gt.box) >= spec.classes[s.klass].iou_thresh) {
          throw Error(ErrorCode::kInvalidArgument, "planted FP overlaps a ground truth");
        }
      }
    }
    f.preds.push_back(std::move(d));
    f.planted_tp.push_back(s.tp);
  }
  return f;
}

ClassCounts Manifest::totals() const {
  ClassCounts t;
  for (const auto& [label, c] : per_class) {
    t.gt += c.gt;
    t.tp += c.tp;
    t.fp += c.fp;
  }
  return t;
}

double Manifest::fp_fraction() const {
  const ClassCounts t = totals();
  return t.tp + t.fp == 0 ? 0.0 : static_cast<double>(t.fp) / static_cast<double>(t.tp + t.fp);
}

Manifest count_frame(const SyntheticFrame& frame) {
  Manifest m;
  m.frames = 1;
  for (const auto& gt : frame.gts) m.per_class[gt.label].gt++;
  for (std::size_t i = 0; i < frame.preds.size(); ++i) {
    auto& c = m.per_class[frame.preds[i].label];
    (frame.planted_tp[i] ? c.tp : c.fp)++;
  }
  m.per_frame.push_back(m.per_class);
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  auto counts = [](const std::map<std::string, ClassCounts>& per) {
    json j = json::object();
    for (const auto& [label, c] : per) j[label] = {{"gt", c.gt}, {"tp", c.tp}, {"fp", c.fp}};
    return j;
  };
  const ClassCounts t = m.totals();
  json j;
  j["frames"] = m.frames;
  j["classes"] = counts(m.per_class);
  j["totals"] = {{"gt", t.gt}, {"tp", t.tp}, {"fp", t.fp}};
  j["fp_fraction"] = m.fp_fraction();
  j["per_frame"] = json::array();
  for (const auto& f : m.per_frame) j["per_frame"].push_back(counts(f));
  return j.dump(2);
}

Benchmark generate_benchmark(const SceneSpec& spec, std::size_t n_frames, unsigned jobs) {
  if (n_frames == 0) throw Error(ErrorCode::kInvalidArgument, "benchmark needs at least one frame");
  Benchmark b;
  b.model = build_toy_detector(spec);
  b.frames.resize(n_frames);
  parallel_for(n_frames, jobs, [&](std::size_t i) { b.frames[i] = generate_frame(spec, i, b.model); });
  b.manifest.frames = n_frames;
  for (const auto& f : b.frames) {
    const Manifest one = count_frame(f);
    for (const auto& [label, c] : one.per_class) {
      auto& t = b.manifest.per_class[label];
      t.gt += c.gt;
      t.tp += c.tp;
      t.fp += c.fp;
    }
    b.manifest.per_frame.push_back(one.per_frame.front());
  }
  return b;
}

ModelSpec random_conv_net_spec(const Shape& input_shape, std::uint64_t seed, Activation activation,
                               std::size_t hidden_channels, std::size_t outputs) {
  if (input_shape.size() != 3) throw Error(ErrorCode::kShapeMismatch, "conv net needs (H, W, C) input");
  const std::string act = activation == Activation::kRelu ? "relu" : "sigmoid";
  const std::size_t cin = input_shape[2];
  const std::size_t hw = input_shape[0] * input_shape[1];
  ModelSpec m;
  m.input_shape = input_shape;
  m.seed = seed;
  m.layers = {
      {.kind = "conv2d", .in_channels = cin, .out_channels = hidden_channels, .kernel = 3},
      {.kind = act},
      {.kind = "conv2d", .in_channels = hidden_channels, .out_channels = hidden_channels, .kernel = 3},
      {.kind = act},
      {.kind = "dense", .in = hw * hidden_channels, .out = outputs},
  };
  return m;
}

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  std::vector<float> v(shape_size(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return Tensor(shape, std::move(v));
}

}  // namespace xckit
