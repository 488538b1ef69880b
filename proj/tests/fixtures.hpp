// Seeded generators shared by unit tests and the acceptance runner.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "xckit/attribution.hpp"
#include "xckit/detection.hpp"
#include "xckit/error.hpp"
#include "xckit/features.hpp"
#include "xckit/geometry.hpp"
#include "xckit/model.hpp"
#include "xckit/rng.hpp"
#include "xckit/synth.hpp"

namespace fixture {

inline const std::vector<std::string> kLabels = {"car", "pedestrian", "cyclist"};

inline xckit::ModelGraph random_net(std::uint64_t seed, xckit::Activation act,
                                    const xckit::Shape& shape = {6, 6, 2}) {
  return xckit::build_model(xckit::random_conv_net_spec(shape, seed, act));
}

inline xckit::Box3D random_box(xckit::Rng& rng, double extent = 10.0) {
  xckit::Box3D b;
  b.cx = rng.uniform(-extent, extent);
  b.cy = rng.uniform(-extent, extent);
  b.cz = rng.uniform(-1.0, 1.0);
  b.dx = rng.uniform(0.3, 5.0);
  b.dy = rng.uniform(0.3, 3.0);
  b.dz = rng.uniform(0.5, 2.5);
  b.yaw = xckit::normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
  return b;
}

inline xckit::Box3D jitter(const xckit::Box3D& b, xckit::Rng& rng, double amount) {
  xckit::Box3D p = b;
  p.cx += amount * rng.normal();
  p.cy += amount * rng.normal();
  p.cz += amount * 0.5 * rng.normal();
  p.dx *= 1.0 + amount * rng.uniform(-0.5, 0.5);
  p.dy *= 1.0 + amount * rng.uniform(-0.5, 0.5);
  p.yaw = xckit::normalize_yaw(p.yaw + amount * rng.uniform(-0.5, 0.5));
  return p;
}

struct XcInstance {
  xckit::GridMeta grid;
  xckit::AttributionMap map;
  xckit::Box3D box;
  double a_thresh = 0.1;
  double margin = 0.2;
};

// Random grid, sparse signed map with some values placed exactly on the
// threshold, and a box somewhere over the grid.
inline XcInstance random_xc_instance(xckit::Rng& rng) {
  XcInstance x;
  x.grid.height = 4 + rng.below(28);
  x.grid.width = 4 + rng.below(28);
  x.grid.pixel_size = rng.uniform(0.1, 0.5);
  x.grid.origin_x = rng.uniform(-5, 5);
  x.grid.origin_y = rng.uniform(-5, 5);
  const std::size_t c = 1 + rng.below(4);
  x.a_thresh = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.0, 0.5);
  x.margin = rng.uniform(0.0, 0.5);
  std::vector<float> v(x.grid.pixels() * c, 0.0f);
  const double density = rng.uniform(0.05, 0.8);
  for (auto& e : v) {
    if (!rng.bernoulli(density)) continue;
    const double u = rng.uniform();
    if (u < 0.05) {
      e = static_cast<float>(x.a_thresh);
    } else if (u < 0.1) {
      e = -static_cast<float>(x.a_thresh);
    } else {
      e = static_cast<float>(rng.uniform(-1.0, 1.0) * std::exp(rng.uniform(-3, 1)));
    }
  }
  x.map.values = xckit::Tensor({x.grid.height, x.grid.width, c}, std::move(v));
  const double w = static_cast<double>(x.grid.width) * x.grid.pixel_size;
  const double h = static_cast<double>(x.grid.height) * x.grid.pixel_size;
  x.box.cx = x.grid.origin_x + rng.uniform(-0.2, 1.2) * w;
  x.box.cy = x.grid.origin_y + rng.uniform(-0.2, 1.2) * h;
  x.box.dx = rng.uniform(0.05, 0.8) * w;
  x.box.dy = rng.uniform(0.05, 0.8) * h;
  x.box.dz = 1.5;
  x.box.yaw = xckit::normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
  return x;
}

struct MatchFrame {
  std::vector<xckit::Detection> preds;
  std::vector<xckit::GroundTruth> gts;
};

// Ground truths scattered over a small area, predictions that are a mix of
// jittered copies (with random, sometimes wrong labels) and random clutter.
inline MatchFrame random_match_frame(xckit::Rng& rng) {
  MatchFrame f;
  const std::size_t n_gt = rng.below(6);
  for (std::size_t i = 0; i < n_gt; ++i) {
    f.gts.push_back({"f", random_box(rng, 6.0), kLabels[rng.below(3)]});
  }
  const std::size_t n_pred = rng.below(9);
  for (std::size_t i = 0; i < n_pred; ++i) {
    xckit::Detection d;
    d.frame_id = "f";
    if (!f.gts.empty() && rng.bernoulli(0.6)) {
      const auto& g = f.gts[rng.below(f.gts.size())];
      d.box = jitter(g.box, rng, rng.uniform(0.0, 0.6));
    } else {
      d.box = random_box(rng, 6.0);
    }
    for (const auto& l : kLabels) {
      // Quantized scores make argmax ties and threshold hits common.
      d.scores.push_back({l, std::round(rng.uniform() * 20.0) / 20.0});
    }
    d.label = d.top_label();
    d.n_points = static_cast<std::int64_t>(rng.below(400));
    f.preds.push_back(std::move(d));
  }
  return f;
}

// Rows whose TP label is a noisy AND of two features: a prediction is TP
// when both its score and its concentration clear a cut. Each feature alone
// leaves the other half of the rule unexplained.
inline std::vector<xckit::FeatureRow> noisy_and_rows(std::size_t n, std::uint64_t seed) {
  xckit::Rng rng(seed);
  std::vector<xckit::FeatureRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    xckit::FeatureRow r;
    r.frame_id = "f" + std::to_string(i / 8);
    r.box_index = i % 8;
    r.pred_label = "car";
    const double a = rng.uniform(), b = rng.uniform();
    const double logit = 12.0 * (std::min(a - 0.45, b - 0.45));
    r.is_tp = rng.uniform() < 1.0 / (1.0 + std::exp(-logit));
    r.top_score = a;
    r.xc_c_plus = b;
    r.xc_s_plus = std::clamp(b + 0.25 * rng.normal(), 0.0, 1.0);
    r.xc_c_minus = std::clamp(0.5 * b + 0.5 * rng.uniform(), 0.0, 1.0);
    r.xc_s_minus = rng.uniform();
    r.xc_c_plus_valid = r.xc_s_plus_valid = r.xc_c_minus_valid = r.xc_s_minus_valid = true;
    r.n_points = static_cast<std::int64_t>(rng.below(300));
    r.distance = rng.uniform(2, 60);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Code of the xckit::Error thrown by fn, or nullopt if it returns normally.
template <typename Fn>
std::optional<xckit::ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const xckit::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixture
