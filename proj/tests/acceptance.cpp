// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xckit/attribution.hpp"
#include "xckit/autodiff.hpp"
#include "xckit/error.hpp"
#include "xckit/features.hpp"
#include "xckit/geometry.hpp"
#include "xckit/io.hpp"
#include "xckit/matching.hpp"
#include "xckit/meta.hpp"
#include "xckit/metrics.hpp"
#include "xckit/parallel.hpp"
#include "xckit/synth.hpp"
#include "xckit/xc.hpp"

using namespace xckit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> as_double(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

double sum_of(const AttributionMap& map) {
  double s = 0;
  for (float v : map.values.data()) s += v;
  return s;
}

// ---- 1. IG completeness ----

Outcome ig_completeness() {
  const Shape shape{8, 8, 3};
  const std::vector<std::uint32_t> ladder = {8, 32, 128, 512};
  bool ok = true;
  double worst256 = 0;
  std::ostringstream trail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelGraph m = fixture::random_net(seed, Activation::kSigmoid, shape);
    const Tensor x = random_tensor(shape, 1000 + seed, -1, 1);
    const Tensor base = Tensor::zeros(shape);
    // The output that moves most between baseline and input.
    const auto fx = forward_f64(m, as_double(x));
    const auto fb = forward_f64(m, as_double(base));
    std::size_t target = 0;
    for (std::size_t k = 1; k < fx.size(); ++k) {
      if (std::abs(fx[k] - fb[k]) > std::abs(fx[target] - fb[target])) target = k;
    }
    const double delta = fx[target] - fb[target];
    auto rel_err = [&](std::uint32_t steps) {
      IgOptions o;
      o.steps = steps;
      const auto ig = integrated_gradients(m, x, base, o, {0, 0, target});
      return std::abs(sum_of(ig) - delta) / std::abs(delta);
    };
    const double e256 = rel_err(256);
    worst256 = std::max(worst256, e256);
    ok = ok && e256 < 1e-3;
    double prev = INFINITY;
    trail << " net" << seed << "[";
    for (auto s : ladder) {
      const double e = rel_err(s);
      trail << fmt("%.1e", e) << (s == ladder.back() ? "]" : " ");
      ok = ok && e < prev;
      prev = e;
    }
  }
  return {ok, fmt("max rel err @256 = %.2e; ladder 8/32/128/512:", worst256) + trail.str()};
}

// ---- 2. IG exactness on linear models ----

Outcome ig_linear() {
  const Shape shape{5, 4, 3};
  ModelSpec spec;
  spec.input_shape = shape;
  spec.seed = 77;
  spec.layers = {{.kind = "dense", .in = 60, .out = 2}};
  const ModelGraph m = build_model(spec);
  const auto* dense = std::get_if<DenseLayer>(&m.layers()[0]);
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Tensor x = random_tensor(shape, seed, -2, 2);
    for (std::uint32_t steps : {1u, 2u, 3u, 7u, 64u, 300u}) {
      for (std::size_t out = 0; out < 2; ++out) {
        IgOptions o;
        o.steps = steps;
        const auto ig = integrated_gradients(m, x, Tensor::zeros(shape), o, {0, out, out});
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double want = static_cast<double>(dense->weight[out * 60 + i]) * x[i];
          worst = std::max(worst, std::abs(ig.values[i] - want));
        }
      }
    }
  }
  return {worst <= 1e-6, fmt("max |IG - w*x| = %.2e over steps {1,2,3,7,64,300}", worst)};
}

// ---- 3. Modified IG identity ----

Outcome modified_ig_identity() {
  const Shape shape{6, 5, 3};
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto act = seed % 2 ? Activation::kRelu : Activation::kSigmoid;
    const ModelGraph m = fixture::random_net(seed, act, shape);
    const Tensor x = random_tensor(shape, seed + 10, -1, 1);
    const Tensor base = random_tensor(shape, seed + 20, -0.3, 0.3);
    IgOptions o;
    o.steps = 24;
    const AttributionTarget t{0, seed % 3, seed % 3};
    const auto mod = modified_ig(m, x, base, o, t);
    const auto ig = integrated_gradients(m, x, base, o, t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double prod = static_cast<double>(mod.values[i]) * static_cast<float>(x[i] - base[i]);
      worst = std::max(worst, std::abs(prod - ig.values[i]));
    }
  }
  return {worst <= 1e-9, fmt("max |mod*(x-x') - IG| = %.2e", worst)};
}

// ---- 4. Gradient oracle ----

Outcome gradient_oracle() {
  const Shape shape{6, 6, 2};
  double worst = 0;
  std::size_t probes = 0, rejected = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto act = seed <= 3 ? Activation::kSigmoid : Activation::kRelu;
    const ModelGraph m = fixture::random_net(100 + seed, act, shape);
    const Tensor x = random_tensor(shape, 200 + seed, -1, 1);
    const auto xd = as_double(x);
    Rng rng(300 + seed);
    std::size_t taken = 0;
    while (taken < 50) {
      const std::size_t target = rng.below(3), i = rng.below(x.size());
      const auto fd = oracle::central_difference(m, xd, target, i, 0x1p-14);
      if (!fd.smooth) {
        ++rejected;
        continue;
      }
      const auto map = backprop_saliency(m, x, {0, target, target});
      const double g = map.values[i];
      const double denom = std::max({std::abs(g), std::abs(fd.value), 1e-12});
      worst = std::max(worst, std::abs(g - fd.value) / denom);
      ++taken;
      ++probes;
    }
  }
  return {worst < 1e-4, fmt("%zu probes (%zu kink-crossing draws rejected), max rel err %.2e", probes,
                            rejected, worst)};
}

// ---- 5. XC oracle equivalence ----

Outcome xc_oracle() {
  Rng rng(4242);
  std::size_t mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixture::random_xc_instance(rng);
    const XcScores got = xc_scores(inst.map, inst.box, inst.grid, {inst.a_thresh, inst.margin});
    for (bool positive : {true, false}) {
      const auto& g = positive ? got.positive : got.negative;
      const auto o = oracle::xc_bruteforce(inst.map, inst.box, inst.grid, inst.a_thresh, inst.margin, positive);
      if (g.s != o.s || g.S != o.S || g.c != o.c || g.C != o.C || g.xc_s != o.xc_s || g.xc_c != o.xc_c) {
        ++mismatches;
      }
    }
  }
  // 4x4 single channel, box over the 2x2 block at the origin.
  const GridMeta grid{4, 4, 0.0, 0.0, 1.0};
  const Box3D box{1.0, 1.0, 0.5, 1.6, 1.6, 1.0, 0.0};
  std::vector<float> v(16, 0.0f);
  v[0] = 0.5f;
  v[1] = 0.3f;
  v[4] = 0.2f;
  v[5] = 0.05f;
  v[15] = 0.4f;
  AttributionMap map;
  map.values = Tensor({4, 4, 1}, v);
  const XcScores hand = xc_scores(map, box, grid, XcConfig{0.1, 0.2});
  const bool hand_ok = hand.positive.c == 3 && hand.positive.C == 4 && hand.positive.xc_c == 0.75 &&
                       hand.positive.xc_s == 1.0 / 1.4;
  return {mismatches == 0 && hand_ok,
          fmt("%zu/400 sign records differ from oracle; 4x4 case xc_s+ = %.17g (1/1.4 = %.17g), xc_c+ = %g",
              mismatches, hand.positive.xc_s.value_or(NAN), 1.0 / 1.4, hand.positive.xc_c.value_or(NAN))};
}

// ---- 6. Metric oracles ----

Outcome metric_oracles() {
  Rng rng(6006);
  double worst_auroc = 0;
  std::size_t ks_mismatch = 0;
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + rng.below(499);
    std::vector<ScoredSample> v;
    std::vector<oracle::Labeled> lv;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pos = i == 0 || (i != 1 && rng.bernoulli(0.3));
      double s = rng.normal() + (pos ? 0.8 : 0.0);
      if (t % 2) s = std::round(s * 3) / 3;
      v.push_back({s, pos});
      lv.push_back({s, pos});
    }
    worst_auroc = std::max(worst_auroc, std::abs(auroc(v) - oracle::auroc_pairwise(lv)));
    std::vector<double> a, b;
    for (const auto& s : v) (s.is_positive ? a : b).push_back(s.score);
    if (ks_statistic(a, b) != oracle::ks_bruteforce(a, b)) ++ks_mismatch;
  }
  // 100k random scores with exactly 23.2% positives.
  std::vector<ScoredSample> r(100000);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = {rng.uniform(), i < 23200};
  const MetricReport rep = evaluate(r);
  const bool ok = worst_auroc <= 1e-9 && ks_mismatch == 0 && std::abs(rep.auroc - 0.5) <= 0.01 &&
                  std::abs(rep.aupr - 0.232) <= 0.01;
  return {ok, fmt("max |auroc - pairwise| = %.1e, ks mismatches %zu; random baseline auroc %.4f aupr %.4f",
                  worst_auroc, ks_mismatch, rep.auroc, rep.aupr)};
}

// ---- 7. Synthetic benchmark ordering ----

std::vector<FrameInput> benchmark_inputs(const Benchmark& b) {
  std::vector<FrameInput> inputs(b.frames.size());
  parallel_for(b.frames.size(), default_jobs(), [&](std::size_t fi) {
    const auto& f = b.frames[fi];
    FrameInput& in = inputs[fi];
    in.grid = f.image.grid;
    in.preds = f.preds;
    in.gts = f.gts;
    const std::size_t k = f.preds.empty() ? 0 : f.preds[0].scores.size();
    std::vector<AttributionTarget> targets;
    for (std::size_t i = 0; i < f.preds.size(); ++i) {
      const std::size_t cls = *f.preds[i].top_class_index();
      targets.push_back({i, cls, *f.preds[i].anchor * k + cls});
    }
    in.maps.resize(f.preds.size());
    for (auto& m : backprop_saliency(*b.model, f.image.features, targets)) in.maps[m.target.box_index] = std::move(m);
  });
  return inputs;
}

Outcome benchmark_ordering() {
  const auto t0 = Clock::now();
  SceneSpec spec = default_scene_spec();
  spec.seed = 2023;
  const Benchmark b = generate_benchmark(spec, 200, default_jobs());
  const auto inputs = benchmark_inputs(b);
  const auto rows = build_feature_dataset(inputs, XcConfig{}, MatchConfig{});
  std::map<std::string, double> au;
  for (const char* f : {"xc_c_plus", "xc_c_minus", "xc_s_plus", "xc_s_minus", "n_points", "random"}) {
    au[f] = evaluate_feature(rows, f, GroupKey{}, 2023).auroc;
  }
  const double xc_min = std::min({au["xc_c_plus"], au["xc_c_minus"], au["xc_s_plus"], au["xc_s_minus"]});
  const double secs = seconds_since(t0);
  const bool ok = xc_min >= 0.85 && au["random"] <= 0.55 && au["n_points"] > au["random"] &&
                  au["n_points"] < xc_min && secs < 120;
  std::size_t tp = 0;
  for (const auto& r : rows) tp += r.is_tp;

  // Sensitivity of the negative-sign scores to the magnitude threshold.
  std::string sens;
  for (double th : {0.05, 0.1, 0.2}) {
    const auto rs = build_feature_dataset(inputs, XcConfig{th, 0.2}, MatchConfig{});
    sens += fmt(" a=%.2f:%.3f/%.3f", th, evaluate_feature(rs, "xc_c_minus", GroupKey{}).auroc,
                evaluate_feature(rs, "xc_s_minus", GroupKey{}).auroc);
  }
  return {ok, fmt("%zu rows (%zu TP); auroc xc_c+ %.3f xc_c- %.3f xc_s+ %.3f xc_s- %.3f n_points %.3f random %.3f; "
                  "%.1fs\n       negative-sign auroc (c/s) by a_thresh:",
                  rows.size(), tp, au["xc_c_plus"], au["xc_c_minus"], au["xc_s_plus"], au["xc_s_minus"],
                  au["n_points"], au["random"], secs) +
                  sens};
}

// ---- 8. Outlier property ----

Outcome outlier_property() {
  Rng rng(808);
  std::size_t tried = 0, bad = 0;
  double worst_xc_s = 0;
  for (int i = 0; i < 200 && tried < 100; ++i) {
    auto inst = fixture::random_xc_instance(rng);
    const XcConfig cfg{0.1, inst.margin};
    const Mask inside = membership_mask(project_to_bev(enlarge(inst.box, inst.margin)), inst.grid);
    const auto before = xc_scores(inst.map, inst.box, inst.grid, cfg);
    if (before.positive.c == 0) continue;
    const auto agg = aggregate_signed(inst.map, Sign::kPositive);
    std::optional<std::size_t> spot;
    for (std::size_t p = 0; p < inst.grid.pixels() && !spot; ++p) {
      if (!inside.bits[p] && agg.values[p] < cfg.a_thresh) spot = p;
    }
    if (!spot) continue;
    ++tried;
    inst.map.values.mutable_data()[*spot * inst.map.channels()] = 1e30f;
    const auto after = xc_scores(inst.map, inst.box, inst.grid, cfg);
    worst_xc_s = std::max(worst_xc_s, *after.positive.xc_s);
    const double c = static_cast<double>(before.positive.c), C = static_cast<double>(before.positive.C);
    const bool count_step = after.positive.c == before.positive.c && after.positive.C == before.positive.C + 1 &&
                            *after.positive.xc_c == c / (C + 1);
    if (!count_step || *after.positive.xc_s >= 1e-20) ++bad;
  }
  return {tried >= 50 && bad == 0,
          fmt("%zu injections, %zu violations; max xc_s+ after injection %.1e; xc_c+ moved c/C -> c/(C+1)", tried,
              bad, worst_xc_s)};
}

// ---- 9. Meta-classifier synergy ----

Outcome meta_synergy() {
  const auto t0 = Clock::now();
  const auto rows = fixture::noisy_and_rows(800, 909);
  MetaTrainConfig cfg;
  cfg.jobs = default_jobs();
  const std::vector<std::string> all(kMetaFeatures.begin(), kMetaFeatures.end());
  const CvReport full = cross_validate(rows, all, cfg, 909);
  double best = 0;
  std::string best_name;
  for (const auto& f : all) {
    const double a = cross_validate(rows, {f}, cfg, 909).mean.aupr;
    if (a > best) best = a, best_name = f;
  }
  const double secs = seconds_since(t0);
  const double gain = full.mean.aupr - best;
  const bool leak_free = full.diagnostics.validation_rows_in_stats == 0 && full.diagnostics.validation_rows_noised == 0;
  return {gain >= 0.02 && leak_free && secs < 180,
          fmt("MLP aupr %.4f vs best single (%s) %.4f, gain %+.4f; %zu runs, leak counters 0; %.1fs",
              full.mean.aupr, best_name.c_str(), best, gain, full.diagnostics.runs, secs)};
}

// ---- 10. Matching properties ----

std::string trace_failures() {
  auto pred = [](const Box3D& b, const std::string& label, double score) {
    Detection d;
    d.frame_id = "f";
    d.box = b;
    d.label = label;
    for (const auto& l : fixture::kLabels) d.scores.push_back({l, l == label ? score : 0.0});
    return d;
  };
  auto shifted = [](double dx) { return Box3D{dx, 0, 0, 2, 2, 2, 0}; };
  const Box3D unit{0, 0, 0, 2, 2, 2, 0};
  using V = std::vector<MatchTag>;
  std::string bad;
  auto expect = [&](const char* name, const std::vector<Detection>& p, const std::vector<GroundTruth>& g,
                    const MatchConfig& cfg, const V& want) {
    if (categorize(p, g, cfg).tags != want) bad += std::string(" ") + name;
  };
  const MatchConfig def;
  expect("score-inclusive", {pred(unit, "car", 0.05), pred(unit, "car", 0.1)}, {{"f", unit, "car"}}, def,
         {MatchTag::kIgnore, MatchTag::kTP});
  expect("class-thresh-car", {pred(shifted(0.8), "car", 0.9)}, {{"f", unit, "car"}}, def, {MatchTag::kFP});
  expect("class-thresh-ped", {pred(shifted(0.8), "pedestrian", 0.9)}, {{"f", unit, "pedestrian"}}, def,
         {MatchTag::kTP});
  MatchConfig third;
  third.iou_thresh["car"] = 1.0 / 3.0;
  expect("iou-at-threshold", {pred(shifted(1.0), "car", 0.9)}, {{"f", unit, "car"}}, third, {MatchTag::kTP});
  expect("best-gt-only", {pred(unit, "car", 0.9)}, {{"f", shifted(0.5), "car"}, {"f", unit, "pedestrian"}}, def,
         {MatchTag::kFP});
  expect("no-exclusivity", {pred(unit, "car", 0.9), pred(shifted(0.1), "car", 0.8)}, {{"f", unit, "car"}}, def,
         {MatchTag::kTP, MatchTag::kTP});
  expect("no-gt", {pred(unit, "cyclist", 0.9)}, {}, def, {MatchTag::kFP});
  return bad;
}

Outcome matching_properties() {
  Rng rng(1010);
  std::size_t nondet = 0, oracle_diff = 0, score_mono = 0, iou_mono = 0, perm = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = fixture::random_match_frame(rng);
    const MatchConfig base;
    const auto a = categorize(f.preds, f.gts, base);
    const auto b = categorize(f.preds, f.gts, base);
    if (a.tags != b.tags || a.matched_gt != b.matched_gt) ++nondet;
    if (a.tags != oracle::categorize(f.preds, f.gts, base)) ++oracle_diff;

    // Each prediction is categorized on its own: reversing the list reverses the tags.
    std::vector<Detection> rev(f.preds.rbegin(), f.preds.rend());
    auto rt = categorize(rev, f.gts, base).tags;
    std::reverse(rt.begin(), rt.end());
    if (rt != a.tags) ++perm;

    MatchConfig hi_score = base;
    hi_score.score_thresh = rng.uniform(0.1, 1.0);
    const auto s = categorize(f.preds, f.gts, hi_score);
    MatchConfig hi_iou = base;
    for (auto& [label, t] : hi_iou.iou_thresh) t = std::min(1.0, t + rng.uniform(0.0, 0.5));
    const auto u = categorize(f.preds, f.gts, hi_iou);
    for (std::size_t k = 0; k < f.preds.size(); ++k) {
      // A higher score cut only moves predictions to Ignore.
      if (s.tags[k] != a.tags[k] && s.tags[k] != MatchTag::kIgnore) ++score_mono;
      // A higher IoU cut only turns TP into FP.
      if (u.tags[k] != a.tags[k] && !(a.tags[k] == MatchTag::kTP && u.tags[k] == MatchTag::kFP)) ++iou_mono;
    }
  }
  const std::string traces = trace_failures();
  const bool ok = nondet + oracle_diff + score_mono + iou_mono + perm == 0 && traces.empty();
  return {ok, fmt("1000 frames: nondeterministic %zu, oracle diffs %zu, order-dependent %zu, score-monotonicity "
                  "violations %zu, IoU-monotonicity violations %zu; traces %s",
                  nondet, oracle_diff, perm, score_mono, iou_mono, traces.empty() ? "all pass" : traces.c_str())};
}

// ---- 11. Formats ----

Outcome format_round_trips() {
  Rng rng(1111);
  std::size_t diffs = 0, unpositioned = 0, wrong_code = 0;
  // XCAM with awkward floats.
  std::vector<float> v(7 * 5 * 3);
  for (auto& x : v) x = static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform(-30, 30)));
  v[0] = -0.0f;
  v[1] = std::numeric_limits<float>::denorm_min();
  v[2] = std::numeric_limits<float>::max();
  AttributionMap map;
  map.values = Tensor({7, 5, 3}, v);
  map.target = {4, 2, 99};
  map.method = AttributionMethod::kIgNoInputMult;
  map.ig_steps = 17;
  map.baseline_id = "blurred";
  const std::string bytes = encode_xcam(map);
  const AttributionMap back = decode_xcam(bytes);
  if (encode_xcam(back) != bytes) ++diffs;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(back.values[i]) != std::bit_cast<std::uint32_t>(v[i])) ++diffs;
  }
  // Every truncation is rejected with an offset in the message.
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    try {
      decode_xcam(bytes.substr(0, cut));
      ++wrong_code;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTruncatedPayload && e.code() != ErrorCode::kBadMagic) ++wrong_code;
      if (std::string(e.what()).find("offset") == std::string::npos) ++unpositioned;
    }
  }
  auto expect_code = [&](const std::string& b, ErrorCode want) {
    try {
      decode_xcam(b);
      ++wrong_code;
    } catch (const Error& e) {
      if (e.code() != want) ++wrong_code;
      if (std::string(e.what()).find("offset") == std::string::npos) ++unpositioned;
    }
  };
  std::string bad = bytes;
  bad[1] = 'X';
  expect_code(bad, ErrorCode::kBadMagic);
  bad = bytes;
  bad[4] = 9;
  expect_code(bad, ErrorCode::kVersionUnsupported);
  expect_code(bytes + '\0', ErrorCode::kParseError);

  // JSONL and TSV text is stable under parse and re-format.
  for (std::size_t i = 0; i < 500; ++i) {
    Detection d;
    d.frame_id = "f" + std::to_string(i);
    d.box = fixture::random_box(rng, 40.0);
    for (const auto& l : fixture::kLabels) d.scores.push_back({l, rng.uniform()});
    d.label = d.top_label();
    d.n_points = static_cast<std::int64_t>(rng.below(100000));
    if (i % 2) d.distance = rng.uniform(0, 80);
    if (i % 3) d.anchor = rng.below(1u << 20);
    const std::string line = format_detection(d);
    const Detection p = parse_detection(line, i + 1);
    if (!(p == d) || format_detection(p) != line) ++diffs;
  }
  auto rows = fixture::noisy_and_rows(500, 1112);
  rows[7].xc_c_minus_valid = false;
  rows[7].xc_c_minus = 0.0;
  const std::string table = format_feature_rows(rows);
  if (parse_feature_rows(table) != rows || format_feature_rows(parse_feature_rows(table)) != table) ++diffs;
  std::size_t line_errors = 0;
  try {
    parse_detection(R"({"frame_id": "f", "box": [1, 2, 3], "pred_label": "car"})", 42);
  } catch (const Error& e) {
    line_errors += std::string(e.what()).find("line 42") != std::string::npos;
  }
  const bool ok = diffs == 0 && unpositioned == 0 && wrong_code == 0 && line_errors == 1;
  return {ok, fmt("round-trip diffs %zu; %zu corrupt XCAM inputs, %zu wrong codes, %zu without offset; "
                  "JSONL error names its line: %s",
                  diffs, bytes.size() + 3, wrong_code, unpositioned, line_errors ? "yes" : "no")};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "IG completeness", ig_completeness},
      {2, "IG linear exactness", ig_linear},
      {3, "modified IG identity", modified_ig_identity},
      {4, "gradient vs finite differences", gradient_oracle},
      {5, "XC oracle equivalence", xc_oracle},
      {6, "metric oracles", metric_oracles},
      {7, "synthetic benchmark ordering", benchmark_ordering},
      {8, "count vs sum outlier", outlier_property},
      {9, "meta-classifier synergy", meta_synergy},
      {10, "matching properties", matching_properties},
      {11, "format round-trips", format_round_trips},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.id == 1 && secs >= 30) {
      o.pass = false;
      o.detail += " (over 30 s)";
    }
    failed += !o.pass;
    std::printf("[%s] %2d %-32s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  const double total = seconds_since(start);
  const bool fast = total < 600;
  failed += !fast;
  std::printf("[%s] %2d %-32s %7.2fs  limit 600 s\n", fast ? "PASS" : "FAIL", 12, "total runtime", total);
  std::printf("%d of 12 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
