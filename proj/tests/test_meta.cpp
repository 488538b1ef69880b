#include <doctest.h>

#include <cmath>
#include <string>

#include "fixtures.hpp"
#include "xckit/error.hpp"
#include "xckit/features.hpp"
#include "xckit/meta.hpp"

using namespace xckit;
using fixture::error_of;

namespace {

FeatureMatrix matrix(std::size_t cols, std::vector<double> x, std::vector<std::uint8_t> y) {
  FeatureMatrix m;
  m.cols = cols;
  m.x = std::move(x);
  m.y = std::move(y);
  for (std::size_t i = 0; i < m.y.size(); ++i) m.source.push_back(i);
  return m;
}

// Two clusters separated by a margin of 1 along (1, 1) / sqrt 2.
FeatureMatrix separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m;
  m.cols = 2;
  while (m.rows() < n) {
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    const double proj = (a + b) / std::sqrt(2.0);
    if (std::abs(proj) < 0.5) continue;
    m.x.push_back(a);
    m.x.push_back(b);
    m.y.push_back(proj > 0 ? 1 : 0);
    m.source.push_back(m.rows() - 1);
  }
  return m;
}

}  // namespace

TEST_CASE("feature subsets are put in canonical order") {
  CHECK(canonical_subset({"xc_s_plus", "top_score", "n_points"}) ==
        std::vector<std::string>{"top_score", "xc_s_plus", "n_points"});
  CHECK(error_of([] { canonical_subset({"top_score", "top_score"}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { canonical_subset({"bogus"}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { canonical_subset({}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("standard groups come in a fixed order") {
  auto rows = fixture::noisy_and_rows(10, 1);
  rows[0].pred_label = "van";
  const auto groups = split_groups(rows);
  REQUIRE(groups.size() == 8);
  CHECK(groups[0].key.name() == "car/<100");
  CHECK(groups[1].key.name() == "car/>=100");
  CHECK(groups[2].key.name() == "pedestrian/<100");
  CHECK(groups[6].key.name() == "van/<100");
  const auto keys = group_keys(rows, {"class"});
  CHECK(keys.size() == 5);
  CHECK(keys[0].name() == "all");
  CHECK(error_of([&] { group_keys(rows, {"distance"}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("normalization uses population statistics") {
  const FeatureMatrix m = matrix(1, {1, 2, 3, 4}, {0, 1, 0, 1});
  const auto [z, st] = normalize(m);
  CHECK(st.mean[0] == 2.5);
  CHECK(st.sd[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(z.x[0] == doctest::Approx(-1.5 / std::sqrt(1.25)));
  CHECK(error_of([] { normalize(matrix(1, {2, 2, 2}, {0, 1, 0})); }) == ErrorCode::kConstantFeature);
  CHECK(error_of([] { normalize(matrix(1, {2}, {0})); }) == ErrorCode::kInsufficientRows);
}

TEST_CASE("augmentation duplicates rows with bounded noise") {
  const FeatureMatrix m = matrix(2, {0, 0, 1, 1, 2, 2}, {0, 1, 1});
  MetaTrainConfig cfg;
  const FeatureMatrix a = augment(m, cfg, 3);
  CHECK(a.rows() == 12);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    CHECK(a.y[i] == m.y[i % 3]);
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(a.x[i * 2 + c] - m.x[(i % 3) * 2 + c]) <= 0.05);
  }
  cfg.noise_half_width = 0;
  const FeatureMatrix b = augment(m, cfg, 3);
  for (std::size_t i = 0; i < b.rows(); ++i) CHECK(b.x[i * 2] == m.x[(i % 3) * 2]);
}

TEST_CASE("training refuses single-class data") {
  const FeatureMatrix m = matrix(1, {0, 1, 2}, {1, 1, 1});
  CHECK(error_of([&] { train_mlp(m, MetaTrainConfig{}, 1); }) == ErrorCode::kSingleClassTrainingSet);
}

TEST_CASE("the MLP separates a linearly separable set") {
  const FeatureMatrix raw = separable(400, 8);
  // The generating direction classifies every row; the set is well posed.
  std::size_t oracle_correct = 0;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    oracle_correct += ((raw.x[2 * i] + raw.x[2 * i + 1] > 0) == (raw.y[i] == 1));
  }
  REQUIRE(oracle_correct == raw.rows());
  const MetaTrainConfig cfg;
  const auto [z, st] = normalize(raw);
  const FeatureMatrix train = augment(z, cfg, 2);
  const TrainedMlp mlp = train_mlp(train, cfg, 4);
  const auto scores = predict_mlp(mlp.model, z);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) correct += ((scores[i] > 0.5) == (z.y[i] == 1));
  CHECK(static_cast<double>(correct) / static_cast<double>(z.rows()) >= 0.98);
}

TEST_CASE("cross validation keeps validation folds out of fitting") {
  const auto rows = fixture::noisy_and_rows(300, 5);
  MetaTrainConfig cfg;
  cfg.repeats = 2;
  const CvReport r = cross_validate(rows, {"top_score", "xc_c_plus"}, cfg, 1);
  CHECK(r.used_mlp);
  CHECK(r.runs.size() == 10);
  CHECK(r.diagnostics.runs == 10);
  CHECK(r.diagnostics.validation_rows_in_stats == 0);
  CHECK(r.diagnostics.validation_rows_noised == 0);
  // Every row is in 4 of 5 training folds per repeat, copied 4 times.
  CHECK(r.diagnostics.training_rows_noised == 2 * 4 * 4 * rows.size());
}

TEST_CASE("cross validation is deterministic and shares folds across subsets") {
  const auto rows = fixture::noisy_and_rows(250, 6);
  MetaTrainConfig cfg;
  cfg.repeats = 2;
  const CvReport a = cross_validate(rows, {"top_score", "xc_c_plus"}, cfg, 3);
  const CvReport b = cross_validate(rows, {"xc_c_plus", "top_score"}, cfg, 3);
  CHECK(a.mean.auroc == b.mean.auroc);
  const CvReport c = cross_validate(rows, {"top_score"}, cfg, 3);
  const CvReport d = cross_validate(rows, {"xc_s_minus"}, cfg, 3);
  CHECK_FALSE(c.used_mlp);
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    CHECK(c.runs[i].n_pos == a.runs[i].n_pos);
    CHECK(c.runs[i].n_pos == d.runs[i].n_pos);
    CHECK(c.runs[i].n_neg == d.runs[i].n_neg);
  }
  cfg.jobs = 3;
  CHECK(cross_validate(rows, {"top_score", "xc_c_plus"}, cfg, 3).mean.auroc == a.mean.auroc);
}

TEST_CASE("a single feature is scored directly") {
  const auto rows = fixture::noisy_and_rows(200, 7);
  MetaTrainConfig cfg;
  cfg.repeats = 1;
  const CvReport r = cross_validate(rows, {"xc_c_plus"}, cfg, 2);
  CHECK_FALSE(r.used_mlp);
  cfg.direct_single_feature = false;
  CHECK(cross_validate(rows, {"xc_c_plus"}, cfg, 2).used_mlp);
}

TEST_CASE("too few rows per class for the fold count") {
  auto rows = fixture::noisy_and_rows(40, 8);
  for (auto& r : rows) r.is_tp = false;
  rows[0].is_tp = true;
  CHECK(error_of([&] { cross_validate(rows, {"top_score"}, MetaTrainConfig{}, 1); }) ==
        ErrorCode::kInsufficientRows);
}

TEST_CASE("a constant feature is rejected by name") {
  auto rows = fixture::noisy_and_rows(60, 4);
  for (auto& r : rows) r.xc_s_minus = 0.0;
  std::string what;
  try {
    cross_validate(rows, {"top_score", "xc_s_minus"}, MetaTrainConfig{}, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConstantFeature);
    what = e.what();
  }
  CHECK(what.find("'xc_s_minus'") != std::string::npos);
}

TEST_CASE("validity flags add input columns") {
  auto rows = fixture::noisy_and_rows(5, 9);
  rows[1].xc_c_plus_valid = false;
  const FeatureMatrix m = to_matrix(rows, {"top_score", "xc_c_plus"}, true);
  CHECK(m.cols == 3);
  CHECK(m.x[1 * 3 + 2] == 0.0);
  CHECK(m.x[0 * 3 + 2] == 1.0);
}

TEST_CASE("feature rows skip ignored predictions and flag undefined scores") {
  auto make = [](double score) {
    Detection d;
    d.frame_id = "f";
    d.box = {0, 0, 0, 2, 2, 2, 0};
    d.label = "car";
    d.scores = {{"car", score}, {"pedestrian", 0.0}, {"cyclist", 0.0}};
    d.n_points = 42;
    return d;
  };
  const std::vector<Detection> preds = {make(0.01), make(0.9)};
  const std::vector<GroundTruth> gts = {{"f", {0, 0, 0, 2, 2, 2, 0}, "car"}};
  XcScores s;
  s.positive.xc_c = 0.5;
  std::vector<std::optional<XcScores>> xc = {std::nullopt, s};
  const auto rows = feature_rows(preds, gts, xc, MatchConfig{});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].box_index == 1);
  CHECK(rows[0].is_tp);
  CHECK(rows[0].xc_c_plus == 0.5);
  CHECK(rows[0].xc_c_plus_valid);
  CHECK(rows[0].xc_s_plus == 0.0);
  CHECK_FALSE(rows[0].xc_s_plus_valid);
  CHECK(rows[0].n_points == 42);

  xc = {s, std::nullopt};
  CHECK(error_of([&] { feature_rows(preds, gts, xc, MatchConfig{}); }) == ErrorCode::kMissingAttribution);
  xc.pop_back();
  CHECK(error_of([&] { feature_rows(preds, gts, xc, MatchConfig{}); }) == ErrorCode::kMissingAttribution);
}
