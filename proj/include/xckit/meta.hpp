#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xckit/attribution.hpp"
#include "xckit/detection.hpp"
#include "xckit/features.hpp"
#include "xckit/matching.hpp"
#include "xckit/metrics.hpp"
#include "xckit/model.hpp"
#include "xckit/xc.hpp"

namespace xckit {

// Joins XC scores (one per prediction, empty for ignored ones) with the
// match outcome. Ignored predictions produce no row.
std::vector<FeatureRow> feature_rows(std::span<const Detection> preds,
                                     std::span<const GroundTruth> gts,
                                     std::span<const std::optional<XcScores>> xc,
                                     const MatchConfig& mcfg);

struct FrameInput {
  GridMeta grid;
  std::vector<Detection> preds;
  std::vector<GroundTruth> gts;
  // Attribution map for each prediction's top class; may be empty for
  // predictions that end up ignored.
  std::vector<std::optional<AttributionMap>> maps;
};

std::vector<FeatureRow> build_feature_dataset(std::span<const FrameInput> frames,
                                              const XcConfig& cfg, const MatchConfig& mcfg);

struct MetaTrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 16;
  double learning_rate = 0.001;
  std::size_t duplication_factor = 4;
  double noise_half_width = 0.05;
  std::size_t folds = 5;
  std::size_t repeats = 5;
  std::size_t hidden_width = 3;
  // A one-feature subset is scored by the raw feature instead of an MLP.
  bool direct_single_feature = true;
  // Append the XC validity flags as extra inputs.
  bool include_validity_flags = false;
  unsigned jobs = 1;

  void validate() const;
};

// Row-major design matrix with labels and the source row of each line.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  std::vector<std::size_t> source;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
};

FeatureMatrix to_matrix(std::span<const FeatureRow> rows, const std::vector<std::string>& subset,
                        bool include_validity_flags = false);

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> indices);

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> sd;  // population standard deviation
};

// z = (x - mean) / sd. Stats are computed from `m` unless supplied.
std::pair<FeatureMatrix, NormalizationStats> normalize(
    const FeatureMatrix& m, const std::optional<NormalizationStats>& stats = std::nullopt);

// duplication_factor copies of every row, each feature jittered by
// U(-noise_half_width, +noise_half_width). Labels are copied unchanged.
FeatureMatrix augment(const FeatureMatrix& m, const MetaTrainConfig& cfg, std::uint64_t seed);

ModelSpec mlp_spec(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

struct TrainedMlp {
  ModelGraph model;
  std::vector<double> train_scores;
  double final_loss = 0.0;
};

TrainedMlp train_mlp(const FeatureMatrix& train, const MetaTrainConfig& cfg, std::uint64_t seed);

std::vector<double> predict_mlp(const ModelGraph& model, const FeatureMatrix& m);

struct CvDiagnostics {
  std::size_t runs = 0;
  std::size_t training_rows_noised = 0;
  // Both stay zero when validation folds are kept out of fitting.
  std::size_t validation_rows_in_stats = 0;
  std::size_t validation_rows_noised = 0;
};

struct CvReport {
  std::vector<std::string> features;  // canonical order
  bool used_mlp = true;
  MetricReport mean;
  std::vector<MetricReport> runs;  // repeat-major
  CvDiagnostics diagnostics;
};

// Repeated stratified k-fold evaluation of an MLP (or the raw feature for a
// one-feature subset). Fold assignment depends only on (seed, repeat), so
// different subsets are compared on identical splits.
CvReport cross_validate(const std::vector<FeatureRow>& rows, const std::vector<std::string>& subset,
                        const MetaTrainConfig& cfg, std::uint64_t seed);

}  // namespace xckit
