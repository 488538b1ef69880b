#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xckit/features.hpp"

namespace xckit {

struct ScoredSample {
  double score = 0.0;
  bool is_positive = false;
};

struct MetricReport {
  double auroc = 0.0;
  double aupr = 0.0;
  double aupr_op = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

enum class PositiveClass : std::uint8_t { kTpAsPositive, kFpAsPositive };

// Area under the ROC curve by trapezoids over tie-grouped thresholds; equal
// to the Mann-Whitney statistic with ties counted as one half.
double auroc(std::span<const ScoredSample> samples);

// Average precision: sum of (R_k - R_{k-1}) * P_k over descending,
// tie-grouped thresholds. kFpAsPositive flips labels and negates scores.
double aupr(std::span<const ScoredSample> samples,
            PositiveClass positive = PositiveClass::kTpAsPositive);

MetricReport evaluate(std::span<const ScoredSample> samples);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;  // FPR for ROC, recall for PR
  double y = 0.0;  // TPR for ROC, precision for PR
};

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples);
std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples);

// sup_t |ECDF_a(t) - ECDF_b(t)| over the pooled sample points.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Feature name "random" draws a seeded U(0, 1) score per row.
MetricReport evaluate_feature(const std::vector<FeatureRow>& rows, std::string_view feature,
                              const GroupKey& group, std::uint64_t random_seed = 0);

struct TableRow {
  std::string group;
  std::string feature;
  MetricReport report;
};

// Tab-separated: group, feature, auroc, aupr, aupr_op, n_tp, n_fp.
std::string format_metric_table(const std::vector<TableRow>& rows);

}  // namespace xckit
