#include "xckit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "xckit/error.hpp"
#include "xckit/rng.hpp"

namespace xckit {

namespace {

struct Group {
  double score;
  std::size_t pos;
  std::size_t neg;
};

// Distinct scores in descending order with class counts.
std::vector<Group> grouped_descending(std::span<const ScoredSample> samples) {
  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  for (const auto& s : sorted) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::kNonFinite, "score is not finite");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
  std::vector<Group> groups;
  for (const auto& s : sorted) {
    if (groups.empty() || groups.back().score != s.score) groups.push_back({s.score, 0, 0});
    (s.is_positive ? groups.back().pos : groups.back().neg)++;
  }
  return groups;
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const ScoredSample> samples) {
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.is_positive ? 1 : 0;
  return {pos, samples.size() - pos};
}

std::vector<ScoredSample> flipped(std::span<const ScoredSample> samples) {
  std::vector<ScoredSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({-s.score, !s.is_positive});
  return out;
}

}  // namespace

double auroc(std::span<const ScoredSample> samples) {
  const auto [n_pos, n_neg] = class_counts(samples);
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kDegenerateClassBalance,
                "AUROC needs both classes (" + std::to_string(n_pos) + " positive, " +
                    std::to_string(n_neg) + " negative)");
  }
  // Twice the trapezoid area in count units stays integral.
  double twice_area = 0.0;
  double tp = 0.0;
  for (const Group& g : grouped_descending(samples)) {
    twice_area += static_cast<double>(g.neg) * (2.0 * tp + static_cast<double>(g.pos));
    tp += static_cast<double>(g.pos);
  }
  return twice_area / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double aupr(std::span<const ScoredSample> samples, PositiveClass positive) {
  if (positive == PositiveClass::kFpAsPositive) {
    const auto f = flipped(samples);
    return aupr(f, PositiveClass::kTpAsPositive);
  }
  const auto [n_pos, n_neg] = class_counts(samples);
  (void)n_neg;
  if (n_pos == 0) throw Error(ErrorCode::kNoPositives, "AUPR needs at least one positive");
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (const Group& g : grouped_descending(samples)) {
    tp += g.pos;
    fp += g.neg;
    if (g.pos == 0) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += static_cast<double>(g.pos) / static_cast<double>(n_pos) * precision;
  }
  return ap;
}

MetricReport evaluate(std::span<const ScoredSample> samples) {
  const auto [n_pos, n_neg] = class_counts(samples);
  return {auroc(samples), aupr(samples, PositiveClass::kTpAsPositive),
          aupr(samples, PositiveClass::kFpAsPositive), n_pos, n_neg};
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples) {
  const auto [n_pos, n_neg] = class_counts(samples);
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kDegenerateClassBalance, "ROC needs both classes");
  std::vector<CurvePoint> out{{INFINITY, 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (const Group& g : grouped_descending(samples)) {
    tp += g.pos;
    fp += g.neg;
    out.push_back({g.score, static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos});
  }
  return out;
}

std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples) {
  const auto [n_pos, n_neg] = class_counts(samples);
  (void)n_neg;
  if (n_pos == 0) throw Error(ErrorCode::kNoPositives, "PR curve needs a positive");
  std::vector<CurvePoint> out;
  std::size_t tp = 0, fp = 0;
  for (const Group& g : grouped_descending(samples)) {
    tp += g.pos;
    fp += g.neg;
    out.push_back({g.score, static_cast<double>(tp) / n_pos,
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptySample, "KS needs two non-empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double t;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      t = sa[i];
    } else {
      t = sb[j];
    }
    while (i < sa.size() && sa[i] == t) ++i;
    while (j < sb.size() && sb[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

MetricReport evaluate_feature(const std::vector<FeatureRow>& rows, std::string_view feature,
                              const GroupKey& group, std::uint64_t random_seed) {
  const bool random = feature == "random";
  Rng rng(derive_seed(random_seed, "random-feature"));
  std::vector<ScoredSample> samples;
  for (const auto& row : rows) {
    // The random column draws for every row so groups see the same values.
    const double u = random ? rng.uniform() : 0.0;
    if (!group.matches(row)) continue;
    samples.push_back({random ? u : feature_value(row, feature), row.is_tp});
  }
  return evaluate(samples);
}

std::string format_metric_table(const std::vector<TableRow>& rows) {
  std::string out = "group\tfeature\tauroc\taupr\taupr_op\tn_tp\tn_fp\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.4f\t%.4f\t%zu\t%zu\n", r.report.auroc,
                  r.report.aupr, r.report.aupr_op, r.report.n_pos, r.report.n_neg);
    out += r.group + "\t" + r.feature + buf;
  }
  return out;
}

}  // namespace xckit
