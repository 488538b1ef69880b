#include "xckit/meta.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "xckit/autodiff.hpp"
#include "xckit/error.hpp"
#include "xckit/parallel.hpp"
#include "xckit/rng.hpp"

namespace xckit {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_both_classes(const FeatureMatrix& m) {
  const auto pos = std::count(m.y.begin(), m.y.end(), std::uint8_t{1});
  if (pos == 0 || pos == static_cast<long>(m.rows())) {
    throw Error(ErrorCode::kSingleClassTrainingSet,
                "training rows hold a single class (" + std::to_string(pos) + " of " +
                    std::to_string(m.rows()) + " positive)");
  }
}

std::string subset_key(const std::vector<std::string>& canon, bool flags) {
  std::string key;
  for (const auto& f : canon) key += f + "|";
  return flags ? key + "flags" : key;
}

}  // namespace

std::vector<FeatureRow> feature_rows(std::span<const Detection> preds,
                                     std::span<const GroundTruth> gts,
                                     std::span<const std::optional<XcScores>> xc,
                                     const MatchConfig& mcfg) {
  if (xc.size() != preds.size()) {
    throw Error(ErrorCode::kMissingAttribution, "XC scores for " + std::to_string(xc.size()) +
                                                    " of " + std::to_string(preds.size()) +
                                                    " predictions");
  }
  const MatchOutcome outcome = categorize(preds, gts, mcfg);
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (outcome.tags[i] == MatchTag::kIgnore) continue;
    if (!xc[i]) {
      throw Error(ErrorCode::kMissingAttribution,
                  "frame " + preds[i].frame_id + " box " + std::to_string(i) + " has no attribution");
    }
    const Detection& p = preds[i];
    const XcScores& s = *xc[i];
    FeatureRow r;
    r.frame_id = p.frame_id;
    r.box_index = i;
    r.pred_label = p.top_label();
    r.top_score = p.top_score();
    r.xc_c_minus = s.negative.xc_c.value_or(0.0);
    r.xc_c_plus = s.positive.xc_c.value_or(0.0);
    r.xc_s_minus = s.negative.xc_s.value_or(0.0);
    r.xc_s_plus = s.positive.xc_s.value_or(0.0);
    r.xc_c_minus_valid = s.negative.xc_c.has_value();
    r.xc_c_plus_valid = s.positive.xc_c.has_value();
    r.xc_s_minus_valid = s.negative.xc_s.has_value();
    r.xc_s_plus_valid = s.positive.xc_s.has_value();
    r.n_points = p.n_points;
    r.distance = p.distance_or_norm();
    r.is_tp = outcome.tags[i] == MatchTag::kTP;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FeatureRow> build_feature_dataset(std::span<const FrameInput> frames,
                                              const XcConfig& cfg, const MatchConfig& mcfg) {
  std::vector<FeatureRow> rows;
  for (const FrameInput& f : frames) {
    if (f.maps.size() != f.preds.size()) {
      throw Error(ErrorCode::kMissingAttribution, "frame has " + std::to_string(f.maps.size()) +
                                                      " maps for " + std::to_string(f.preds.size()) +
                                                      " predictions");
    }
    std::vector<std::optional<XcScores>> xc(f.preds.size());
    for (std::size_t i = 0; i < f.preds.size(); ++i) {
      if (f.maps[i]) xc[i] = xc_scores(*f.maps[i], f.preds[i].box, f.grid, cfg);
    }
    auto frame_rows = feature_rows(f.preds, f.gts, xc, mcfg);
    rows.insert(rows.end(), std::make_move_iterator(frame_rows.begin()),
                std::make_move_iterator(frame_rows.end()));
  }
  return rows;
}

void MetaTrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || duplication_factor == 0 || folds < 2 || repeats == 0 ||
      hidden_width == 0 || !(learning_rate > 0.0) || !(noise_half_width >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "meta training config values must be positive");
  }
}

FeatureMatrix to_matrix(std::span<const FeatureRow> rows, const std::vector<std::string>& subset,
                        bool include_validity_flags) {
  std::vector<std::string> flag_cols;
  if (include_validity_flags) {
    for (const auto& f : subset) {
      if (f.starts_with("xc_")) flag_cols.push_back(f);
    }
  }
  FeatureMatrix m;
  m.cols = subset.size() + flag_cols.size();
  m.x.reserve(rows.size() * m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& f : subset) m.x.push_back(feature_value(rows[i], f));
    for (const auto& f : flag_cols) m.x.push_back(feature_valid(rows[i], f) ? 1.0 : 0.0);
    m.y.push_back(rows[i].is_tp ? 1 : 0);
    m.source.push_back(i);
  }
  return m;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> indices) {
  FeatureMatrix out;
  out.cols = m.cols;
  out.x.reserve(indices.size() * m.cols);
  for (std::size_t i : indices) {
    const auto r = m.row(i);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(m.y[i]);
    out.source.push_back(m.source[i]);
  }
  return out;
}

std::pair<FeatureMatrix, NormalizationStats> normalize(const FeatureMatrix& m,
                                                       const std::optional<NormalizationStats>& stats) {
  NormalizationStats st;
  if (stats) {
    st = *stats;
    if (st.mean.size() != m.cols || st.sd.size() != m.cols) {
      throw Error(ErrorCode::kShapeMismatch, "normalization stats do not match feature count");
    }
  } else {
    if (m.rows() < 2) throw Error(ErrorCode::kInsufficientRows, "normalization needs >= 2 rows");
    st.mean.assign(m.cols, 0.0);
    st.sd.assign(m.cols, 0.0);
    const double n = static_cast<double>(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t c = 0; c < m.cols; ++c) st.mean[c] += m.x[i * m.cols + c];
    }
    for (double& v : st.mean) v /= n;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        const double d = m.x[i * m.cols + c] - st.mean[c];
        st.sd[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < m.cols; ++c) {
      st.sd[c] = std::sqrt(st.sd[c] / n);
      if (!(st.sd[c] > 1e-12 * std::max(1.0, std::abs(st.mean[c])))) {
        throw Error(ErrorCode::kConstantFeature, "feature column " + std::to_string(c) + " is constant");
      }
    }
  }
  FeatureMatrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      double& v = out.x[i * out.cols + c];
      v = (v - st.mean[c]) / st.sd[c];
    }
  }
  return {std::move(out), std::move(st)};
}

FeatureMatrix augment(const FeatureMatrix& m, const MetaTrainConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix out;
  out.cols = m.cols;
  out.x.reserve(m.x.size() * cfg.duplication_factor);
  const double w = cfg.noise_half_width;
  for (std::size_t copy = 0; copy < cfg.duplication_factor; ++copy) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (double v : m.row(i)) out.x.push_back(w > 0.0 ? v + rng.uniform(-w, w) : v);
      out.y.push_back(m.y[i]);
      out.source.push_back(m.source[i]);
    }
  }
  return out;
}

ModelSpec mlp_spec(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  ModelSpec spec;
  spec.input_shape = {inputs};
  spec.seed = seed;
  LayerSpec l1;
  l1.kind = "dense";
  l1.in = inputs;
  l1.out = hidden;
  LayerSpec l2;
  l2.kind = "dense";
  l2.in = hidden;
  l2.out = 1;
  spec.layers = {l1, LayerSpec{"relu"}, l2, LayerSpec{"sigmoid"}};
  return spec;
}

TrainedMlp train_mlp(const FeatureMatrix& train, const MetaTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_both_classes(train);
  ModelGraph model = build_model(mlp_spec(train.cols, cfg.hidden_width, derive_seed(seed, "init")));

  std::vector<Sample> samples;
  samples.reserve(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const auto r = train.row(i);
    samples.push_back({Tensor({train.cols}, std::vector<float>(r.begin(), r.end())),
                       static_cast<float>(train.y[i])});
  }

  Adam adam(model, AdamConfig{cfg.learning_rate});
  Rng rng(derive_seed(seed, "shuffle"));
  GradientBuffers grads = zero_gradients(model);
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(samples);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, samples.size() - start);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      const double loss = accumulate_param_gradients(
          model, std::span<const Sample>(samples).subspan(start, n), LossKind::kBceWithLogits, grads);
      epoch_loss += loss * static_cast<double>(n);
      adam.step(model, grads);
    }
  }
  TrainedMlp out{std::move(model), {}, epoch_loss / static_cast<double>(samples.size())};
  out.train_scores = predict_mlp(out.model, train);
  return out;
}

std::vector<double> predict_mlp(const ModelGraph& model, const FeatureMatrix& m) {
  std::vector<double> scores;
  scores.reserve(m.rows());
  const bool ends_with_sigmoid =
      !model.layers().empty() && std::holds_alternative<SigmoidLayer>(model.layers().back());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    // Round inputs through float32 to match the training samples.
    std::vector<double> in;
    for (double v : m.row(i)) in.push_back(static_cast<float>(v));
    const double out = forward_f64(model, in).front();
    scores.push_back(ends_with_sigmoid ? out : sigmoid(out));
  }
  return scores;
}

CvReport cross_validate(const std::vector<FeatureRow>& rows, const std::vector<std::string>& subset,
                        const MetaTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  CvReport report;
  report.features = canonical_subset(subset);
  report.used_mlp = !(report.features.size() == 1 && cfg.direct_single_feature &&
                      !cfg.include_validity_flags);
  const FeatureMatrix all = to_matrix(rows, report.features, cfg.include_validity_flags);

  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < all.rows(); ++i) (all.y[i] ? pos_idx : neg_idx).push_back(i);
  if (pos_idx.size() < cfg.folds || neg_idx.size() < cfg.folds) {
    throw Error(ErrorCode::kInsufficientRows,
                std::to_string(pos_idx.size()) + " TP and " + std::to_string(neg_idx.size()) +
                    " FP rows; need at least " + std::to_string(cfg.folds) + " of each");
  }

  // Stratified fold ids per repeat; shuffling is keyed by repeat only.
  std::vector<std::vector<std::size_t>> fold_of(cfg.repeats, std::vector<std::size_t>(all.rows()));
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    Rng rng(derive_seed(derive_seed(seed, "folds"), r));
    for (auto* idx : {&pos_idx, &neg_idx}) {
      std::vector<std::size_t> order = *idx;
      rng.shuffle(order);
      for (std::size_t k = 0; k < order.size(); ++k) fold_of[r][order[k]] = k % cfg.folds;
    }
  }

  const std::string key = subset_key(report.features, cfg.include_validity_flags);
  const std::size_t n_runs = cfg.repeats * cfg.folds;
  report.runs.resize(n_runs);
  std::vector<CvDiagnostics> diags(n_runs);

  parallel_for(n_runs, cfg.jobs, [&](std::size_t run) {
    const std::size_t r = run / cfg.folds, f = run % cfg.folds;
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < all.rows(); ++i) (fold_of[r][i] == f ? val_idx : train_idx).push_back(i);
    const FeatureMatrix train = select_rows(all, train_idx);
    const FeatureMatrix val = select_rows(all, val_idx);
    const std::unordered_set<std::size_t> val_sources(val.source.begin(), val.source.end());
    auto count_val = [&](const std::vector<std::size_t>& src) {
      return static_cast<std::size_t>(std::count_if(
          src.begin(), src.end(), [&](std::size_t s) { return val_sources.contains(s); }));
    };

    std::vector<double> scores;
    CvDiagnostics& d = diags[run];
    d.runs = 1;
    if (report.used_mlp) {
      const std::uint64_t run_seed = derive_seed(derive_seed(derive_seed(seed, key), r), f);
      std::pair<FeatureMatrix, NormalizationStats> fitted;
      try {
        fitted = normalize(train);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kConstantFeature) throw;
        std::string name = "?";
        for (std::size_t c = 0; c < train.cols && name == "?"; ++c) {
          bool same = true;
          for (std::size_t i = 1; i < train.rows() && same; ++i) same = train.x[i * train.cols + c] == train.x[c];
          if (same) name = c < report.features.size() ? report.features[c] : "validity flag " + std::to_string(c);
        }
        throw Error(e.code(), "feature '" + name + "' is constant in the training folds (repeat " +
                                  std::to_string(r) + ", fold " + std::to_string(f) + ")");
      }
      auto& [train_n, stats] = fitted;
      d.validation_rows_in_stats = count_val(train.source);
      const FeatureMatrix val_n = normalize(val, stats).first;
      const FeatureMatrix aug = augment(train_n, cfg, derive_seed(run_seed, "noise"));
      if (cfg.noise_half_width > 0.0) {
        d.training_rows_noised = aug.rows();
        d.validation_rows_noised = count_val(aug.source);
      }
      const TrainedMlp mlp = train_mlp(aug, cfg, run_seed);
      scores = predict_mlp(mlp.model, val_n);
    } else {
      scores.assign(val.x.begin(), val.x.end());
    }
    std::vector<ScoredSample> samples;
    for (std::size_t i = 0; i < val.rows(); ++i) samples.push_back({scores[i], val.y[i] == 1});
    report.runs[run] = evaluate(samples);
  });

  for (const auto& m : report.runs) {
    report.mean.auroc += m.auroc;
    report.mean.aupr += m.aupr;
    report.mean.aupr_op += m.aupr_op;
  }
  report.mean.auroc /= static_cast<double>(n_runs);
  report.mean.aupr /= static_cast<double>(n_runs);
  report.mean.aupr_op /= static_cast<double>(n_runs);
  report.mean.n_pos = pos_idx.size();
  report.mean.n_neg = neg_idx.size();
  for (const auto& d : diags) {
    report.diagnostics.runs += d.runs;
    report.diagnostics.training_rows_noised += d.training_rows_noised;
    report.diagnostics.validation_rows_in_stats += d.validation_rows_in_stats;
    report.diagnostics.validation_rows_noised += d.validation_rows_noised;
  }
  return report;
}

}  // namespace xckit
