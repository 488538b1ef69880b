// xckit command line: synth -> attribute -> xc -> match -> features -> eval -> train-meta.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xckit/attribution.hpp"
#include "xckit/error.hpp"
#include "xckit/io.hpp"
#include "xckit/matching.hpp"
#include "xckit/meta.hpp"
#include "xckit/metrics.hpp"
#include "xckit/parallel.hpp"
#include "xckit/synth.hpp"
#include "xckit/xc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace xckit;

namespace {

constexpr const char* kDefaultIou = "car=0.5,pedestrian=0.25,cyclist=0.25";
constexpr const char* kDefaultEvalFeatures =
    "random,distance,n_points,top_score,xc_c_minus,xc_c_plus,xc_s_minus,xc_s_plus";

// ---- frame directory ----

struct FrameIndex {
  GridMeta grid;
  std::vector<std::string> frames;
  std::vector<std::string> classes;
};

json grid_json(const GridMeta& g) {
  return {{"height", g.height}, {"width", g.width}, {"origin_x", g.origin_x},
          {"origin_y", g.origin_y}, {"pixel_size", g.pixel_size}};
}

void write_frame_index(const fs::path& dir, const FrameIndex& idx) {
  json j;
  j["grid"] = grid_json(idx.grid);
  j["classes"] = idx.classes;
  j["frames"] = idx.frames;
  write_text(dir / "frames.json", j.dump(2) + "\n");
}

FrameIndex read_frame_index(const fs::path& dir) {
  const fs::path path = dir / "frames.json";
  try {
    const json j = json::parse(read_text(path));
    FrameIndex idx;
    const auto& g = j.at("grid");
    idx.grid = {g.at("height").get<std::size_t>(), g.at("width").get<std::size_t>(),
                g.at("origin_x").get<double>(), g.at("origin_y").get<double>(),
                g.at("pixel_size").get<double>()};
    idx.grid.validate();
    idx.classes = j.at("classes").get<std::vector<std::string>>();
    idx.frames = j.at("frames").get<std::vector<std::string>>();
    return idx;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

fs::path image_path(const fs::path& dir, const std::string& frame) {
  return dir / "images" / (frame + ".xcam");
}

fs::path attrib_path(const fs::path& dir, const std::string& frame, std::size_t box) {
  return dir / (frame + "_" + std::to_string(box) + ".xcam");
}

// Predictions of each frame in file order; box index = position within frame.
std::map<std::string, std::vector<Detection>> preds_by_frame(const fs::path& path) {
  std::map<std::string, std::vector<Detection>> out;
  DetectionReader reader(path);
  while (auto d = reader.next()) out[d->frame_id].push_back(std::move(*d));
  return out;
}

std::map<std::string, std::vector<GroundTruth>> gts_by_frame(const fs::path& path) {
  std::map<std::string, std::vector<GroundTruth>> out;
  GroundTruthReader reader(path);
  while (auto g = reader.next()) out[g->frame_id].push_back(std::move(*g));
  return out;
}

template <typename T>
const std::vector<T>& lookup(const std::map<std::string, std::vector<T>>& m, const std::string& key) {
  static const std::vector<T> empty;
  const auto it = m.find(key);
  return it == m.end() ? empty : it->second;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

void log(const std::string& msg) { std::cerr << "xckit: " << msg << "\n"; }

// ---- stages ----

struct SynthOpts {
  std::string spec;
  std::string out;
  std::size_t frames = 20;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthOpts& o, unsigned jobs) {
  SceneSpec spec = o.spec.empty() ? default_scene_spec() : load_scene_spec(o.spec);
  if (o.seed) spec.seed = *o.seed;
  const Benchmark b = generate_benchmark(spec, o.frames, jobs);
  const fs::path out(o.out);
  ensure_dir(out / "images");
  save_model(out / "model.json", *b.model);
  write_text(out / "scene.json", scene_spec_to_json(spec) + "\n");
  FrameIndex idx{spec.grid, {}, {}};
  for (const auto& c : spec.classes) idx.classes.push_back(c.label);
  std::vector<Detection> preds;
  std::vector<GroundTruth> gts;
  for (const auto& f : b.frames) {
    idx.frames.push_back(f.frame_id);
    write_tensor_xcam(image_path(out, f.frame_id), f.image.features);
    preds.insert(preds.end(), f.preds.begin(), f.preds.end());
    gts.insert(gts.end(), f.gts.begin(), f.gts.end());
  }
  write_frame_index(out, idx);
  write_detections(out / "preds.jsonl", preds);
  write_ground_truths(out / "gts.jsonl", gts);
  write_text(out / "manifest.json", manifest_to_json(b.manifest) + "\n");
  log("synth: " + std::to_string(b.frames.size()) + " frames, " + std::to_string(preds.size()) +
      " predictions -> " + out.string());
}

struct AttributeOpts {
  std::string model;
  std::string frames;
  std::string preds;  // defaults to <frames>/preds.jsonl
  std::string method = "backprop";
  std::uint32_t steps = 32;
  std::string targets = "top-class";
  std::string out;
};

void run_attribute(const AttributeOpts& o, unsigned jobs) {
  if (o.targets != "top-class") {
    throw Error(ErrorCode::kInvalidArgument, "only --targets top-class is supported");
  }
  const AttributionMethod method = parse_attribution_method(o.method);
  const ModelGraph model = load_model(o.model);
  const fs::path frames_dir(o.frames);
  const FrameIndex idx = read_frame_index(frames_dir);
  const auto preds = preds_by_frame(o.preds.empty() ? frames_dir / "preds.jsonl" : fs::path(o.preds));
  const fs::path out(o.out);
  ensure_dir(out);
  IgOptions ig;
  ig.steps = o.steps;
  const std::size_t n_classes = idx.classes.size();
  std::vector<std::size_t> written(idx.frames.size(), 0);
  parallel_for(idx.frames.size(), jobs, [&](std::size_t fi) {
    const std::string& frame = idx.frames[fi];
    const auto& dets = lookup(preds, frame);
    if (dets.empty()) return;
    const Tensor image = read_tensor_xcam(image_path(frames_dir, frame));
    std::vector<AttributionTarget> targets;
    for (std::size_t b = 0; b < dets.size(); ++b) {
      const auto& d = dets[b];
      const auto cls = d.top_class_index();
      if (!d.anchor || !cls) {
        throw Error(ErrorCode::kMissingAttribution,
                    "frame " + frame + " box " + std::to_string(b) + " has no anchor or scores");
      }
      targets.push_back({b, *cls, *d.anchor * n_classes + *cls});
    }
    if (method == AttributionMethod::kBackprop) {
      for (const auto& m : backprop_saliency(model, image, targets)) {
        write_xcam(attrib_path(out, frame, m.target.box_index), m);
      }
    } else {
      for (const auto& t : targets) write_xcam(attrib_path(out, frame, t.box_index), attribute(model, image, method, ig, t));
    }
    written[fi] = targets.size();
  });
  std::size_t total = 0;
  for (auto n : written) total += n;
  log("attribute: " + std::to_string(total) + " " + to_string(method) + " maps -> " + out.string());
}

struct XcOpts {
  std::string frames;
  std::string preds;
  std::string attribs;
  double a_thresh = 0.1;
  double margin = 0.2;
  std::string out;
};

void run_xc(const XcOpts& o, unsigned jobs) {
  const XcConfig cfg{o.a_thresh, o.margin};
  cfg.validate();
  const fs::path frames_dir(o.frames);
  const FrameIndex idx = read_frame_index(frames_dir);
  const auto preds = preds_by_frame(o.preds.empty() ? frames_dir / "preds.jsonl" : fs::path(o.preds));
  std::vector<std::vector<XcRecord>> per_frame(idx.frames.size());
  parallel_for(idx.frames.size(), jobs, [&](std::size_t fi) {
    const std::string& frame = idx.frames[fi];
    const auto& dets = lookup(preds, frame);
    for (std::size_t b = 0; b < dets.size(); ++b) {
      const fs::path p = attrib_path(o.attribs, frame, b);
      if (!fs::exists(p)) {
        throw Error(ErrorCode::kMissingAttribution, "no attribution map " + p.string());
      }
      per_frame[fi].push_back({frame, b, xc_scores(read_xcam(p), dets[b].box, idx.grid, cfg)});
    }
  });
  std::vector<XcRecord> all;
  for (auto& v : per_frame) all.insert(all.end(), v.begin(), v.end());
  write_text(o.out, format_xc_records(all));
  log("xc: " + std::to_string(all.size()) + " boxes -> " + o.out);
}

struct MatchOpts {
  std::string preds;
  std::string gts;
  double score_thresh = 0.1;
  std::string iou = kDefaultIou;
  std::string out;

  MatchConfig config() const {
    MatchConfig c;
    c.score_thresh = score_thresh;
    c.iou_thresh = parse_iou_thresholds(iou);
    c.validate();
    return c;
  }
};

void run_match(const MatchOpts& o) {
  const MatchConfig cfg = o.config();
  const auto preds = preds_by_frame(o.preds);
  const auto gts = gts_by_frame(o.gts);
  std::vector<MatchRecord> records;
  std::size_t tp = 0, fp = 0;
  for (const auto& [frame, dets] : preds) {
    const MatchOutcome m = categorize(dets, lookup(gts, frame), cfg);
    for (std::size_t b = 0; b < dets.size(); ++b) {
      records.push_back({frame, b, m.tags[b], m.matched_gt[b]});
      tp += m.tags[b] == MatchTag::kTP;
      fp += m.tags[b] == MatchTag::kFP;
    }
  }
  write_text(o.out, format_match_records(records));
  log("match: " + std::to_string(tp) + " TP, " + std::to_string(fp) + " FP -> " + o.out);
}

struct FeaturesOpts {
  MatchOpts match;
  std::string xc;
};

void run_features(const FeaturesOpts& o) {
  const MatchConfig cfg = o.match.config();
  const auto preds = preds_by_frame(o.match.preds);
  const auto gts = gts_by_frame(o.match.gts);
  std::map<std::string, std::map<std::size_t, XcScores>> xc;
  for (auto& r : parse_xc_records(read_text(o.xc))) xc[r.frame_id][r.box_index] = r.scores;
  std::vector<FeatureRow> rows;
  for (const auto& [frame, dets] : preds) {
    std::vector<std::optional<XcScores>> scores(dets.size());
    const auto it = xc.find(frame);
    for (std::size_t b = 0; b < dets.size(); ++b) {
      if (it == xc.end()) continue;
      const auto s = it->second.find(b);
      if (s != it->second.end()) scores[b] = s->second;
    }
    auto part = feature_rows(dets, lookup(gts, frame), scores, cfg);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_feature_rows(o.match.out, rows);
  log("features: " + std::to_string(rows.size()) + " rows -> " + o.match.out);
}

struct EvalOpts {
  std::string features;
  std::string group_by = "class,points100";
  std::string columns = kDefaultEvalFeatures;
  std::uint64_t seed = 0;
  std::string out;
};

void run_eval(const EvalOpts& o) {
  const auto rows = read_feature_rows(o.features);
  const auto keys = group_keys(rows, split_list(o.group_by));
  const auto cols = split_list(o.columns);
  for (const auto& c : cols) {
    if (c != "random" && !is_feature_column(c)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + c + "'");
    }
  }
  std::vector<TableRow> table;
  for (const auto& key : keys) {
    for (const auto& c : cols) {
      try {
        table.push_back({key.name(), c, evaluate_feature(rows, c, key, o.seed)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateClassBalance && e.code() != ErrorCode::kNoPositives) throw;
        log("eval: skipping group " + key.name() + " (" + e.what() + ")");
        break;
      }
    }
  }
  const std::string text = format_metric_table(table);
  if (o.out.empty() || o.out == "-") {
    std::cout << text;
  } else {
    write_text(o.out, text);
    log("eval: " + std::to_string(table.size()) + " rows -> " + o.out);
  }
}

struct MetaOpts {
  std::string features;
  std::vector<std::string> subsets{"top_score,xc_c_minus,xc_c_plus,xc_s_minus,xc_s_plus"};
  std::string label;  // empty = all classes
  std::uint64_t seed = 0;
  std::string out;
  MetaTrainConfig train;
};

json report_json(const CvReport& r) {
  auto metrics = [](const MetricReport& m) {
    return json{{"auroc", m.auroc}, {"aupr", m.aupr}, {"aupr_op", m.aupr_op}};
  };
  json j;
  j["features"] = r.features;
  j["model"] = r.used_mlp ? "mlp" : "direct";
  j["mean"] = metrics(r.mean);
  j["runs"] = json::array();
  for (const auto& m : r.runs) j["runs"].push_back(metrics(m));
  j["diagnostics"] = {{"runs", r.diagnostics.runs},
                      {"training_rows_noised", r.diagnostics.training_rows_noised},
                      {"validation_rows_in_stats", r.diagnostics.validation_rows_in_stats},
                      {"validation_rows_noised", r.diagnostics.validation_rows_noised}};
  return j;
}

void run_train_meta(const MetaOpts& o, unsigned jobs) {
  auto rows = read_feature_rows(o.features);
  if (!o.label.empty()) std::erase_if(rows, [&](const FeatureRow& r) { return r.pred_label != o.label; });
  MetaTrainConfig cfg = o.train;
  cfg.jobs = jobs;
  json out;
  out["label"] = o.label.empty() ? "all" : o.label;
  out["rows"] = rows.size();
  out["seed"] = o.seed;
  out["protocol"] = {{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size},
                     {"learning_rate", cfg.learning_rate}, {"duplication_factor", cfg.duplication_factor},
                     {"noise_half_width", cfg.noise_half_width}, {"folds", cfg.folds},
                     {"repeats", cfg.repeats}};
  out["subsets"] = json::array();
  for (const auto& s : o.subsets) {
    const CvReport r = cross_validate(rows, split_list(s), cfg, o.seed);
    out["subsets"].push_back(report_json(r));
    char buf[128];
    std::snprintf(buf, sizeof buf, " auroc=%.4f aupr=%.4f aupr_op=%.4f", r.mean.auroc, r.mean.aupr,
                  r.mean.aupr_op);
    log("train-meta: " + s + buf);
  }
  const std::string text = out.dump(2) + "\n";
  if (o.out.empty() || o.out == "-") {
    std::cout << text;
  } else {
    write_text(o.out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation concentration toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file supplying any flag");
  unsigned jobs = default_jobs();
  app.add_option("--jobs,-j", jobs, "Worker threads for per-frame stages")
      ->envname("XCKIT_JOBS")
      ->check(CLI::PositiveNumber);

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  c_synth->add_option("--spec", synth.spec, "Scene spec (JSON); defaults built in");
  c_synth->add_option("--out", synth.out, "Output frame directory")->required();
  c_synth->add_option("--frames,-n", synth.frames, "Number of frames")->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "Override the spec seed");

  AttributeOpts attr;
  auto* c_attr = app.add_subcommand("attribute", "Attribution maps for each prediction's top class");
  c_attr->add_option("--model", attr.model, "Model spec (JSON)")->required();
  c_attr->add_option("--frames", attr.frames, "Frame directory")->required();
  c_attr->add_option("--preds", attr.preds, "Predictions (JSONL); defaults to <frames>/preds.jsonl");
  c_attr->add_option("--method", attr.method, "backprop | ig | ig-nomult")
      ->check(CLI::IsMember({"backprop", "ig", "ig-nomult"}));
  c_attr->add_option("--steps", attr.steps, "IG steps")->check(CLI::PositiveNumber);
  c_attr->add_option("--targets", attr.targets, "Target selection")->check(CLI::IsMember({"top-class"}));
  c_attr->add_option("--out", attr.out, "Output directory")->required();

  XcOpts xc;
  auto* c_xc = app.add_subcommand("xc", "XC scores per prediction");
  c_xc->add_option("--frames", xc.frames, "Frame directory")->required();
  c_xc->add_option("--preds", xc.preds, "Predictions (JSONL); defaults to <frames>/preds.jsonl");
  c_xc->add_option("--attribs", xc.attribs, "Attribution directory")->required();
  c_xc->add_option("--a-thresh", xc.a_thresh, "Significance threshold")->check(CLI::NonNegativeNumber);
  c_xc->add_option("--margin", xc.margin, "Box enlargement in meters")->check(CLI::NonNegativeNumber);
  c_xc->add_option("--out", xc.out, "Output TSV")->required();

  MatchOpts match;
  auto add_match_flags = [](CLI::App* c, MatchOpts& m) {
    c->add_option("--preds", m.preds, "Predictions (JSONL)")->required();
    c->add_option("--gts", m.gts, "Ground truth (JSONL)")->required();
    c->add_option("--score-thresh", m.score_thresh, "Ignore predictions scoring below this");
    c->add_option("--iou", m.iou, "Per-class IoU thresholds, label=value,...");
    c->add_option("--out", m.out, "Output TSV")->required();
  };
  auto* c_match = app.add_subcommand("match", "Tag predictions TP / FP / Ignore");
  add_match_flags(c_match, match);

  FeaturesOpts feats;
  auto* c_feats = app.add_subcommand("features", "Join XC scores and match tags into a feature table");
  add_match_flags(c_feats, feats.match);
  c_feats->add_option("--xc", feats.xc, "XC TSV")->required();

  EvalOpts eval;
  auto* c_eval = app.add_subcommand("eval", "AUROC / AUPR / AUPR_op per group and feature");
  c_eval->add_option("--features", eval.features, "Feature TSV")->required();
  c_eval->add_option("--group-by", eval.group_by, "Comma list from {class, points100}");
  c_eval->add_option("--columns", eval.columns, "Features to score");
  c_eval->add_option("--seed", eval.seed, "Seed of the random baseline");
  c_eval->add_option("--out", eval.out, "Output TSV (- for stdout)");

  MetaOpts meta;
  auto add_meta_flags = [](CLI::App* c, MetaOpts& m) {
    c->add_option("--subset", m.subsets, "Feature subset, comma separated; repeatable");
    c->add_option("--class", m.label, "Restrict to one predicted label");
    c->add_option("--epochs", m.train.epochs);
    c->add_option("--batch-size", m.train.batch_size);
    c->add_option("--lr", m.train.learning_rate);
    c->add_option("--duplicate", m.train.duplication_factor);
    c->add_option("--noise", m.train.noise_half_width);
    c->add_option("--folds", m.train.folds);
    c->add_option("--repeats", m.train.repeats);
  };
  auto* c_meta = app.add_subcommand("train-meta", "Cross-validated MLP meta-classifier");
  c_meta->add_option("--features", meta.features, "Feature TSV")->required();
  c_meta->add_option("--seed", meta.seed, "Seed");
  c_meta->add_option("--out", meta.out, "Report JSON (- for stdout)");
  add_meta_flags(c_meta, meta);

  // The pipeline reuses the stage option structs.
  SynthOpts p_synth;
  AttributeOpts p_attr;
  XcOpts p_xc;
  MatchOpts p_match;
  EvalOpts p_eval;
  MetaOpts p_meta;
  std::string p_out;
  std::uint64_t p_seed = 0;
  auto* c_pipe = app.add_subcommand("pipeline", "Run every stage into one directory");
  c_pipe->add_option("--spec", p_synth.spec, "Scene spec (JSON)");
  c_pipe->add_option("--frames,-n", p_synth.frames, "Number of frames")->check(CLI::PositiveNumber);
  c_pipe->add_option("--out", p_out, "Output directory")->required();
  c_pipe->add_option("--seed", p_seed, "Seed for synthesis, baselines and training");
  c_pipe->add_option("--method", p_attr.method)->check(CLI::IsMember({"backprop", "ig", "ig-nomult"}));
  c_pipe->add_option("--steps", p_attr.steps)->check(CLI::PositiveNumber);
  c_pipe->add_option("--a-thresh", p_xc.a_thresh)->check(CLI::NonNegativeNumber);
  c_pipe->add_option("--margin", p_xc.margin)->check(CLI::NonNegativeNumber);
  c_pipe->add_option("--score-thresh", p_match.score_thresh);
  c_pipe->add_option("--iou", p_match.iou);
  c_pipe->add_option("--group-by", p_eval.group_by);
  add_meta_flags(c_pipe, p_meta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_synth) run_synth(synth, jobs);
    if (*c_attr) run_attribute(attr, jobs);
    if (*c_xc) run_xc(xc, jobs);
    if (*c_match) run_match(match);
    if (*c_feats) run_features(feats);
    if (*c_eval) run_eval(eval);
    if (*c_meta) run_train_meta(meta, jobs);
    if (*c_pipe) {
      const fs::path out(p_out);
      ensure_dir(out);
      p_synth.out = (out / "frames").string();
      if (c_pipe->count("--seed") > 0) p_synth.seed = p_seed;
      run_synth(p_synth, jobs);
      p_attr.model = (out / "frames" / "model.json").string();
      p_attr.frames = p_synth.out;
      p_attr.out = (out / "attribs").string();
      run_attribute(p_attr, jobs);
      p_xc.frames = p_synth.out;
      p_xc.attribs = p_attr.out;
      p_xc.out = (out / "xc.tsv").string();
      run_xc(p_xc, jobs);
      p_match.preds = (out / "frames" / "preds.jsonl").string();
      p_match.gts = (out / "frames" / "gts.jsonl").string();
      p_match.out = (out / "match.tsv").string();
      run_match(p_match);
      FeaturesOpts f{p_match, p_xc.out};
      f.match.out = (out / "features.tsv").string();
      run_features(f);
      p_eval.features = f.match.out;
      p_eval.seed = p_seed;
      p_eval.out = (out / "table.tsv").string();
      run_eval(p_eval);
      p_meta.features = f.match.out;
      p_meta.seed = p_seed;
      p_meta.out = (out / "meta.json").string();
      run_train_meta(p_meta, jobs);
    }
  } catch (const Error& e) {
    std::cerr << "xckit: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "xckit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
