#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "xckit/attribution.hpp"
#include "xckit/autodiff.hpp"
#include "xckit/error.hpp"
#include "xckit/features.hpp"
#include "xckit/geometry.hpp"
#include "xckit/io.hpp"
#include "xckit/matching.hpp"
#include "xckit/meta.hpp"
#include "xckit/metrics.hpp"
#include "xckit/synth.hpp"
#include "xckit/xc.hpp"

namespace py = pybind11;
using namespace xckit;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  std::vector<float> v(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(v));
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::memcpy(out.mutable_data(), t.data().data(), t.size() * sizeof(float));
  return out;
}

Box3D to_box(const std::vector<double>& v) {
  if (v.size() != 7) throw Error(ErrorCode::kInvalidArgument, "box needs 7 numbers (cx, cy, cz, dx, dy, dz, yaw)");
  Box3D b{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  b.validate();
  return b;
}

py::dict sign_dict(const SignedConcentration& s) {
  py::dict d;
  d["s"] = s.s;
  d["S"] = s.S;
  d["c"] = s.c;
  d["C"] = s.C;
  d["xc_s"] = s.xc_s ? py::cast(*s.xc_s) : py::none();
  d["xc_c"] = s.xc_c ? py::cast(*s.xc_c) : py::none();
  return d;
}

std::vector<ScoredSample> samples(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  std::vector<ScoredSample> v(scores.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {scores[i], labels[i]};
  return v;
}

AttributionTarget target_for(const ModelGraph& m, std::size_t output_index) {
  if (output_index >= shape_size(m.output_shape())) {
    throw Error(ErrorCode::kTargetOutOfRange, "output " + std::to_string(output_index));
  }
  return {0, 0, output_index};
}

py::dict attribution_dict(const AttributionMap& m) {
  py::dict d;
  d["values"] = to_array(m.values);
  d["box_index"] = m.target.box_index;
  d["class_index"] = m.target.class_index;
  d["output_index"] = m.target.output_index;
  d["method"] = to_string(m.method);
  d["ig_steps"] = m.ig_steps;
  d["baseline_id"] = m.baseline_id;
  return d;
}

MetaTrainConfig meta_config(const py::dict& kw) {
  MetaTrainConfig c;
  for (auto [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "epochs") c.epochs = v.cast<std::size_t>();
    else if (key == "batch_size") c.batch_size = v.cast<std::size_t>();
    else if (key == "lr") c.learning_rate = v.cast<double>();
    else if (key == "duplicate") c.duplication_factor = v.cast<std::size_t>();
    else if (key == "noise") c.noise_half_width = v.cast<double>();
    else if (key == "folds") c.folds = v.cast<std::size_t>();
    else if (key == "repeats") c.repeats = v.cast<std::size_t>();
    else if (key == "jobs") c.jobs = v.cast<unsigned>();
    else throw Error(ErrorCode::kInvalidArgument, "unknown training option '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_xckit, m) {
  m.doc() = "Explanation concentration toolkit";

  py::register_exception<Error>(m, "XckitError", PyExc_ValueError);

  py::class_<GridMeta>(m, "GridMeta")
      .def(py::init<>())
      .def(py::init([](std::size_t h, std::size_t w, double ox, double oy, double px) {
             GridMeta g{h, w, ox, oy, px};
             g.validate();
             return g;
           }),
           py::arg("height"), py::arg("width"), py::arg("origin_x"), py::arg("origin_y"), py::arg("pixel_size"))
      .def_readwrite("height", &GridMeta::height)
      .def_readwrite("width", &GridMeta::width)
      .def_readwrite("origin_x", &GridMeta::origin_x)
      .def_readwrite("origin_y", &GridMeta::origin_y)
      .def_readwrite("pixel_size", &GridMeta::pixel_size)
      .def("__repr__", [](const GridMeta& g) {
        return "GridMeta(" + std::to_string(g.height) + "x" + std::to_string(g.width) + ", pixel " +
               format_number(g.pixel_size) + ")";
      });

  py::class_<ModelGraph, std::shared_ptr<ModelGraph>>(m, "Model")
      .def_property_readonly("input_shape", &ModelGraph::input_shape)
      .def_property_readonly("output_shape", &ModelGraph::output_shape)
      .def_property_readonly("parameter_count", &ModelGraph::parameter_count)
      .def("to_json", [](const ModelGraph& g) { return model_spec_to_json(to_spec(g)); });

  m.def("load_model", [](const std::filesystem::path& p) { return std::make_shared<ModelGraph>(load_model(p)); },
        py::arg("path"));
  m.def("model_from_json",
        [](const std::string& text) { return std::make_shared<ModelGraph>(build_model(parse_model_spec(text))); },
        py::arg("text"));

  m.def("forward", [](const ModelGraph& g, const FloatArray& x) { return to_array(forward(g, to_tensor(x))); },
        py::arg("model"), py::arg("x"));

  m.def(
      "backprop_saliency",
      [](const ModelGraph& g, const FloatArray& x, std::size_t output_index) {
        const Tensor t = to_tensor(x);
        AttributionMap map;
        {
          py::gil_scoped_release release;
          map = backprop_saliency(g, t, target_for(g, output_index));
        }
        return to_array(map.values);
      },
      py::arg("model"), py::arg("x"), py::arg("output_index"));

  m.def(
      "integrated_gradients",
      [](const ModelGraph& g, const FloatArray& x, std::optional<FloatArray> baseline, std::size_t output_index,
         std::uint32_t steps, bool multiply_by_input) {
        const Tensor t = to_tensor(x);
        const Tensor base = baseline ? to_tensor(*baseline) : Tensor::zeros(t.shape());
        IgOptions o;
        o.steps = steps;
        if (baseline) o.baseline_id = "custom";
        AttributionMap map;
        {
          py::gil_scoped_release release;
          map = multiply_by_input ? integrated_gradients(g, t, base, o, target_for(g, output_index))
                                  : modified_ig(g, t, base, o, target_for(g, output_index));
        }
        return to_array(map.values);
      },
      py::arg("model"), py::arg("x"), py::arg("baseline") = py::none(), py::arg("output_index") = 0,
      py::arg("steps") = 32, py::arg("multiply_by_input") = true);

  m.def("iou_3d", [](const std::vector<double>& a, const std::vector<double>& b) { return iou_3d(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def("iou_bev", [](const std::vector<double>& a, const std::vector<double>& b) { return iou_bev(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def(
      "membership_mask",
      [](const std::vector<double>& box, const GridMeta& grid, double margin) {
        const Mask mk = membership_mask(project_to_bev(enlarge(to_box(box), margin)), grid);
        py::array_t<bool> out({static_cast<py::ssize_t>(mk.height), static_cast<py::ssize_t>(mk.width)});
        auto* o = out.mutable_data();
        for (std::size_t i = 0; i < mk.bits.size(); ++i) o[i] = mk.bits[i] != 0;
        return out;
      },
      py::arg("box"), py::arg("grid"), py::arg("margin") = 0.2);

  m.def(
      "xc_scores",
      [](const FloatArray& attribution, const std::vector<double>& box, const GridMeta& grid, double a_thresh,
         double margin) {
        AttributionMap map;
        map.values = to_tensor(attribution);
        if (map.values.rank() != 3) throw Error(ErrorCode::kShapeMismatch, "attribution must be (H, W, C)");
        const XcScores s = xc_scores(map, to_box(box), grid, XcConfig{a_thresh, margin});
        py::dict d;
        d["positive"] = sign_dict(s.positive);
        d["negative"] = sign_dict(s.negative);
        return d;
      },
      py::arg("attribution"), py::arg("box"), py::arg("grid"), py::arg("a_thresh") = 0.1, py::arg("margin") = 0.2);

  m.def(
      "categorize",
      [](const std::vector<std::string>& pred_lines, const std::vector<std::string>& gt_lines, double score_thresh,
         std::optional<std::map<std::string, double>> iou_thresh) {
        std::vector<Detection> preds;
        std::vector<GroundTruth> gts;
        for (std::size_t i = 0; i < pred_lines.size(); ++i) preds.push_back(parse_detection(pred_lines[i], i + 1));
        for (std::size_t i = 0; i < gt_lines.size(); ++i) gts.push_back(parse_ground_truth(gt_lines[i], i + 1));
        MatchConfig cfg;
        cfg.score_thresh = score_thresh;
        if (iou_thresh) cfg.iou_thresh = *iou_thresh;
        const MatchOutcome out = categorize(preds, gts, cfg);
        py::list tags, matched;
        for (std::size_t i = 0; i < out.tags.size(); ++i) {
          tags.append(to_string(out.tags[i]));
          matched.append(out.matched_gt[i] ? py::cast(*out.matched_gt[i]) : py::none());
        }
        return py::make_tuple(tags, matched);
      },
      py::arg("preds"), py::arg("gts"), py::arg("score_thresh") = 0.1, py::arg("iou_thresh") = py::none(),
      "Predictions and ground truths are JSON lines in the preds.jsonl / gts.jsonl format.");

  m.def("auroc", [](const std::vector<double>& s, const std::vector<bool>& y) { return auroc(samples(s, y)); },
        py::arg("scores"), py::arg("labels"));
  m.def(
      "aupr",
      [](const std::vector<double>& s, const std::vector<bool>& y, bool fp_positive) {
        return aupr(samples(s, y), fp_positive ? PositiveClass::kFpAsPositive : PositiveClass::kTpAsPositive);
      },
      py::arg("scores"), py::arg("labels"), py::arg("fp_positive") = false);
  m.def("ks_statistic", [](const std::vector<double>& a, const std::vector<double>& b) { return ks_statistic(a, b); },
        py::arg("a"), py::arg("b"));

  m.def(
      "read_xcam", [](const std::filesystem::path& p) { return attribution_dict(read_xcam(p)); }, py::arg("path"));
  m.def(
      "write_xcam",
      [](const std::filesystem::path& p, const FloatArray& values, std::size_t output_index, const std::string& method,
         std::uint32_t ig_steps) {
        AttributionMap map;
        map.values = to_tensor(values);
        map.target.output_index = output_index;
        map.method = parse_attribution_method(method);
        map.ig_steps = ig_steps;
        write_xcam(p, map);
      },
      py::arg("path"), py::arg("values"), py::arg("output_index") = 0, py::arg("method") = "backprop",
      py::arg("ig_steps") = 0);

  m.def(
      "generate_frame",
      [](std::optional<std::string> spec_json, std::size_t index, std::optional<std::uint64_t> seed) {
        SceneSpec spec = spec_json ? parse_scene_spec(*spec_json) : default_scene_spec();
        if (seed) spec.seed = *seed;
        SyntheticFrame f;
        {
          py::gil_scoped_release release;
          f = generate_frame(spec, index);
        }
        py::dict d;
        d["frame_id"] = f.frame_id;
        d["image"] = to_array(f.image.features);
        d["grid"] = f.image.grid;
        py::list preds, gts;
        for (const auto& p : f.preds) preds.append(format_detection(p));
        for (const auto& g : f.gts) gts.append(format_ground_truth(g));
        d["preds"] = preds;
        d["gts"] = gts;
        d["planted_tp"] = f.planted_tp;
        d["model"] = std::const_pointer_cast<ModelGraph>(f.model);
        return d;
      },
      py::arg("spec_json") = py::none(), py::arg("index") = 0, py::arg("seed") = py::none(),
      "Predictions and ground truths come back as JSON lines.");
  m.def("default_scene_spec", [] { return scene_spec_to_json(default_scene_spec()); });

  m.def(
      "cross_validate",
      [](const std::filesystem::path& features, const std::vector<std::string>& subset, std::uint64_t seed,
         const py::kwargs& kw) {
        const auto rows = read_feature_rows(features);
        const MetaTrainConfig cfg = meta_config(kw);
        CvReport r;
        {
          py::gil_scoped_release release;
          r = cross_validate(rows, subset, cfg, seed);
        }
        py::dict d;
        d["features"] = r.features;
        d["model"] = r.used_mlp ? "mlp" : "direct";
        d["auroc"] = r.mean.auroc;
        d["aupr"] = r.mean.aupr;
        d["aupr_op"] = r.mean.aupr_op;
        d["runs"] = r.diagnostics.runs;
        return d;
      },
      py::arg("features"), py::arg("subset"), py::arg("seed") = 0,
      "Repeated stratified k-fold evaluation on a features.tsv table. Training options: epochs, batch_size, lr, "
      "duplicate, noise, folds, repeats, jobs.");
}
