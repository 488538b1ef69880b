#include "xckit/matching.hpp"

#include <charconv>
#include <cmath>

#include "xckit/error.hpp"

namespace xckit {

void MatchConfig::validate() const {
  if (iou_thresh.empty()) throw Error(ErrorCode::kEmptyClassThresholds, "no IoU thresholds");
  if (!(score_thresh >= 0.0 && score_thresh <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "score_thresh must lie in [0, 1]");
  }
  for (const auto& [label, t] : iou_thresh) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "IoU threshold for " + label + " must lie in (0, 1]");
    }
  }
}

std::map<std::string, double> parse_iou_thresholds(std::string_view text) {
  std::map<std::string, double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(ErrorCode::kInvalidArgument, "expected label=value, got '" + std::string(item) + "'");
    }
    const std::string value(item.substr(eq + 1));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad threshold '" + value + "'");
    }
    out[std::string(item.substr(0, eq))] = v;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string to_string(MatchTag tag) {
  switch (tag) {
    case MatchTag::kTP: return "TP";
    case MatchTag::kFP: return "FP";
    case MatchTag::kIgnore: return "Ignore";
  }
  return "?";
}

MatchTag parse_match_tag(std::string_view text) {
  if (text == "TP") return MatchTag::kTP;
  if (text == "FP") return MatchTag::kFP;
  if (text == "Ignore") return MatchTag::kIgnore;
  throw Error(ErrorCode::kParseError, "unknown match tag '" + std::string(text) + "'");
}

MatchOutcome categorize(std::span<const Detection> preds, std::span<const GroundTruth> gts,
                        const MatchConfig& cfg) {
  cfg.validate();
  MatchOutcome out;
  out.tags.reserve(preds.size());
  out.matched_gt.reserve(preds.size());
  for (const Detection& pred : preds) {
    const std::string& label = pred.top_label();
    const auto thresh = cfg.iou_thresh.find(label);
    if (thresh == cfg.iou_thresh.end()) {
      throw Error(ErrorCode::kUnknownLabel, "no IoU threshold for label '" + label + "'");
    }
    if (pred.top_score() < cfg.score_thresh) {
      out.tags.push_back(MatchTag::kIgnore);
      out.matched_gt.push_back(std::nullopt);
      continue;
    }
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = iou_3d(pred.box, gts[g].box);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best && best_iou >= thresh->second && gts[*best].label == label) {
      out.tags.push_back(MatchTag::kTP);
      out.matched_gt.push_back(best);
    } else {
      out.tags.push_back(MatchTag::kFP);
      out.matched_gt.push_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace xckit
