#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xckit/detection.hpp"

namespace xckit {

struct MatchConfig {
  double score_thresh = 0.1;
  std::map<std::string, double> iou_thresh{{"car", 0.5}, {"pedestrian", 0.25}, {"cyclist", 0.25}};

  void validate() const;
};

// Parses "car=0.5,pedestrian=0.25".
std::map<std::string, double> parse_iou_thresholds(std::string_view text);

enum class MatchTag : std::uint8_t { kTP, kFP, kIgnore };

std::string to_string(MatchTag tag);
MatchTag parse_match_tag(std::string_view text);

struct MatchOutcome {
  std::vector<MatchTag> tags;
  std::vector<std::optional<std::size_t>> matched_gt;  // set for TP only
};

// Per prediction: below score_thresh is Ignore; otherwise TP when the
// highest-IoU ground truth (lowest index on ties) clears the class threshold
// and carries the same label, else FP. Ground truths are not consumed.
MatchOutcome categorize(std::span<const Detection> preds, std::span<const GroundTruth> gts,
                        const MatchConfig& cfg);

}  // namespace xckit
