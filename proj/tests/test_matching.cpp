#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xckit/error.hpp"
#include "xckit/matching.hpp"

using namespace xckit;
using fixture::error_of;

namespace {

Detection pred(const Box3D& b, const std::string& label, double score) {
  Detection d;
  d.frame_id = "f";
  d.box = b;
  d.label = label;
  for (const auto& l : fixture::kLabels) d.scores.push_back({l, l == label ? score : 0.0});
  return d;
}

const Box3D kUnit{0, 0, 0, 2, 2, 2, 0};

// Shift along x giving an IoU of exactly L / (4 - L) for overlap length L.
Box3D shifted(double dx) { return {dx, 0, 0, 2, 2, 2, 0}; }

}  // namespace

TEST_CASE("score threshold ignores low-confidence predictions, inclusively") {
  const std::vector<GroundTruth> gts = {{"f", kUnit, "car"}};
  const std::vector<Detection> preds = {pred(kUnit, "car", 0.05), pred(kUnit, "car", 0.1)};
  const auto out = categorize(preds, gts, MatchConfig{});
  CHECK(out.tags == std::vector<MatchTag>{MatchTag::kIgnore, MatchTag::kTP});
  CHECK(out.matched_gt[1] == 0u);
  CHECK_FALSE(out.matched_gt[0].has_value());
}

TEST_CASE("class-specific IoU thresholds") {
  // Overlap 1.2 gives IoU 1.2 / 2.8 = 0.43: below the car cut, above the others.
  const Box3D p = shifted(0.8);
  const auto car = categorize(std::vector{pred(p, "car", 0.9)}, std::vector<GroundTruth>{{"f", kUnit, "car"}}, {});
  const auto ped = categorize(std::vector{pred(p, "pedestrian", 0.9)},
                              std::vector<GroundTruth>{{"f", kUnit, "pedestrian"}}, {});
  CHECK(car.tags[0] == MatchTag::kFP);
  CHECK(ped.tags[0] == MatchTag::kTP);
}

TEST_CASE("an IoU exactly at the threshold matches") {
  MatchConfig cfg;
  cfg.iou_thresh["car"] = 1.0 / 3.0;
  // Overlap length 1: intersection 4, union 12.
  const auto out = categorize(std::vector{pred(shifted(1.0), "car", 0.9)},
                              std::vector<GroundTruth>{{"f", kUnit, "car"}}, cfg);
  CHECK(iou_3d(shifted(1.0), kUnit) == 1.0 / 3.0);
  CHECK(out.tags[0] == MatchTag::kTP);
}

TEST_CASE("only the highest-IoU ground truth is considered") {
  // The best overlap is a pedestrian box; a car box overlapping enough is
  // not consulted.
  const std::vector<GroundTruth> gts = {{"f", shifted(0.5), "car"}, {"f", kUnit, "pedestrian"}};
  const auto out = categorize(std::vector{pred(kUnit, "car", 0.9)}, gts, {});
  CHECK(iou_3d(kUnit, gts[0].box) >= 0.5);
  CHECK(out.tags[0] == MatchTag::kFP);
}

TEST_CASE("ties go to the lowest ground-truth index") {
  const std::vector<GroundTruth> gts = {{"f", shifted(1.0), "pedestrian"}, {"f", shifted(-1.0), "car"}};
  MatchConfig cfg;
  cfg.iou_thresh["car"] = 0.3;
  cfg.iou_thresh["pedestrian"] = 0.3;
  const auto out = categorize(std::vector{pred(kUnit, "car", 0.9)}, gts, cfg);
  CHECK(out.tags[0] == MatchTag::kFP);
  const auto out2 = categorize(std::vector{pred(kUnit, "pedestrian", 0.9)}, gts, cfg);
  CHECK(out2.tags[0] == MatchTag::kTP);
  CHECK(out2.matched_gt[0] == 0u);
}

TEST_CASE("several predictions may match one ground truth") {
  const std::vector<GroundTruth> gts = {{"f", kUnit, "car"}};
  const auto out = categorize(std::vector{pred(kUnit, "car", 0.9), pred(shifted(0.1), "car", 0.8)}, gts, {});
  CHECK(out.tags == std::vector<MatchTag>{MatchTag::kTP, MatchTag::kTP});
}

TEST_CASE("no ground truth makes every scored prediction FP") {
  const auto out = categorize(std::vector{pred(kUnit, "cyclist", 0.9)}, std::vector<GroundTruth>{}, {});
  CHECK(out.tags[0] == MatchTag::kFP);
}

TEST_CASE("matching configuration errors") {
  MatchConfig cfg;
  cfg.iou_thresh.clear();
  CHECK(error_of([&] { categorize(std::vector<Detection>{}, std::vector<GroundTruth>{}, cfg); }) ==
        ErrorCode::kEmptyClassThresholds);
  Detection d = pred(kUnit, "car", 0.9);
  d.scores = {{"truck", 0.9}};
  CHECK(error_of([&] { categorize(std::vector{d}, std::vector<GroundTruth>{}, MatchConfig{}); }) ==
        ErrorCode::kUnknownLabel);
  CHECK(parse_iou_thresholds("car=0.7,van=0.5") == std::map<std::string, double>{{"car", 0.7}, {"van", 0.5}});
  CHECK(error_of([] { parse_iou_thresholds("car:0.7"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("categorize agrees with the transcribed loop on random frames") {
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    const auto f = fixture::random_match_frame(rng);
    CHECK(categorize(f.preds, f.gts, MatchConfig{}).tags == oracle::categorize(f.preds, f.gts, MatchConfig{}));
  }
}
