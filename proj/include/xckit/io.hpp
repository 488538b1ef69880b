#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xckit/attribution.hpp"
#include "xckit/detection.hpp"
#include "xckit/features.hpp"
#include "xckit/matching.hpp"
#include "xckit/xc.hpp"

namespace xckit {

// ---- XCAM binary grids (layout documented in docs/formats.md) -----------

inline constexpr std::uint16_t kXcamVersion = 1;
// Method tag for plain tensors such as pseudo images.
inline constexpr std::uint8_t kXcamTensorTag = 255;

std::string encode_xcam(const AttributionMap& map);
AttributionMap decode_xcam(std::string_view bytes);
void write_xcam(const std::filesystem::path& path, const AttributionMap& map);
AttributionMap read_xcam(const std::filesystem::path& path);

std::string encode_tensor_xcam(const Tensor& tensor);
Tensor decode_tensor_xcam(std::string_view bytes);
void write_tensor_xcam(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor_xcam(const std::filesystem::path& path);

// ---- Line-delimited JSON detections and ground truth ---------------------

std::string format_detection(const Detection& d);
Detection parse_detection(std::string_view line, std::size_t line_no);
std::string format_ground_truth(const GroundTruth& g);
GroundTruth parse_ground_truth(std::string_view line, std::size_t line_no);

// Streams records one line at a time; blank lines are skipped.
template <typename Record>
class RecordReader {
 public:
  explicit RecordReader(const std::filesystem::path& path);
  std::optional<Record> next();
  std::size_t line() const noexcept { return line_no_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_no_ = 0;
};

using DetectionReader = RecordReader<Detection>;
using GroundTruthReader = RecordReader<GroundTruth>;

std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, std::span<const Detection> dets);
std::vector<GroundTruth> read_ground_truths(const std::filesystem::path& path);
void write_ground_truths(const std::filesystem::path& path, std::span<const GroundTruth> gts);

// ---- Tab-separated tables ------------------------------------------------

// Shortest text that parses back to the same double.
std::string format_number(double v);

std::string format_feature_rows(std::span<const FeatureRow> rows);
std::vector<FeatureRow> parse_feature_rows(std::string_view text);
void write_feature_rows(const std::filesystem::path& path, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_rows(const std::filesystem::path& path);

struct XcRecord {
  std::string frame_id;
  std::size_t box_index = 0;
  XcScores scores;

  friend bool operator==(const XcRecord&, const XcRecord&) = default;
};

std::string format_xc_records(std::span<const XcRecord> records);
std::vector<XcRecord> parse_xc_records(std::string_view text);

struct MatchRecord {
  std::string frame_id;
  std::size_t box_index = 0;
  MatchTag tag = MatchTag::kFP;
  std::optional<std::size_t> gt_index;

  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

std::string format_match_records(std::span<const MatchRecord> records);
std::vector<MatchRecord> parse_match_records(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace xckit
