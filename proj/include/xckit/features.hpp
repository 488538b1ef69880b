#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xckit {

// One non-ignored prediction, ready for meta-classification.
// Undefined XC values are stored as 0.0 with the matching *_valid flag false.
struct FeatureRow {
  std::string frame_id;
  std::size_t box_index = 0;
  std::string pred_label;
  double top_score = 0.0;
  double xc_c_minus = 0.0;
  double xc_c_plus = 0.0;
  double xc_s_minus = 0.0;
  double xc_s_plus = 0.0;
  bool xc_c_minus_valid = false;
  bool xc_c_plus_valid = false;
  bool xc_s_minus_valid = false;
  bool xc_s_plus_valid = false;
  std::int64_t n_points = 0;
  double distance = 0.0;
  bool is_tp = false;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

// Numeric feature columns, in canonical order.
inline constexpr std::array<std::string_view, 7> kFeatureColumns = {
    "top_score", "xc_c_minus", "xc_c_plus", "xc_s_minus", "xc_s_plus", "n_points", "distance"};

// The five inputs of the meta-classifier.
inline constexpr std::array<std::string_view, 5> kMetaFeatures = {
    "top_score", "xc_c_minus", "xc_c_plus", "xc_s_minus", "xc_s_plus"};

bool is_feature_column(std::string_view name);
double feature_value(const FeatureRow& row, std::string_view name);
// Validity flag for XC columns; true for every other column.
bool feature_valid(const FeatureRow& row, std::string_view name);

// Sorts names into canonical column order; rejects unknown or repeated names.
std::vector<std::string> canonical_subset(const std::vector<std::string>& names);

std::vector<std::string> split_list(std::string_view text, char sep = ',');

enum class PointsBucket : std::uint8_t { kAny, kBelow100, kAtLeast100 };

std::string to_string(PointsBucket bucket);

struct GroupKey {
  std::optional<std::string> label;  // empty = every class
  PointsBucket points = PointsBucket::kAny;

  bool matches(const FeatureRow& row) const;
  std::string name() const;
};

struct FeatureGroup {
  GroupKey key;
  std::vector<FeatureRow> rows;
};

// {car, pedestrian, cyclist} x {n_points < 100, n_points >= 100}, always in
// that order; other labels follow alphabetically.
std::vector<FeatureGroup> split_groups(const std::vector<FeatureRow>& rows);

// Group keys for an eval "--group-by" list drawn from {class, points100}.
std::vector<GroupKey> group_keys(const std::vector<FeatureRow>& rows,
                                 const std::vector<std::string>& group_by);

}  // namespace xckit
