#include "xckit/features.hpp"

#include <algorithm>
#include <set>

#include "xckit/error.hpp"

namespace xckit {

namespace {

const std::vector<std::string>& standard_labels() {
  static const std::vector<std::string> labels = {"car", "pedestrian", "cyclist"};
  return labels;
}

std::vector<std::string> ordered_labels(const std::vector<FeatureRow>& rows) {
  std::vector<std::string> out = standard_labels();
  std::set<std::string> extra;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.pred_label) == out.end()) extra.insert(r.pred_label);
  }
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

}  // namespace

bool is_feature_column(std::string_view name) {
  return std::find(kFeatureColumns.begin(), kFeatureColumns.end(), name) != kFeatureColumns.end();
}

double feature_value(const FeatureRow& row, std::string_view name) {
  if (name == "top_score") return row.top_score;
  if (name == "xc_c_minus") return row.xc_c_minus;
  if (name == "xc_c_plus") return row.xc_c_plus;
  if (name == "xc_s_minus") return row.xc_s_minus;
  if (name == "xc_s_plus") return row.xc_s_plus;
  if (name == "n_points") return static_cast<double>(row.n_points);
  if (name == "distance") return row.distance;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + std::string(name) + "'");
}

bool feature_valid(const FeatureRow& row, std::string_view name) {
  if (name == "xc_c_minus") return row.xc_c_minus_valid;
  if (name == "xc_c_plus") return row.xc_c_plus_valid;
  if (name == "xc_s_minus") return row.xc_s_minus_valid;
  if (name == "xc_s_plus") return row.xc_s_plus_valid;
  return true;
}

std::vector<std::string> canonical_subset(const std::vector<std::string>& names) {
  if (names.empty()) throw Error(ErrorCode::kInvalidArgument, "empty feature subset");
  std::vector<std::string> out;
  for (std::string_view col : kFeatureColumns) {
    const auto n = std::count(names.begin(), names.end(), col);
    if (n > 1) throw Error(ErrorCode::kInvalidArgument, "feature '" + std::string(col) + "' repeated");
    if (n == 1) out.emplace_back(col);
  }
  for (const auto& n : names) {
    if (!is_feature_column(n)) throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + n + "'");
  }
  return out;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto pos = text.find(sep);
    std::string item(text.substr(0, pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

std::string to_string(PointsBucket bucket) {
  switch (bucket) {
    case PointsBucket::kAny: return "all";
    case PointsBucket::kBelow100: return "<100";
    case PointsBucket::kAtLeast100: return ">=100";
  }
  return "?";
}

bool GroupKey::matches(const FeatureRow& row) const {
  if (label && row.pred_label != *label) return false;
  switch (points) {
    case PointsBucket::kAny: return true;
    case PointsBucket::kBelow100: return row.n_points < 100;
    case PointsBucket::kAtLeast100: return row.n_points >= 100;
  }
  return false;
}

std::string GroupKey::name() const {
  std::string out = label ? *label : std::string("all");
  if (points != PointsBucket::kAny) out += "/" + to_string(points);
  return out;
}

std::vector<FeatureGroup> split_groups(const std::vector<FeatureRow>& rows) {
  std::vector<FeatureGroup> groups;
  for (const auto& label : ordered_labels(rows)) {
    for (PointsBucket b : {PointsBucket::kBelow100, PointsBucket::kAtLeast100}) {
      FeatureGroup g{{label, b}, {}};
      for (const auto& r : rows) {
        if (g.key.matches(r)) g.rows.push_back(r);
      }
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

std::vector<GroupKey> group_keys(const std::vector<FeatureRow>& rows,
                                 const std::vector<std::string>& group_by) {
  bool by_class = false, by_points = false;
  for (const auto& g : group_by) {
    if (g == "class") {
      by_class = true;
    } else if (g == "points100") {
      by_points = true;
    } else if (g != "none" && g != "all") {
      throw Error(ErrorCode::kInvalidArgument, "unknown grouping '" + g + "'");
    }
  }
  std::vector<std::optional<std::string>> labels = {std::nullopt};
  if (by_class) {
    for (const auto& l : ordered_labels(rows)) labels.emplace_back(l);
  }
  std::vector<PointsBucket> buckets = {PointsBucket::kAny};
  if (by_points) {
    buckets.push_back(PointsBucket::kBelow100);
    buckets.push_back(PointsBucket::kAtLeast100);
  }
  std::vector<GroupKey> keys;
  for (const auto& l : labels) {
    for (PointsBucket b : buckets) keys.push_back({l, b});
  }
  return keys;
}

}  // namespace xckit
