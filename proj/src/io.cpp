#include "xckit/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "xckit/error.hpp"

namespace xckit {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kMagic = "XCAM";
constexpr std::size_t kHeaderBytes = 4 + 2 + 3 * 4;

// ---- little-endian primitives ----

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(std::string_view bytes, ErrorCode short_code)
      : bytes_(bytes), short_code_(short_code) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw Error(short_code_, std::string(what) + " needs " + std::to_string(n) +
                                   " bytes at offset " + std::to_string(pos_) + ", " +
                                   std::to_string(remaining()) + " left");
    }
  }

  std::uint8_t u8(std::string_view what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::uint16_t u16(std::string_view what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes_[pos_++]) << (8 * i));
    return v;
  }

  std::uint32_t u32(std::string_view what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }

  std::string_view take(std::size_t n, std::string_view what) {
    need(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view bytes_;
  ErrorCode short_code_;
  std::size_t pos_ = 0;
};

std::string encode_grid(const Tensor& t, std::uint8_t tag) {
  if (t.rank() != 3) throw Error(ErrorCode::kShapeMismatch, "XCAM stores (H, W, C) grids");
  std::string out;
  out.reserve(kHeaderBytes + 4 * t.size() + 32);
  out += kMagic;
  put_u16(out, kXcamVersion);
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  put_u8(out, tag);
  return out;
}

// Reads header and payload; leaves the reader at the metadata block.
Tensor decode_grid(ByteReader& r) {
  const auto magic = r.take(4, "magic");
  if (magic != kMagic) throw Error(ErrorCode::kBadMagic, "expected XCAM at offset 0");
  const std::uint16_t version = r.u16("version");
  if (version != kXcamVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "version " + std::to_string(version) + " at offset 4");
  }
  const std::uint32_t h = r.u32("height"), w = r.u32("width"), c = r.u32("channels");
  const std::uint64_t n = std::uint64_t{h} * w * c;
  if (r.remaining() / 4 < n) {
    throw Error(ErrorCode::kTruncatedPayload,
                "payload of " + std::to_string(n) + " floats starting at offset " +
                    std::to_string(r.offset()) + " has only " + std::to_string(r.remaining()) +
                    " bytes");
  }
  std::vector<float> values(n);
  for (auto& v : values) {
    const std::size_t at = r.offset();
    v = std::bit_cast<float>(r.u32("payload"));
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kParseError, "non-finite value at offset " + std::to_string(at));
    }
  }
  return Tensor({h, w, c}, std::move(values));
}

void expect_end(const ByteReader& r) {
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kParseError, std::to_string(r.remaining()) +
                                            " trailing bytes at offset " + std::to_string(r.offset()));
  }
}

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---- JSON line records ----

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + what);
}

ojson parse_line(std::string_view line, std::size_t line_no) {
  try {
    return ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    line_error(line_no, e.what());
  }
}

ojson box_json(const Box3D& b) { return ojson::array({b.cx, b.cy, b.cz, b.dx, b.dy, b.dz, b.yaw}); }

Box3D box_from_json(const ojson& j, std::size_t line_no) {
  if (!j.is_array() || j.size() != 7) {
    line_error(line_no, "box must have 7 numbers (cx, cy, cz, dx, dy, dz, yaw), got " +
                            std::to_string(j.is_array() ? j.size() : 0));
  }
  std::array<double, 7> v{};
  for (std::size_t i = 0; i < 7; ++i) {
    if (!j[i].is_number()) line_error(line_no, "box element " + std::to_string(i) + " is not a number");
    v[i] = j[i].get<double>();
  }
  Box3D b{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  try {
    b.validate();
  } catch (const Error& e) {
    line_error(line_no, e.what());
  }
  return b;
}

template <typename T>
T field(const ojson& j, const char* name, std::size_t line_no) {
  if (!j.contains(name)) line_error(line_no, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const ojson::exception&) {
    line_error(line_no, std::string("field '") + name + "' has the wrong type");
  }
}

// ---- TSV helpers ----

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct TsvLine {
  std::size_t line_no;
  std::vector<std::string_view> fields;
};

std::vector<TsvLine> parse_tsv(std::string_view text, std::string_view header) {
  std::vector<TsvLine> out;
  const std::size_t n_cols = split_tabs(header).size();
  std::size_t line_no = 0;
  bool seen_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) line_error(line_no, "unexpected header; expected '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != n_cols) {
      line_error(line_no, "expected " + std::to_string(n_cols) + " fields, got " +
                              std::to_string(fields.size()));
    }
    out.push_back({line_no, std::move(fields)});
  }
  if (!seen_header) throw Error(ErrorCode::kParseError, "missing header line");
  return out;
}

double parse_double(std::string_view s, std::size_t line_no, std::string_view col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    line_error(line_no, "column " + std::string(col) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line_no, std::string_view col) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    line_error(line_no, "column " + std::string(col) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_index(std::string_view s, std::size_t line_no, std::string_view col) {
  const auto v = parse_int(s, line_no, col);
  if (v < 0) line_error(line_no, "column " + std::string(col) + ": negative index");
  return static_cast<std::size_t>(v);
}

bool parse_bool(std::string_view s, std::size_t line_no, std::string_view col) {
  if (s == "1") return true;
  if (s == "0") return false;
  line_error(line_no, "column " + std::string(col) + ": expected 0 or 1, got '" + std::string(s) + "'");
}

std::optional<double> parse_optional(std::string_view s, std::size_t line_no, std::string_view col) {
  if (s == "NA") return std::nullopt;
  return parse_double(s, line_no, col);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

constexpr std::string_view kFeatureHeader =
    "frame_id\tbox_index\tpred_label\ttop_score\txc_c_minus\txc_c_plus\txc_s_minus\txc_s_plus\t"
    "xc_c_minus_valid\txc_c_plus_valid\txc_s_minus_valid\txc_s_plus_valid\tn_points\tdistance\tis_tp";

constexpr std::string_view kXcHeader =
    "frame_id\tbox_index\ts_plus\tS_plus\tc_plus\tC_plus\txc_s_plus\txc_c_plus\t"
    "s_minus\tS_minus\tc_minus\tC_minus\txc_s_minus\txc_c_minus";

constexpr std::string_view kMatchHeader = "frame_id\tbox_index\ttag\tgt_index";

}  // namespace

// ---- XCAM ----

std::string encode_xcam(const AttributionMap& map) {
  std::string out = encode_grid(map.values, static_cast<std::uint8_t>(map.method));
  put_u32(out, static_cast<std::uint32_t>(map.target.box_index));
  put_u32(out, static_cast<std::uint32_t>(map.target.class_index));
  put_u32(out, static_cast<std::uint32_t>(map.target.output_index));
  put_u32(out, map.ig_steps);
  put_u16(out, static_cast<std::uint16_t>(map.baseline_id.size()));
  out += map.baseline_id;
  return out;
}

AttributionMap decode_xcam(std::string_view bytes) {
  ByteReader r(bytes, ErrorCode::kTruncatedPayload);
  AttributionMap map;
  map.values = decode_grid(r);
  const std::size_t tag_at = r.offset();
  const std::uint8_t tag = r.u8("method tag");
  if (tag > static_cast<std::uint8_t>(AttributionMethod::kIgNoInputMult)) {
    throw Error(ErrorCode::kParseError, "unknown method tag " + std::to_string(tag) + " at offset " +
                                            std::to_string(tag_at));
  }
  map.method = static_cast<AttributionMethod>(tag);
  map.target.box_index = r.u32("box index");
  map.target.class_index = r.u32("class index");
  map.target.output_index = r.u32("output index");
  map.ig_steps = r.u32("ig steps");
  const std::uint16_t len = r.u16("baseline id length");
  map.baseline_id = std::string(r.take(len, "baseline id"));
  expect_end(r);
  return map;
}

void write_xcam(const std::filesystem::path& path, const AttributionMap& map) {
  write_binary(path, encode_xcam(map));
}

AttributionMap read_xcam(const std::filesystem::path& path) {
  try {
    return decode_xcam(read_binary(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

std::string encode_tensor_xcam(const Tensor& tensor) { return encode_grid(tensor, kXcamTensorTag); }

Tensor decode_tensor_xcam(std::string_view bytes) {
  ByteReader r(bytes, ErrorCode::kTruncatedPayload);
  Tensor t = decode_grid(r);
  const std::size_t tag_at = r.offset();
  if (r.u8("tensor tag") != kXcamTensorTag) {
    throw Error(ErrorCode::kParseError, "expected tensor tag at offset " + std::to_string(tag_at));
  }
  expect_end(r);
  return t;
}

void write_tensor_xcam(const std::filesystem::path& path, const Tensor& tensor) {
  write_binary(path, encode_tensor_xcam(tensor));
}

Tensor read_tensor_xcam(const std::filesystem::path& path) {
  try {
    return decode_tensor_xcam(read_binary(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

// ---- detections ----

std::string format_detection(const Detection& d) {
  ojson j;
  j["frame_id"] = d.frame_id;
  j["box"] = box_json(d.box);
  j["pred_label"] = d.top_label();
  ojson scores = ojson::object();
  for (const auto& s : d.scores) scores[s.label] = s.score;
  j["scores"] = std::move(scores);
  j["n_points"] = d.n_points;
  if (d.distance) j["distance"] = *d.distance;
  if (d.anchor) j["anchor"] = *d.anchor;
  return j.dump();
}

Detection parse_detection(std::string_view line, std::size_t line_no) {
  const ojson j = parse_line(line, line_no);
  if (!j.is_object()) line_error(line_no, "expected a JSON object");
  Detection d;
  d.frame_id = field<std::string>(j, "frame_id", line_no);
  if (!j.contains("box")) line_error(line_no, "missing field 'box'");
  d.box = box_from_json(j["box"], line_no);
  d.label = field<std::string>(j, "pred_label", line_no);
  if (j.contains("scores")) {
    const auto& s = j["scores"];
    if (!s.is_object()) line_error(line_no, "scores must map label to score");
    for (const auto& [label, value] : s.items()) {
      if (!value.is_number()) line_error(line_no, "score for " + label + " is not a number");
      d.scores.push_back({label, value.get<double>()});
    }
  }
  d.n_points = j.contains("n_points") ? field<std::int64_t>(j, "n_points", line_no) : 0;
  if (d.n_points < 0) line_error(line_no, "n_points must be >= 0");
  if (j.contains("distance")) d.distance = field<double>(j, "distance", line_no);
  if (j.contains("anchor")) d.anchor = field<std::size_t>(j, "anchor", line_no);
  return d;
}

std::string format_ground_truth(const GroundTruth& g) {
  ojson j;
  j["frame_id"] = g.frame_id;
  j["box"] = box_json(g.box);
  j["label"] = g.label;
  return j.dump();
}

GroundTruth parse_ground_truth(std::string_view line, std::size_t line_no) {
  const ojson j = parse_line(line, line_no);
  if (!j.is_object()) line_error(line_no, "expected a JSON object");
  GroundTruth g;
  g.frame_id = field<std::string>(j, "frame_id", line_no);
  if (!j.contains("box")) line_error(line_no, "missing field 'box'");
  g.box = box_from_json(j["box"], line_no);
  g.label = field<std::string>(j, "label", line_no);
  return g;
}

template <typename Record>
RecordReader<Record>::RecordReader(const std::filesystem::path& path)
    : in_(path), path_(path.string()) {
  if (!in_) throw Error(ErrorCode::kIo, "cannot open " + path_);
}

template <typename Record>
std::optional<Record> RecordReader<Record>::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      if constexpr (std::is_same_v<Record, Detection>) {
        return parse_detection(line, line_no_);
      } else {
        return parse_ground_truth(line, line_no_);
      }
    } catch (const Error& e) {
      throw Error(e.code(), path_ + ": " + e.message());
    }
  }
  return std::nullopt;
}

template class RecordReader<Detection>;
template class RecordReader<GroundTruth>;

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  DetectionReader reader(path);
  std::vector<Detection> out;
  while (auto d = reader.next()) out.push_back(std::move(*d));
  return out;
}

void write_detections(const std::filesystem::path& path, std::span<const Detection> dets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& d : dets) out << format_detection(d) << '\n';
}

std::vector<GroundTruth> read_ground_truths(const std::filesystem::path& path) {
  GroundTruthReader reader(path);
  std::vector<GroundTruth> out;
  while (auto g = reader.next()) out.push_back(std::move(*g));
  return out;
}

void write_ground_truths(const std::filesystem::path& path, std::span<const GroundTruth> gts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& g : gts) out << format_ground_truth(g) << '\n';
}

// ---- tables ----

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_feature_rows(std::span<const FeatureRow> rows) {
  std::string out(kFeatureHeader);
  out += '\n';
  auto b = [](bool v) { return v ? "1" : "0"; };
  for (const auto& r : rows) {
    out += r.frame_id + '\t' + std::to_string(r.box_index) + '\t' + r.pred_label + '\t' +
           format_number(r.top_score) + '\t' + format_number(r.xc_c_minus) + '\t' +
           format_number(r.xc_c_plus) + '\t' + format_number(r.xc_s_minus) + '\t' +
           format_number(r.xc_s_plus) + '\t' + b(r.xc_c_minus_valid) + '\t' + b(r.xc_c_plus_valid) +
           '\t' + b(r.xc_s_minus_valid) + '\t' + b(r.xc_s_plus_valid) + '\t' +
           std::to_string(r.n_points) + '\t' + format_number(r.distance) + '\t' + b(r.is_tp) + '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_feature_rows(std::string_view text) {
  std::vector<FeatureRow> rows;
  const auto cols = split_tabs(kFeatureHeader);
  for (const auto& [n, f] : parse_tsv(text, kFeatureHeader)) {
    FeatureRow r;
    r.frame_id = std::string(f[0]);
    r.box_index = parse_index(f[1], n, cols[1]);
    r.pred_label = std::string(f[2]);
    r.top_score = parse_double(f[3], n, cols[3]);
    r.xc_c_minus = parse_double(f[4], n, cols[4]);
    r.xc_c_plus = parse_double(f[5], n, cols[5]);
    r.xc_s_minus = parse_double(f[6], n, cols[6]);
    r.xc_s_plus = parse_double(f[7], n, cols[7]);
    r.xc_c_minus_valid = parse_bool(f[8], n, cols[8]);
    r.xc_c_plus_valid = parse_bool(f[9], n, cols[9]);
    r.xc_s_minus_valid = parse_bool(f[10], n, cols[10]);
    r.xc_s_plus_valid = parse_bool(f[11], n, cols[11]);
    r.n_points = parse_int(f[12], n, cols[12]);
    r.distance = parse_double(f[13], n, cols[13]);
    r.is_tp = parse_bool(f[14], n, cols[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_feature_rows(const std::filesystem::path& path, std::span<const FeatureRow> rows) {
  write_text(path, format_feature_rows(rows));
}

std::vector<FeatureRow> read_feature_rows(const std::filesystem::path& path) {
  try {
    return parse_feature_rows(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

std::string format_xc_records(std::span<const XcRecord> records) {
  std::string out(kXcHeader);
  out += '\n';
  auto sign = [](const SignedConcentration& s) {
    return format_number(s.s) + '\t' + format_number(s.S) + '\t' + std::to_string(s.c) + '\t' +
           std::to_string(s.C) + '\t' + format_optional(s.xc_s) + '\t' + format_optional(s.xc_c);
  };
  for (const auto& r : records) {
    out += r.frame_id + '\t' + std::to_string(r.box_index) + '\t' + sign(r.scores.positive) + '\t' +
           sign(r.scores.negative) + '\n';
  }
  return out;
}

std::vector<XcRecord> parse_xc_records(std::string_view text) {
  std::vector<XcRecord> out;
  const auto cols = split_tabs(kXcHeader);
  for (const auto& [n, f] : parse_tsv(text, kXcHeader)) {
    XcRecord r;
    r.frame_id = std::string(f[0]);
    r.box_index = parse_index(f[1], n, cols[1]);
    for (int k = 0; k < 2; ++k) {
      const std::size_t o = 2 + 6 * static_cast<std::size_t>(k);
      SignedConcentration& s = k == 0 ? r.scores.positive : r.scores.negative;
      s.s = parse_double(f[o], n, cols[o]);
      s.S = parse_double(f[o + 1], n, cols[o + 1]);
      s.c = parse_index(f[o + 2], n, cols[o + 2]);
      s.C = parse_index(f[o + 3], n, cols[o + 3]);
      s.xc_s = parse_optional(f[o + 4], n, cols[o + 4]);
      s.xc_c = parse_optional(f[o + 5], n, cols[o + 5]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_match_records(std::span<const MatchRecord> records) {
  std::string out(kMatchHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.frame_id + '\t' + std::to_string(r.box_index) + '\t' + to_string(r.tag) + '\t' +
           (r.gt_index ? std::to_string(*r.gt_index) : std::string("-")) + '\n';
  }
  return out;
}

std::vector<MatchRecord> parse_match_records(std::string_view text) {
  std::vector<MatchRecord> out;
  const auto cols = split_tabs(kMatchHeader);
  for (const auto& [n, f] : parse_tsv(text, kMatchHeader)) {
    MatchRecord r;
    r.frame_id = std::string(f[0]);
    r.box_index = parse_index(f[1], n, cols[1]);
    try {
      r.tag = parse_match_tag(f[2]);
    } catch (const Error& e) {
      line_error(n, e.what());
    }
    if (f[3] != "-") r.gt_index = parse_index(f[3], n, cols[3]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace xckit
