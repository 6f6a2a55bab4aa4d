#include "oobnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oobnet/checkpoint.hpp"

namespace oobnet {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Reads one unsigned decimal header token, skipping whitespace and comments.
int read_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos,
                    const char* what) {
  while (pos < bytes.size()) {
    if (is_space(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  long long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1 << 24)) {
      throw Error(ErrorCode::kBadHeader, std::string("ppm ") + what + " too large");
    }
    ++pos;
  }
  if (pos == start) {
    throw Error(ErrorCode::kBadHeader, std::string("ppm header: missing ") + what);
  }
  return static_cast<int>(value);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::pair<std::string_view, std::string_view> split_pair(std::string_view line,
                                                         std::size_t line_no) {
  const auto comma = line.find(',');
  if (comma == std::string_view::npos) {
    throw Error(ErrorCode::kBadCsv,
                "line " + std::to_string(line_no) + ": expected two fields");
  }
  return {trim(line.substr(0, comma)), trim(line.substr(comma + 1))};
}

std::int64_t parse_int(std::string_view field, std::size_t line_no,
                       const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kBadCsv, "line " + std::to_string(line_no) + ": " +
                                        what + " '" + std::string(field) +
                                        "' is not an integer");
  }
  return v;
}

void expect_header(std::string_view line, std::string_view header) {
  if (line != header) {
    throw Error(ErrorCode::kBadCsv, "expected header '" + std::string(header) +
                                        "', got '" + std::string(line) + "'");
  }
}

std::string video_id_of(const std::filesystem::path& dir) {
  auto p = dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

std::string format_minutes(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::kBadMagic, "not a binary PPM (expected P6)");
  }
  std::size_t pos = 2;
  if (pos >= bytes.size() || !(is_space(bytes[pos]) || bytes[pos] == '#')) {
    throw Error(ErrorCode::kBadMagic, "not a binary PPM (expected P6)");
  }
  const int width = read_header_int(bytes, pos, "width");
  const int height = read_header_int(bytes, pos, "height");
  const int maxval = read_header_int(bytes, pos, "maxval");
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kBadHeader, "ppm dimensions must be positive");
  }
  if (maxval != 255) {
    throw Error(ErrorCode::kBadMaxval,
                "ppm maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw Error(ErrorCode::kBadHeader, "ppm header must end in one whitespace byte");
  }
  ++pos;
  Image image(width, height);
  const std::size_t need = image.pixels.size();
  if (bytes.size() - pos < need) {
    throw Error(ErrorCode::kShortData,
                "ppm " + std::to_string(width) + "x" + std::to_string(height) +
                    " needs " + std::to_string(need) + " data bytes, has " +
                    std::to_string(bytes.size() - pos));
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need,
              image.pixels.begin());
  return image;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Image read_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMissingFile) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_ppm(image));
}

Image resize_bilinear(const Image& src, int out_width, int out_height) {
  if (src.width < 1 || src.height < 1 || out_width < 1 || out_height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "resize: empty image");
  }
  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double s = (o + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(s));
      t[o] = {lo, std::min(lo + 1, in - 1), s - lo};
    }
    return t;
  };
  const auto xs = taps(src.width, out_width);
  const auto ys = taps(src.height, out_height);
  Image dst(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = xs[x];
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.at(tx.lo, ty.lo, ch) * (1.0 - tx.frac) +
                           src.at(tx.hi, ty.lo, ch) * tx.frac;
        const double bottom = src.at(tx.lo, ty.hi, ch) * (1.0 - tx.frac) +
                              src.at(tx.hi, ty.hi, ch) * tx.frac;
        const double v = top * (1.0 - ty.frac) + bottom * ty.frac;
        dst.at(x, y, ch) =
            static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return dst;
}

std::vector<ManifestRow> parse_manifest_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kBadCsv, "manifest is empty");
  expect_header(lines[0], "timestamp_ms,path");
  std::vector<ManifestRow> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [ts, path] = split_pair(lines[i], i + 1);
    ManifestRow row{parse_int(ts, i + 1, "timestamp_ms"), std::string(path)};
    if (row.timestamp_ms < 0) {
      throw Error(ErrorCode::kBadCsv,
                  "line " + std::to_string(i + 1) + ": negative timestamp");
    }
    if (row.path.empty()) {
      throw Error(ErrorCode::kBadCsv, "line " + std::to_string(i + 1) + ": empty path");
    }
    if (!rows.empty() && row.timestamp_ms <= rows.back().timestamp_ms) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "line " + std::to_string(i + 1) + ": timestamp " +
                      std::to_string(row.timestamp_ms) + " does not increase");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "manifest has no frames");
  return rows;
}

std::string manifest_csv(std::span<const ManifestRow> rows) {
  std::string out = "timestamp_ms,path\n";
  for (const auto& r : rows) {
    out += std::to_string(r.timestamp_ms) + "," + r.path + "\n";
  }
  return out;
}

std::vector<std::size_t> sample_1fps(std::span<const ManifestRow> rows) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "sample_1fps: empty manifest");
  }
  std::vector<std::size_t> picked;
  const std::int64_t last_second = rows.back().timestamp_ms / 1000;
  std::size_t cursor = 0;
  for (std::int64_t s = 0; s <= last_second; ++s) {
    const std::int64_t target = s * 1000;
    // Advance to the first row at or after the target.
    while (cursor < rows.size() && rows[cursor].timestamp_ms < target) ++cursor;
    std::size_t best;
    if (cursor == rows.size()) {
      best = rows.size() - 1;
    } else if (cursor == 0) {
      best = 0;
    } else {
      const std::int64_t before = target - rows[cursor - 1].timestamp_ms;
      const std::int64_t after = rows[cursor].timestamp_ms - target;
      best = before <= after ? cursor - 1 : cursor;
    }
    if (picked.empty() || picked.back() != best) picked.push_back(best);
  }
  return picked;
}

Labels load_annotations(std::string_view csv, std::size_t expected_count) {
  const auto lines = split_lines(csv);
  if (lines.empty()) throw Error(ErrorCode::kBadCsv, "annotation file is empty");
  expect_header(lines[0], "frame_index,label");
  Labels labels(expected_count, 0);
  std::vector<bool> seen(expected_count, false);
  std::size_t rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto [idx_field, label_field] = split_pair(lines[i], i + 1);
    const std::int64_t idx = parse_int(idx_field, i + 1, "frame_index");
    if (label_field != "0" && label_field != "1") {
      throw Error(ErrorCode::kNonBinaryLabel,
                  "line " + std::to_string(i + 1) + ": label '" +
                      std::string(label_field) + "' is not 0 or 1");
    }
    if (idx < 0 || static_cast<std::size_t>(idx) >= expected_count) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "line " + std::to_string(i + 1) + ": frame_index " +
                      std::to_string(idx) + " outside [0, " +
                      std::to_string(expected_count) + ")");
    }
    if (seen[idx]) {
      throw Error(ErrorCode::kDuplicateIndex,
                  "line " + std::to_string(i + 1) + ": frame_index " +
                      std::to_string(idx) + " repeated");
    }
    seen[idx] = true;
    labels[idx] = label_field == "1" ? 1 : 0;
    ++rows;
  }
  if (rows != expected_count) {
    throw Error(ErrorCode::kCountMismatch,
                std::to_string(rows) + " annotated frames, expected " +
                    std::to_string(expected_count));
  }
  return labels;
}

std::string annotations_csv(std::span<const std::uint8_t> labels) {
  std::string out = "frame_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += std::to_string(i) + "," + (labels[i] ? "1" : "0") + "\n";
  }
  return out;
}

void AnnotatedSequence::append_frame(const Image& image) {
  if (image.width != frame_size || image.height != frame_size) {
    throw Error(ErrorCode::kShapeMismatch,
                "frame is " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + ", sequence expects " +
                    std::to_string(frame_size));
  }
  const std::size_t plane = static_cast<std::size_t>(frame_size) * frame_size;
  const std::size_t base = pixels.size();
  pixels.resize(base + 3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      pixels[base + ch * plane + i] = image.pixels[i * 3 + ch];
    }
  }
}

template <typename T>
Tensor<T> AnnotatedSequence::clip(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > num_frames()) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip [" + std::to_string(begin) + ", " + std::to_string(end) +
                    ") outside " + std::to_string(num_frames()) + " frames");
  }
  const std::size_t per = frame_pixels();
  Tensor<T> out({static_cast<std::int64_t>(end - begin), 3, frame_size, frame_size});
  const std::uint8_t* src = pixels.data() + begin * per;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(src[i]) / T(255);
  }
  return out;
}

template TensorF AnnotatedSequence::clip<float>(std::size_t, std::size_t) const;
template TensorD AnnotatedSequence::clip<double>(std::size_t, std::size_t) const;

void append_preprocessed(AnnotatedSequence& seq, const Image& image) {
  if (image.width == seq.frame_size && image.height == seq.frame_size) {
    seq.append_frame(image);
  } else {
    seq.append_frame(resize_bilinear(image, seq.frame_size, seq.frame_size));
  }
}

std::vector<std::filesystem::path> VideoRecord::sampled_frame_paths() const {
  std::vector<std::filesystem::path> out;
  out.reserve(sampled.size());
  for (auto i : sampled) out.push_back(dir / manifest.rows[i].path);
  return out;
}

std::vector<ManifestRow> VideoRecord::sampled_rows() const {
  std::vector<ManifestRow> out;
  out.reserve(sampled.size());
  for (auto i : sampled) out.push_back(manifest.rows[i]);
  return out;
}

VideoRecord index_video(const std::filesystem::path& dir,
                        const std::string& center_id, bool require_labels) {
  VideoRecord v;
  v.dir = dir;
  v.manifest.video_id = video_id_of(dir);
  v.manifest.center_id = center_id;
  try {
    v.manifest.rows = parse_manifest_csv(read_text_file(dir / "manifest.csv"));
    v.sampled = sample_1fps(v.manifest.rows);
    const auto labels_path = dir / "labels.csv";
    if (std::filesystem::exists(labels_path)) {
      v.labels = load_annotations(read_text_file(labels_path), v.sampled.size());
    } else if (require_labels) {
      throw Error(ErrorCode::kMissingFile, labels_path.string() + " not found");
    }
  } catch (const Error& e) {
    throw Error(e.code(), "video " + dir.string() + ": " + e.what());
  }
  return v;
}

AnnotatedSequence load_sequence(const VideoRecord& video, int frame_size) {
  AnnotatedSequence seq;
  seq.video_id = video.manifest.video_id;
  seq.center_id = video.manifest.center_id;
  seq.frame_size = frame_size;
  seq.labels = video.labels;
  seq.pixels.reserve(video.sampled.size() * seq.frame_pixels());
  for (const auto& path : video.sampled_frame_paths()) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::kMissingFile, "frame " + path.string() + " not found");
    }
    append_preprocessed(seq, read_ppm(path));
  }
  return seq;
}

SplitSpec parse_split_json(std::string_view text,
                           const std::filesystem::path& base_dir) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadCsv, std::string("split file: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kBadCsv, "split file must be a JSON object");
  }
  SplitSpec spec;
  std::set<std::string> seen_ids;
  for (const auto& [group, list] : j.items()) {
    if (!list.is_array()) {
      throw Error(ErrorCode::kBadCsv, "split group '" + group + "' must be a list");
    }
    auto& entries = spec.groups[group];
    spec.group_order.push_back(group);
    for (const auto& item : list) {
      SplitEntry e;
      e.center = group;
      if (item.is_string()) {
        e.dir = item.get<std::string>();
      } else if (item.is_object() && item.contains("path")) {
        e.dir = item.at("path").get<std::string>();
        if (item.contains("center")) e.center = item.at("center").get<std::string>();
      } else {
        throw Error(ErrorCode::kBadCsv,
                    "split group '" + group + "': entries must be paths or objects with \"path\"");
      }
      if (e.dir.is_relative()) e.dir = base_dir / e.dir;
      const std::string id = video_id_of(e.dir);
      if (!seen_ids.insert(id).second) {
        throw Error(ErrorCode::kDuplicateVideo,
                    "video '" + id + "' appears more than once in the split");
      }
      entries.push_back(std::move(e));
    }
  }
  return spec;
}

SplitSpec load_split_file(const std::filesystem::path& path,
                          const std::filesystem::path& base_dir) {
  return parse_split_json(read_text_file(path), base_dir);
}

std::map<std::string, std::vector<VideoRecord>> index_split(const SplitSpec& spec) {
  std::map<std::string, std::vector<VideoRecord>> out;
  for (const auto& group : spec.group_order) {
    auto& videos = out[group];
    for (const auto& e : spec.groups.at(group)) {
      videos.push_back(index_video(e.dir, e.center, true));
    }
  }
  return out;
}

DatasetSplit load_dataset(const SplitSpec& spec, int frame_size) {
  DatasetSplit split;
  for (const auto& [group, videos] : index_split(spec)) {
    std::vector<AnnotatedSequence>* dest;
    if (group == "train") {
      dest = &split.train;
    } else if (group == "validation") {
      dest = &split.validation;
    } else if (group == "test") {
      dest = &split.test;
    } else {
      dest = &split.external[group];
    }
    for (const auto& v : videos) dest->push_back(load_sequence(v, frame_size));
  }
  return split;
}

SequenceSummary summarize(const std::string& center_id, const Labels& labels) {
  SequenceSummary s;
  s.center_id = center_id;
  s.frames = static_cast<std::int64_t>(labels.size());
  s.oob_frames = std::count(labels.begin(), labels.end(), 1);
  return s;
}

std::int64_t percent_hundredths(std::int64_t part, std::int64_t total) {
  if (total <= 0) return 0;
  // round(10000 * part / total) with ties going up.
  return (20000 * part + total) / (2 * total);
}

GroupStats dataset_stats(const std::string& name,
                         std::span<const SequenceSummary> sequences) {
  GroupStats g;
  g.name = name;
  g.videos = sequences.size();
  if (sequences.empty()) return g;
  double min_d = 1e300, max_d = 0, sum_d = 0;
  for (const auto& s : sequences) {
    const double minutes = static_cast<double>(s.frames) / 60.0;
    min_d = std::min(min_d, minutes);
    max_d = std::max(max_d, minutes);
    sum_d += minutes;
    g.total_frames += s.frames;
    g.oob_frames += s.oob_frames;
  }
  g.min_duration_min = min_d;
  g.max_duration_min = max_d;
  g.avg_duration_min = sum_d / static_cast<double>(sequences.size());
  g.oob_percent_hundredths = percent_hundredths(g.oob_frames, g.total_frames);
  return g;
}

std::string stats_csv(std::span<const GroupStats> rows) {
  std::string out =
      "dataset,videos,min_duration_min,max_duration_min,avg_duration_min,"
      "total_frames,oob_frames,oob_percent\n";
  for (const auto& g : rows) {
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%lld.%02lld",
                  static_cast<long long>(g.oob_percent_hundredths / 100),
                  static_cast<long long>(g.oob_percent_hundredths % 100));
    out += g.name + "," + std::to_string(g.videos) + "," +
           format_minutes(g.min_duration_min) + "," +
           format_minutes(g.max_duration_min) + "," +
           format_minutes(g.avg_duration_min) + "," +
           std::to_string(g.total_frames) + "," + std::to_string(g.oob_frames) +
           "," + pct + "\n";
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace oobnet
