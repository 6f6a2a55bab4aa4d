#include "oobnet/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oobnet/train.hpp"

namespace oobnet::pipeline {

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in (0, 1)");
  }
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kBadCsv, "trace line " + std::to_string(line) + ": bad " +
                                        what + " '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line, const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kBadCsv, "trace line " + std::to_string(line) + ": bad " +
                                        what + " '" + std::string(s) + "'");
  }
  return v;
}

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.ppm", index);
  return buf;
}

}  // namespace

void PredictionTrace::validate() const {
  check_threshold(threshold);
  if (labels.size() != probabilities.size()) {
    throw Error(ErrorCode::kCountMismatch,
                "trace '" + video_id + "': " + std::to_string(probabilities.size()) +
                    " probabilities vs " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::kNonFinite,
                  "trace '" + video_id + "' frame " + std::to_string(i) +
                      ": probability out of [0, 1]");
    }
    if (labels[i] != (p >= threshold ? 1 : 0)) {
      throw Error(ErrorCode::kNonBinaryLabel,
                  "trace '" + video_id + "' frame " + std::to_string(i) +
                      ": label disagrees with probability and threshold");
    }
  }
}

PredictionTrace make_trace(std::string video_id, std::vector<double> probabilities,
                           double threshold) {
  check_threshold(threshold);
  PredictionTrace t;
  t.video_id = std::move(video_id);
  t.labels = binarize(probabilities, threshold);
  t.probabilities = std::move(probabilities);
  t.threshold = threshold;
  t.validate();
  return t;
}

PredictionTrace predict_video(const Checkpoint& checkpoint,
                              const AnnotatedSequence& frames, double threshold,
                              int clip_len) {
  check_threshold(threshold);
  if (frames.frame_size != checkpoint.config.input_size) {
    throw Error(ErrorCode::kShapeMismatch,
                "frames are " + std::to_string(frames.frame_size) +
                    " px but the model expects " +
                    std::to_string(checkpoint.config.input_size));
  }
  auto probs = train::infer_probabilities(checkpoint.params, checkpoint.config, frames,
                                          clip_len);
  return make_trace(frames.video_id, std::move(probs), threshold);
}

std::string trace_csv(const PredictionTrace& trace) {
  std::string out = "frame_index,probability,label,threshold\n";
  const std::string t = format_g17(trace.threshold);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i) + "," + format_g17(trace.probabilities[i]) + "," +
           (trace.labels[i] ? "1" : "0") + "," + t + "\n";
  }
  return out;
}

PredictionTrace parse_trace_csv(std::string_view text, std::string video_id) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kBadCsv, "trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_index,probability,label,threshold") {
    throw Error(ErrorCode::kBadCsv, "trace header must be "
                                    "'frame_index,probability,label,threshold'");
  }
  PredictionTrace t;
  t.video_id = std::move(video_id);
  std::optional<double> threshold;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      cols.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    cols.push_back(rest);
    if (cols.size() != 4) {
      throw Error(ErrorCode::kBadCsv,
                  "trace line " + std::to_string(lineno) + ": expected 4 columns");
    }
    const auto index = parse_int(cols[0], lineno, "frame_index");
    if (index != static_cast<std::int64_t>(t.probabilities.size())) {
      throw Error(ErrorCode::kBadCsv, "trace line " + std::to_string(lineno) +
                                          ": frame_index must count up from 0");
    }
    t.probabilities.push_back(parse_double(cols[1], lineno, "probability"));
    const auto label = parse_int(cols[2], lineno, "label");
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::kNonBinaryLabel,
                  "trace line " + std::to_string(lineno) + ": label must be 0 or 1");
    }
    t.labels.push_back(static_cast<std::uint8_t>(label));
    const double th = parse_double(cols[3], lineno, "threshold");
    if (threshold && *threshold != th) {
      throw Error(ErrorCode::kBadCsv,
                  "trace line " + std::to_string(lineno) + ": threshold changes");
    }
    threshold = th;
  }
  if (t.probabilities.empty()) throw Error(ErrorCode::kEmptyDataset, "trace has no frames");
  t.threshold = *threshold;
  t.validate();
  return t;
}

void write_trace(const PredictionTrace& trace, const std::filesystem::path& path) {
  write_text_file(path, trace_csv(trace));
}

PredictionTrace read_trace(const std::filesystem::path& path, std::string video_id) {
  return parse_trace_csv(read_text_file(path), std::move(video_id));
}

std::string_view to_string(RedactionMode mode) {
  switch (mode) {
    case RedactionMode::kBlackout:
      return "blackout";
    case RedactionMode::kBlur:
      return "blur";
    case RedactionMode::kDelete:
      return "delete";
  }
  return "?";
}

RedactionMode parse_redaction_mode(std::string_view name) {
  if (name == "blackout") return RedactionMode::kBlackout;
  if (name == "blur") return RedactionMode::kBlur;
  if (name == "delete") return RedactionMode::kDelete;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown redaction mode '" + std::string(name) +
                  "' (expected blackout, blur or delete)");
}

void RedactionPolicy::validate() const {
  if (margin_frames < 0) {
    throw Error(ErrorCode::kInvalidArgument, "margin must be non-negative");
  }
  if (mode == RedactionMode::kBlur && (blur_kernel < 9 || blur_kernel % 2 == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "blur kernel must be odd and >= 9");
  }
}

std::vector<Segment> segments_from_labels(std::span<const std::uint8_t> labels,
                                          std::int64_t margin) {
  if (margin < 0) throw Error(ErrorCode::kInvalidArgument, "margin must be non-negative");
  const auto n = static_cast<std::int64_t>(labels.size());
  std::vector<Segment> out;
  for (std::int64_t i = 0; i < n;) {
    if (!labels[i]) {
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j + 1 < n && labels[j + 1]) ++j;
    const Segment s{std::max<std::int64_t>(0, i - margin),
                    std::min<std::int64_t>(n - 1, j + margin)};
    if (!out.empty() && s.start_frame <= out.back().end_frame + 1) {
      out.back().end_frame = std::max(out.back().end_frame, s.end_frame);
    } else {
      out.push_back(s);
    }
    i = j + 1;
  }
  return out;
}

std::vector<Segment> segments_from_trace(const PredictionTrace& trace,
                                         const RedactionPolicy& policy) {
  return segments_from_labels(trace.labels, policy.margin_frames);
}

Labels flatten(std::span<const Segment> segments, std::size_t num_frames) {
  Labels mask(num_frames, 0);
  for (const auto& s : segments) {
    if (s.start_frame < 0 || s.end_frame < s.start_frame ||
        s.end_frame >= static_cast<std::int64_t>(num_frames)) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "segment [" + std::to_string(s.start_frame) + ", " +
                      std::to_string(s.end_frame) + "] outside " +
                      std::to_string(num_frames) + " frames");
    }
    std::fill(mask.begin() + s.start_frame, mask.begin() + s.end_frame + 1, 1);
  }
  return mask;
}

Image box_blur(const Image& image, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "box_blur: kernel must be odd and positive");
  }
  const int r = kernel / 2;
  const int w = image.width;
  const int h = image.height;
  std::vector<double> tmp(image.pixels.size());
  auto idx = [w](int x, int y, int c) {
    return (static_cast<std::size_t>(y) * w + x) * 3 + c;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0;
        for (int k = -r; k <= r; ++k) sum += image.pixels[idx(std::clamp(x + k, 0, w - 1), y, c)];
        tmp[idx(x, y, c)] = sum / kernel;
      }
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0;
        for (int k = -r; k <= r; ++k) sum += tmp[idx(x, std::clamp(y + k, 0, h - 1), c)];
        out.pixels[idx(x, y, c)] =
            static_cast<std::uint8_t>(std::clamp(std::floor(sum / kernel + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

RedactionSummary apply_redaction(std::span<const ManifestRow> frames,
                                 const std::filesystem::path& frames_base,
                                 std::span<const Segment> segments,
                                 const RedactionPolicy& policy,
                                 const std::filesystem::path& out_dir) {
  policy.validate();
  std::int64_t prev_end = -2;
  for (const auto& s : segments) {
    if (s.start_frame <= prev_end) {
      throw Error(ErrorCode::kInvalidArgument, "segments must be sorted and disjoint");
    }
    prev_end = s.end_frame;
  }
  const Labels mask = flatten(segments, frames.size());
  for (const auto& row : frames) {
    const auto path = frames_base / row.path;
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::kMissingFile, "frame " + path.string() + " not found");
    }
  }

  std::filesystem::create_directories(out_dir / "frames");
  RedactionSummary summary;
  summary.frames_in = frames.size();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto src = frames_base / frames[i].path;
    if (mask[i] && policy.mode == RedactionMode::kDelete) {
      ++summary.frames_deleted;
      continue;
    }
    const std::string rel = "frames/" + frame_name(summary.manifest.size());
    const auto dst = out_dir / rel;
    if (!mask[i]) {
      write_file_bytes(dst, read_file_bytes(src));
    } else {
      Image img = read_ppm(src);
      if (policy.mode == RedactionMode::kBlackout) {
        std::fill(img.pixels.begin(), img.pixels.end(), 0);
      } else {
        img = box_blur(box_blur(img, policy.blur_kernel), policy.blur_kernel);
      }
      write_ppm(img, dst);
      ++summary.frames_redacted;
    }
    summary.manifest.push_back({frames[i].timestamp_ms, rel});
  }
  summary.frames_out = summary.manifest.size();
  write_text_file(out_dir / "manifest.csv", manifest_csv(summary.manifest));
  return summary;
}

namespace {

EvalEntry make_entry(std::string name, std::string center, std::string group,
                     const metrics::ScoredFrames& frames) {
  EvalEntry e{std::move(name), std::move(center), std::move(group), {}, {}};
  e.metrics = metrics::compute_metrics(frames, &e.cm);
  return e;
}

void append(metrics::ScoredFrames& dst, const metrics::ScoredFrames& src) {
  dst.scores.insert(dst.scores.end(), src.scores.begin(), src.scores.end());
  dst.truth.insert(dst.truth.end(), src.truth.begin(), src.truth.end());
  dst.predicted.insert(dst.predicted.end(), src.predicted.begin(), src.predicted.end());
}

void warn_degenerate(const EvalEntry& e, const char* kind,
                     std::vector<std::string>& warnings) {
  if (!e.metrics.roc_auc) {
    warnings.push_back(std::string(kind) + " '" + e.name +
                       "' has a single class; ROC AUC reported as null");
  }
  if (!e.metrics.average_precision) {
    warnings.push_back(std::string(kind) + " '" + e.name +
                       "' has no positive frames; average precision reported as null");
  }
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json entry_json(const EvalEntry& e, const char* name_key) {
  nlohmann::ordered_json j;
  j[name_key] = e.name;
  if (std::string(name_key) != "center") j["center"] = e.center;
  j["group"] = e.group;
  j["frames"] = e.cm.total();
  j["cm"] = {{"tp", e.cm.tp}, {"fp", e.cm.fp}, {"tn", e.cm.tn}, {"fn", e.cm.fn}};
  j["metrics"] = {{"roc_auc", optional_json(e.metrics.roc_auc)},
                  {"ap", optional_json(e.metrics.average_precision)},
                  {"f1", e.metrics.f1},
                  {"precision", e.metrics.precision},
                  {"recall", e.metrics.recall}};
  return j;
}

nlohmann::ordered_json mean_sd_json(const metrics::MeanSd& m) {
  if (m.n == 0) return nullptr;
  return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}};
}

}  // namespace

EvaluationReport evaluate_traces(std::span<const LabeledTrace> traces, double threshold) {
  check_threshold(threshold);
  EvaluationReport report;
  report.threshold = threshold;

  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::string>> centers_of;
  std::map<std::pair<std::string, std::string>, metrics::ScoredFrames> by_center;
  std::map<std::string, metrics::ScoredFrames> by_group;

  for (const auto& t : traces) {
    if (t.probabilities.size() != t.truth.size()) {
      throw Error(ErrorCode::kCountMismatch,
                  "video '" + t.video_id + "': " + std::to_string(t.probabilities.size()) +
                      " scores vs " + std::to_string(t.truth.size()) + " labels");
    }
    if (t.truth.empty()) {
      throw Error(ErrorCode::kEmptyDataset, "video '" + t.video_id + "' has no frames");
    }
    metrics::ScoredFrames frames{t.probabilities, t.truth,
                                 binarize(t.probabilities, threshold)};
    auto entry = make_entry(t.video_id, t.center, t.group, frames);
    report.total_frames += entry.cm.total();
    report.fn_count += entry.cm.fn;
    report.videos.push_back(std::move(entry));

    if (!centers_of.contains(t.group)) group_order.push_back(t.group);
    auto& centers = centers_of[t.group];
    if (std::find(centers.begin(), centers.end(), t.center) == centers.end()) {
      centers.push_back(t.center);
    }
    append(by_center[{t.group, t.center}], frames);
    append(by_group[t.group], frames);
  }
  report.fn_rate = report.total_frames
                       ? static_cast<double>(report.fn_count) /
                             static_cast<double>(report.total_frames)
                       : 0.0;

  for (const auto& group : group_order) {
    GroupEval g;
    g.centers = centers_of[group];
    std::vector<metrics::MetricValues> members;
    for (const auto& center : g.centers) {
      auto e = make_entry(center, center, group, by_center[{group, center}]);
      warn_degenerate(e, "center", report.warnings);
      members.push_back(e.metrics);
      report.centers.push_back(std::move(e));
    }
    g.pooled = make_entry(group, "", group, by_group[group]);
    g.across_centers = metrics::aggregate_metrics(members);
    report.groups.push_back(std::move(g));
  }
  return report;
}

EvaluationReport evaluate(
    const Checkpoint& checkpoint,
    const std::vector<std::pair<std::string, std::span<const AnnotatedSequence>>>& groups,
    double threshold, int clip_len) {
  check_threshold(threshold);
  std::vector<LabeledTrace> traces;
  for (const auto& [group, sequences] : groups) {
    for (const auto& seq : sequences) {
      const auto trace = predict_video(checkpoint, seq, threshold, clip_len);
      traces.push_back({seq.video_id, seq.center_id, group, trace.probabilities, seq.labels});
    }
  }
  if (traces.empty()) throw Error(ErrorCode::kEmptyDataset, "nothing to evaluate");
  return evaluate_traces(traces, threshold);
}

std::string report_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["total_frames"] = report.total_frames;
  j["fn_count"] = report.fn_count;
  j["fn_rate"] = report.fn_rate;
  auto& videos = j["videos"] = nlohmann::ordered_json::array();
  for (const auto& v : report.videos) videos.push_back(entry_json(v, "video_id"));
  auto& centers = j["centers"] = nlohmann::ordered_json::array();
  for (const auto& c : report.centers) centers.push_back(entry_json(c, "center"));
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : report.groups) {
    nlohmann::ordered_json gj;
    gj["group"] = g.pooled.name;
    gj["centers"] = g.centers;
    const auto pooled = entry_json(g.pooled, "group");
    gj["frames"] = pooled["frames"];
    gj["cm"] = pooled["cm"];
    gj["metrics"] = pooled["metrics"];
    gj["across_centers"] = {{"roc_auc", mean_sd_json(g.across_centers.roc_auc)},
                            {"ap", mean_sd_json(g.across_centers.average_precision)},
                            {"f1", mean_sd_json(g.across_centers.f1)},
                            {"precision", mean_sd_json(g.across_centers.precision)},
                            {"recall", mean_sd_json(g.across_centers.recall)}};
    groups.push_back(std::move(gj));
  }
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace oobnet::pipeline
