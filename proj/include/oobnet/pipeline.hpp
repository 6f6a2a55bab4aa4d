#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oobnet/checkpoint.hpp"
#include "oobnet/data.hpp"
#include "oobnet/metrics.hpp"

namespace oobnet::pipeline {

struct PredictionTrace {
  std::string video_id;
  std::vector<double> probabilities;
  Labels labels;
  double threshold = 0.5;

  std::size_t size() const { return probabilities.size(); }
  // Throws unless every label equals (probability >= threshold).
  void validate() const;
};

PredictionTrace make_trace(std::string video_id, std::vector<double> probabilities,
                           double threshold);

// Consecutive clips of clip_len frames, LSTM state reset per clip, no
// dropout.
PredictionTrace predict_video(const Checkpoint& checkpoint,
                              const AnnotatedSequence& frames, double threshold,
                              int clip_len);

// CSV "frame_index,probability,label,threshold".
std::string trace_csv(const PredictionTrace& trace);
PredictionTrace parse_trace_csv(std::string_view text, std::string video_id);
void write_trace(const PredictionTrace& trace, const std::filesystem::path& path);
PredictionTrace read_trace(const std::filesystem::path& path, std::string video_id);

// Inclusive frame range.
struct Segment {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  std::int64_t length() const { return end_frame - start_frame + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

enum class RedactionMode { kBlackout, kBlur, kDelete };

std::string_view to_string(RedactionMode mode);
RedactionMode parse_redaction_mode(std::string_view name);

struct RedactionPolicy {
  RedactionMode mode = RedactionMode::kBlur;
  std::int64_t margin_frames = 1;
  int blur_kernel = 9;

  void validate() const;
};

// Maximal runs of 1 widened by margin on both sides, clipped to the
// sequence, overlapping or touching runs merged.
std::vector<Segment> segments_from_labels(std::span<const std::uint8_t> labels,
                                          std::int64_t margin);
std::vector<Segment> segments_from_trace(const PredictionTrace& trace,
                                         const RedactionPolicy& policy);

// Per-frame 0/1 mask covered by the segments.
Labels flatten(std::span<const Segment> segments, std::size_t num_frames);

// One horizontal then vertical pass of a kernel x kernel mean filter with
// edge clamping. Redaction applies it twice.
Image box_blur(const Image& image, int kernel);

struct RedactionSummary {
  std::vector<ManifestRow> manifest;  // as written to out_dir/manifest.csv
  std::size_t frames_in = 0;
  std::size_t frames_out = 0;
  std::size_t frames_redacted = 0;  // blacked out or blurred
  std::size_t frames_deleted = 0;
};

// frames[i] is the on-disk file of sequence frame i with its timestamp.
// Writes out_dir/frames/NNNNNN.ppm and out_dir/manifest.csv. Frames outside
// every segment are copied byte for byte.
RedactionSummary apply_redaction(std::span<const ManifestRow> frames,
                                 const std::filesystem::path& frames_base,
                                 std::span<const Segment> segments,
                                 const RedactionPolicy& policy,
                                 const std::filesystem::path& out_dir);

// Scores and ground truth for one evaluated video.
struct LabeledTrace {
  std::string video_id;
  std::string center;
  std::string group;
  std::vector<double> probabilities;
  Labels truth;
};

struct EvalEntry {
  std::string name;  // video id, center id or group name
  std::string center;
  std::string group;
  metrics::ConfusionMatrix cm;
  metrics::MetricValues metrics;
};

struct GroupEval {
  EvalEntry pooled;
  std::vector<std::string> centers;
  metrics::MetricAggregate across_centers;  // mean/sd over the group's centers
};

struct EvaluationReport {
  double threshold = 0.5;
  std::vector<EvalEntry> videos;
  std::vector<EvalEntry> centers;
  std::vector<GroupEval> groups;
  std::int64_t total_frames = 0;
  std::int64_t fn_count = 0;
  double fn_rate = 0;  // fn_count / total_frames
  std::vector<std::string> warnings;
};

// Frames are pooled within each center and within each group; groups keep
// first-appearance order.
EvaluationReport evaluate_traces(std::span<const LabeledTrace> traces, double threshold);

EvaluationReport evaluate(const Checkpoint& checkpoint,
                          const std::vector<std::pair<std::string, std::span<const AnnotatedSequence>>>& groups,
                          double threshold, int clip_len);

std::string report_json(const EvaluationReport& report);

}  // namespace oobnet::pipeline
