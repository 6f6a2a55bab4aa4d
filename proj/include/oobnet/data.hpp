#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oobnet/model.hpp"
#include "oobnet/tensor.hpp"

namespace oobnet {

// 8-bit RGB image, interleaved HWC.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3,
               fill) {}

  std::uint8_t& at(int x, int y, int ch) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  std::uint8_t at(int x, int y, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Binary PPM (P6, maxval 255). '#' comments are allowed between header
// tokens; exactly one whitespace byte separates maxval from the raster.
Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& image);
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& image, const std::filesystem::path& path);

// Bilinear resampling with half-pixel centers and edge clamping; results are
// rounded half-up to 8 bits.
Image resize_bilinear(const Image& src, int out_width, int out_height);

struct ManifestRow {
  std::int64_t timestamp_ms = 0;
  std::string path;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct FrameManifest {
  std::string video_id;
  std::string center_id;
  std::vector<ManifestRow> rows;
};

// CSV with header "timestamp_ms,path". Timestamps must be non-negative and
// strictly increasing; paths non-empty.
std::vector<ManifestRow> parse_manifest_csv(std::string_view text);
std::string manifest_csv(std::span<const ManifestRow> rows);

// For every whole second up to the last timestamp, the index of the row
// nearest to it (ties to the earlier row), deduplicated.
std::vector<std::size_t> sample_1fps(std::span<const ManifestRow> rows);

// CSV with header "frame_index,label"; returns a dense label vector of
// length expected_count, 1 = out-of-body.
Labels load_annotations(std::string_view csv, std::size_t expected_count);
std::string annotations_csv(std::span<const std::uint8_t> labels);

// Decoded frames at model resolution plus per-frame labels. Frames are kept
// as 8-bit CHW planes (the resize output is already quantized to 8 bits) and
// converted to [0,1] reals on demand.
struct AnnotatedSequence {
  std::string video_id;
  std::string center_id;
  int frame_size = 64;
  std::vector<std::uint8_t> pixels;
  Labels labels;

  std::size_t num_frames() const {
    const std::size_t per = frame_pixels();
    return per ? pixels.size() / per : 0;
  }
  std::size_t frame_pixels() const {
    return 3 * static_cast<std::size_t>(frame_size) * frame_size;
  }

  // Appends an image already at frame_size x frame_size.
  void append_frame(const Image& image);

  // Frames [begin, end) as a [end-begin, 3, S, S] tensor with values /255.
  template <typename T = float>
  Tensor<T> clip(std::size_t begin, std::size_t end) const;
};

// Resize + append, the model-path preprocessing for one decoded frame.
void append_preprocessed(AnnotatedSequence& seq, const Image& image);

// A video directory on disk: manifest.csv, optional labels.csv, frames/.
struct VideoRecord {
  std::filesystem::path dir;
  FrameManifest manifest;
  std::vector<std::size_t> sampled;  // manifest rows kept at 1 fps
  Labels labels;                     // empty when labels.csv is absent

  std::vector<std::filesystem::path> sampled_frame_paths() const;
  std::vector<ManifestRow> sampled_rows() const;
};

VideoRecord index_video(const std::filesystem::path& dir,
                        const std::string& center_id, bool require_labels);

// Decodes and preprocesses every sampled frame of a video.
AnnotatedSequence load_sequence(const VideoRecord& video, int frame_size);

struct SplitEntry {
  std::filesystem::path dir;
  std::string center;
};

// Split file: JSON object mapping a group name to a list of video
// directories. Entries are strings or {"path": ..., "center": ...}; the
// center defaults to the group name. "train", "validation" and "test" are
// the development splits; any other key is an external group.
struct SplitSpec {
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<SplitEntry>> groups;
};

SplitSpec parse_split_json(std::string_view text,
                           const std::filesystem::path& base_dir);
SplitSpec load_split_file(const std::filesystem::path& path,
                          const std::filesystem::path& base_dir);

struct DatasetSplit {
  std::vector<AnnotatedSequence> train;
  std::vector<AnnotatedSequence> validation;
  std::vector<AnnotatedSequence> test;
  std::map<std::string, std::vector<AnnotatedSequence>> external;
};

// Loads every video of the split. A video id may appear only once.
DatasetSplit load_dataset(const SplitSpec& spec, int frame_size);

std::map<std::string, std::vector<VideoRecord>> index_split(const SplitSpec& spec);

struct SequenceSummary {
  std::string center_id;
  std::int64_t frames = 0;
  std::int64_t oob_frames = 0;
};

SequenceSummary summarize(const std::string& center_id, const Labels& labels);

// 100 * part / total in hundredths of a percent, rounded half-up with exact
// integer arithmetic. 0 when total is 0.
std::int64_t percent_hundredths(std::int64_t part, std::int64_t total);

struct GroupStats {
  std::string name;
  std::size_t videos = 0;
  double min_duration_min = 0;
  double max_duration_min = 0;
  double avg_duration_min = 0;
  std::int64_t total_frames = 0;
  std::int64_t oob_frames = 0;
  std::int64_t oob_percent_hundredths = 0;

  double oob_percent() const { return oob_percent_hundredths / 100.0; }
};

// Durations assume the 1 fps sampling: one frame per second.
GroupStats dataset_stats(const std::string& name,
                         std::span<const SequenceSummary> sequences);

// Table-1-shaped CSV: one row per group, then one per center for groups
// with several centers.
std::string stats_csv(std::span<const GroupStats> rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace oobnet
