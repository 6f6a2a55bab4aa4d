#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oobnet/data.hpp"
#include "oobnet/rng.hpp"

// Seeded stand-in for recorded surgery: inside-body frames are dark,
// red-dominant drifting textures; out-of-body frames are bright scenes with
// high-contrast rectangles and stripes. Each video starts and ends outside
// the body and may leave it briefly in between.
namespace oobnet::synthetic {

struct SyntheticConfig {
  std::uint64_t seed = 7;
  int train_videos = 20;
  int validation_videos = 10;
  int test_videos = 10;
  int min_frames = 270;
  int max_frames = 330;
  int frame_size = 64;
  int test_centers = 2;

  void validate() const;
};

struct SyntheticVideo {
  std::string video_id;
  std::string center;
  std::vector<Image> frames;
  Labels labels;
};

// Frame timeline of one video: out-of-body at both ends plus 0-2 interludes.
Labels synth_timeline(int num_frames, Rng& rng);

SyntheticVideo synth_video(const std::string& video_id, const std::string& center,
                           int num_frames, int frame_size, Rng& rng);

// Writes out_dir/videos/<id>/{manifest.csv,labels.csv,frames/*.ppm} and
// out_dir/split.json (paths relative to out_dir).
void write_dataset(const SyntheticConfig& config, const std::filesystem::path& out_dir);

}  // namespace oobnet::synthetic
