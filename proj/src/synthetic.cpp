#include "oobnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json.hpp"

namespace oobnet::synthetic {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

int between(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Look of the inside of the abdomen for one video.
struct TissueStyle {
  double r, g, b;
  double fx1, fy1, fx2, fy2;
  double speed1, speed2;
  double amp;
  double vignette;
};

TissueStyle tissue_style(Rng& rng) {
  TissueStyle s;
  s.r = rng.uniform(105, 165);
  s.g = rng.uniform(20, 55);
  s.b = rng.uniform(20, 50);
  s.fx1 = rng.uniform(0.05, 0.2);
  s.fy1 = rng.uniform(0.05, 0.2);
  s.fx2 = rng.uniform(0.1, 0.35);
  s.fy2 = rng.uniform(0.1, 0.35);
  s.speed1 = rng.uniform(0.05, 0.25);
  s.speed2 = rng.uniform(0.05, 0.25);
  s.amp = rng.uniform(15, 35);
  s.vignette = rng.uniform(0.3, 0.6);
  return s;
}

Image tissue_frame(const TissueStyle& s, int size, int t, Rng& rng) {
  Image img(size, size);
  const double c = (size - 1) / 2.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double wave = std::sin(s.fx1 * x + s.fy1 * y + s.speed1 * t) +
                          0.6 * std::sin(s.fx2 * x - s.fy2 * y - s.speed2 * t);
      const double d = std::hypot(x - c, y - c) / c;
      const double shade = 1.0 - s.vignette * d * d;
      const double noise = rng.uniform(-8, 8);
      img.at(x, y, 0) = to_u8((s.r + s.amp * wave) * shade + noise);
      img.at(x, y, 1) = to_u8((s.g + 0.4 * s.amp * wave) * shade + noise * 0.5);
      img.at(x, y, 2) = to_u8((s.b + 0.3 * s.amp * wave) * shade + noise * 0.5);
    }
  }
  return img;
}

struct Rect {
  double x, y, w, h;
  double vx, vy;
  double r, g, b;
};

// An operating-room view: bright background, colored boxes, optional stripes.
struct RoomScene {
  double bg_r, bg_g, bg_b;
  std::vector<Rect> rects;
  bool stripes;
  double stripe_freq, stripe_phase_speed;
};

RoomScene room_scene(int size, Rng& rng) {
  RoomScene s;
  const double base = rng.uniform(150, 225);
  s.bg_r = base + rng.uniform(-20, 20);
  s.bg_g = base + rng.uniform(-20, 25);
  s.bg_b = base + rng.uniform(-10, 30);
  const int n = between(rng, 2, 5);
  for (int i = 0; i < n; ++i) {
    Rect r;
    r.w = rng.uniform(0.15, 0.45) * size;
    r.h = rng.uniform(0.15, 0.45) * size;
    r.x = rng.uniform(-0.1, 0.9) * size;
    r.y = rng.uniform(-0.1, 0.9) * size;
    r.vx = rng.uniform(-1.5, 1.5);
    r.vy = rng.uniform(-1.5, 1.5);
    if (rng.bernoulli(0.5)) {
      const double v = rng.bernoulli(0.5) ? rng.uniform(0, 50) : rng.uniform(225, 255);
      r.r = r.g = r.b = v;
    } else {
      r.r = rng.uniform(0, 255);
      r.g = rng.uniform(60, 255);
      r.b = rng.uniform(60, 255);
    }
    s.rects.push_back(r);
  }
  s.stripes = rng.bernoulli(0.5);
  s.stripe_freq = rng.uniform(0.3, 0.8);
  s.stripe_phase_speed = rng.uniform(-0.5, 0.5);
  return s;
}

Image room_frame(const RoomScene& s, int size, int t, Rng& rng) {
  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double r = s.bg_r, g = s.bg_g, b = s.bg_b;
      if (s.stripes && std::sin(s.stripe_freq * (x + y) + s.stripe_phase_speed * t) > 0.3) {
        r -= 70;
        g -= 70;
        b -= 60;
      }
      for (const Rect& q : s.rects) {
        const double qx = q.x + q.vx * t;
        const double qy = q.y + q.vy * t;
        if (x >= qx && x < qx + q.w && y >= qy && y < qy + q.h) {
          r = q.r;
          g = q.g;
          b = q.b;
        }
      }
      const double noise = rng.uniform(-10, 10);
      img.at(x, y, 0) = to_u8(r + noise);
      img.at(x, y, 1) = to_u8(g + noise);
      img.at(x, y, 2) = to_u8(b + noise);
    }
  }
  return img;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.ppm", index);
  return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (train_videos < 1 || validation_videos < 1 || test_videos < 1) {
    throw Error(ErrorCode::kInvalidArgument, "every split needs at least one video");
  }
  if (min_frames < 40 || max_frames < min_frames) {
    throw Error(ErrorCode::kInvalidArgument, "frame counts must satisfy 40 <= min <= max");
  }
  if (frame_size < 8) throw Error(ErrorCode::kInvalidArgument, "frame_size must be >= 8");
  if (test_centers < 1) throw Error(ErrorCode::kInvalidArgument, "test_centers must be >= 1");
}

Labels synth_timeline(int num_frames, Rng& rng) {
  if (num_frames < 40) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic videos need at least 40 frames");
  }
  Labels labels(static_cast<std::size_t>(num_frames), 0);
  const int head = between(rng, 4, 15);
  const int tail = between(rng, 4, 15);
  std::fill(labels.begin(), labels.begin() + head, 1);
  std::fill(labels.end() - tail, labels.end(), 1);
  const int interludes = between(rng, 0, 2);
  for (int k = 0; k < interludes; ++k) {
    const int len = between(rng, 3, 12);
    const int lo = head + 5;
    const int hi = num_frames - tail - 5 - len;
    if (hi <= lo) break;
    const int start = between(rng, lo, hi);
    std::fill(labels.begin() + start, labels.begin() + start + len, 1);
  }
  return labels;
}

SyntheticVideo synth_video(const std::string& video_id, const std::string& center,
                           int num_frames, int frame_size, Rng& rng) {
  SyntheticVideo v;
  v.video_id = video_id;
  v.center = center;
  v.labels = synth_timeline(num_frames, rng);
  const TissueStyle tissue = tissue_style(rng);
  RoomScene room = room_scene(frame_size, rng);
  int scene_start = 0;
  for (int t = 0; t < num_frames; ++t) {
    if (v.labels[t]) {
      if (t > 0 && !v.labels[t - 1]) {
        room = room_scene(frame_size, rng);
        scene_start = t;
      }
      v.frames.push_back(room_frame(room, frame_size, t - scene_start, rng));
    } else {
      v.frames.push_back(tissue_frame(tissue, frame_size, t, rng));
    }
  }
  return v;
}

void write_dataset(const SyntheticConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  Rng rng(config.seed);
  nlohmann::ordered_json split;
  const std::pair<const char*, int> groups[] = {{"train", config.train_videos},
                                                {"validation", config.validation_videos},
                                                {"test", config.test_videos}};
  int counter = 0;
  for (const auto& [group, count] : groups) {
    auto& entries = split[group] = nlohmann::ordered_json::array();
    for (int i = 0; i < count; ++i, ++counter) {
      char id[32];
      std::snprintf(id, sizeof(id), "vid_%03d", counter);
      std::string center = "center_a";
      if (std::string(group) == "test") {
        center = "center_" + std::string(1, static_cast<char>('a' + i % config.test_centers));
      }
      const int n = between(rng, config.min_frames, config.max_frames);
      const SyntheticVideo v = synth_video(id, center, n, config.frame_size, rng);

      const auto rel = std::filesystem::path("videos") / id;
      const auto dir = out_dir / rel;
      std::filesystem::create_directories(dir / "frames");
      std::vector<ManifestRow> rows;
      for (int t = 0; t < n; ++t) {
        const std::string name = "frames/" + frame_name(t);
        write_ppm(v.frames[t], dir / name);
        // Capture clocks jitter a little around each second.
        rows.push_back({static_cast<std::int64_t>(t) * 1000 + between(rng, 0, 40), name});
      }
      write_text_file(dir / "manifest.csv", manifest_csv(rows));
      write_text_file(dir / "labels.csv", annotations_csv(v.labels));
      entries.push_back({{"path", rel.generic_string()}, {"center", center}});
    }
  }
  write_text_file(out_dir / "split.json", split.dump(2) + "\n");
}

}  // namespace oobnet::synthetic
