#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "oobnet/error.hpp"
#include "oobnet/pipeline.hpp"
#include "test_support.hpp"

using namespace oobnet;
using namespace oobnet::pipeline;
namespace ot = oobnet::testing;

namespace {

// Writes n noise frames under dir/frames and returns their manifest rows.
std::vector<ManifestRow> write_noise_frames(const std::filesystem::path& dir, std::size_t n,
                                            Rng& rng, int w = 12, int h = 10) {
  std::filesystem::create_directories(dir / "frames");
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Image img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    const std::string rel = "frames/in_" + std::to_string(i) + ".ppm";
    write_ppm(img, dir / rel);
    rows.push_back({static_cast<std::int64_t>(i) * 1000, rel});
  }
  return rows;
}

Checkpoint tiny_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.config = ModelConfig::tiny();
  Rng rng(seed);
  c.params = init_params<float>(c.config, rng);
  return c;
}

std::string out_frame(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames/%06zu.ppm", i);
  return buf;
}

}  // namespace

TEST(Segments, Examples) {
  const Labels a{0, 0, 1, 1, 1, 0};
  EXPECT_EQ(segments_from_labels(a, 0), (std::vector<Segment>{{2, 4}}));
  EXPECT_EQ(segments_from_labels(a, 1), (std::vector<Segment>{{1, 5}}));
  EXPECT_EQ(segments_from_labels(Labels{1, 0, 1}, 1), (std::vector<Segment>{{0, 2}}));
  EXPECT_EQ(segments_from_labels(Labels{1, 0, 1}, 0), (std::vector<Segment>{{0, 0}, {2, 2}}));
  EXPECT_TRUE(segments_from_labels(Labels{0, 0}, 3).empty());
  EXPECT_TRUE(segments_from_labels(Labels{}, 3).empty());
  // [0,1] and [2,3] touch after widening and merge.
  EXPECT_EQ(segments_from_labels(Labels{1, 0, 0, 1}, 1), (std::vector<Segment>{{0, 3}}));
  EXPECT_EQ(segments_from_labels(Labels{1, 0, 0, 0, 1}, 1),
            (std::vector<Segment>{{0, 1}, {3, 4}}));
  EXPECT_THROW(segments_from_labels(a, -1), Error);
}

TEST(Segments, MatchDilationOracleAndAreIdempotent) {
  Rng rng(21);
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = rng.below(80);
    const std::int64_t margin = static_cast<std::int64_t>(rng.below(4));
    Labels l;
    for (std::size_t i = 0; i < n; ++i) l.push_back(rng.below(4) == 0);
    const auto segs = segments_from_labels(l, margin);
    Labels dilated(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t d = -margin; d <= margin; ++d) {
        const std::int64_t j = static_cast<std::int64_t>(i) + d;
        if (j >= 0 && j < static_cast<std::int64_t>(n) && l[static_cast<std::size_t>(j)]) {
          dilated[i] = 1;
        }
      }
    }
    EXPECT_EQ(flatten(segs, n), dilated);
    for (std::size_t s = 1; s < segs.size(); ++s) {
      EXPECT_GT(segs[s].start_frame, segs[s - 1].end_frame + 1);
    }
    EXPECT_EQ(segments_from_labels(flatten(segs, n), 0), segs);
  }
  EXPECT_THROW(flatten(std::vector<Segment>{{0, 5}}, 3), Error);
}

TEST(Trace, CsvRoundTripAndValidation) {
  const PredictionTrace t = make_trace("v", {0.1, 0.73, 0.5, 1.0 / 3.0}, 0.5);
  EXPECT_EQ(t.labels, (Labels{0, 1, 1, 0}));
  const PredictionTrace back = parse_trace_csv(trace_csv(t), "v");
  EXPECT_EQ(back.probabilities, t.probabilities);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.threshold, t.threshold);
  EXPECT_EQ(trace_csv(t).substr(0, 37), "frame_index,probability,label,thresho");

  PredictionTrace bad = t;
  bad.labels[0] = 1;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(parse_trace_csv("frame_index,probability,label,threshold\n0,0.9,0,0.5\n", "v"),
               Error);
  EXPECT_THROW(make_trace("v", {0.2}, 1.0), Error);
  EXPECT_THROW(make_trace("v", {1.2}, 0.5), Error);

  ot::TempDir dir("trace");
  write_trace(t, dir.path() / "t.csv");
  EXPECT_EQ(read_trace(dir.path() / "t.csv", "v").probabilities, t.probabilities);
}

TEST(Trace, HigherThresholdNeverAddsPositives) {
  const std::vector<double> p{0.1, 0.5, 0.6, 0.72, 0.73, 0.9};
  const auto lo = make_trace("v", p, 0.5);
  const auto hi = make_trace("v", p, 0.73);
  EXPECT_EQ(hi.labels, (Labels{0, 0, 0, 0, 1, 1}));
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(hi.labels[i], lo.labels[i]);
}

TEST(Policy, ModesAndValidation) {
  EXPECT_EQ(parse_redaction_mode("blackout"), RedactionMode::kBlackout);
  EXPECT_EQ(parse_redaction_mode("blur"), RedactionMode::kBlur);
  EXPECT_EQ(parse_redaction_mode("delete"), RedactionMode::kDelete);
  EXPECT_EQ(to_string(RedactionMode::kDelete), "delete");
  EXPECT_THROW(parse_redaction_mode("smudge"), Error);
  EXPECT_NO_THROW(RedactionPolicy{}.validate());
  EXPECT_THROW((RedactionPolicy{RedactionMode::kBlur, 1, 8}.validate()), Error);
  EXPECT_THROW((RedactionPolicy{RedactionMode::kBlur, 1, 7}.validate()), Error);
  EXPECT_THROW((RedactionPolicy{RedactionMode::kBlackout, -1, 9}.validate()), Error);
}

TEST(BoxBlur, ConstantImageUnchangedAndNoiseSmoothed) {
  Image flat(20, 15, 0);
  std::fill(flat.pixels.begin(), flat.pixels.end(), 123);
  EXPECT_EQ(box_blur(flat, 9), flat);

  Rng rng(2);
  Image noise(30, 30);
  for (auto& p : noise.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  const Image b = box_blur(box_blur(noise, 9), 9);
  auto spread = [](const Image& img) {
    double mean = 0, var = 0;
    for (auto p : img.pixels) mean += p;
    mean /= static_cast<double>(img.pixels.size());
    for (auto p : img.pixels) var += (p - mean) * (p - mean);
    return var / static_cast<double>(img.pixels.size());
  };
  EXPECT_LT(spread(b), spread(noise) / 10);
}

TEST(Redaction, NoSegmentsCopiesBytes) {
  ot::TempDir dir("redact");
  Rng rng(1);
  const auto rows = write_noise_frames(dir.path() / "in", 5, rng);
  const auto s = apply_redaction(rows, dir.path() / "in", {}, RedactionPolicy{},
                                 dir.path() / "out");
  EXPECT_EQ(s.frames_out, 5u);
  EXPECT_EQ(s.frames_redacted, 0u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(read_file_bytes(dir.path() / "out" / out_frame(i)),
              read_file_bytes(dir.path() / "in" / rows[i].path));
  }
  EXPECT_EQ(parse_manifest_csv(read_text_file(dir.path() / "out/manifest.csv")), s.manifest);
}

TEST(Redaction, BlackoutSingleFrame) {
  ot::TempDir dir("redact");
  Rng rng(2);
  const auto rows = write_noise_frames(dir.path() / "in", 4, rng);
  const std::vector<Segment> segs{{2, 2}};
  const auto s = apply_redaction(rows, dir.path() / "in", segs,
                                 {RedactionMode::kBlackout, 0, 9}, dir.path() / "out");
  EXPECT_EQ(s.frames_redacted, 1u);
  const Image black = read_ppm(dir.path() / "out" / out_frame(2));
  EXPECT_EQ(black.width, 12);
  for (auto p : black.pixels) EXPECT_EQ(p, 0);
  EXPECT_EQ(read_file_bytes(dir.path() / "out" / out_frame(3)),
            read_file_bytes(dir.path() / "in" / rows[3].path));
}

TEST(Redaction, DeleteRenumbersAndKeepsTimestamps) {
  ot::TempDir dir("redact");
  Rng rng(3);
  const auto rows = write_noise_frames(dir.path() / "in", 6, rng);
  const std::vector<Segment> segs{{2, 4}};
  const auto s = apply_redaction(rows, dir.path() / "in", segs,
                                 {RedactionMode::kDelete, 0, 9}, dir.path() / "out");
  EXPECT_EQ(s.frames_out, 3u);
  EXPECT_EQ(s.frames_deleted, 3u);
  EXPECT_EQ(s.manifest, (std::vector<ManifestRow>{
                            {0, out_frame(0)}, {1000, out_frame(1)}, {5000, out_frame(2)}}));
  EXPECT_EQ(read_file_bytes(dir.path() / "out" / out_frame(2)),
            read_file_bytes(dir.path() / "in" / rows[5].path));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "out" / out_frame(3)));
}

TEST(Redaction, BlurChangesEveryCoveredFrame) {
  ot::TempDir dir("redact");
  Rng rng(4);
  const auto rows = write_noise_frames(dir.path() / "in", 5, rng, 24, 20);
  const std::vector<Segment> segs{{0, 1}, {3, 4}};
  const auto s = apply_redaction(rows, dir.path() / "in", segs, RedactionPolicy{},
                                 dir.path() / "out");
  EXPECT_EQ(s.frames_redacted, 4u);
  for (std::size_t i : {0u, 1u, 3u, 4u}) {
    const Image in = read_ppm(dir.path() / "in" / rows[i].path);
    const Image out = read_ppm(dir.path() / "out" / out_frame(i));
    EXPECT_NE(in, out);
    EXPECT_EQ(out, box_blur(box_blur(in, 9), 9));
  }
}

TEST(Redaction, RejectsMissingFramesAndUnsortedSegments) {
  ot::TempDir dir("redact");
  Rng rng(5);
  auto rows = write_noise_frames(dir.path() / "in", 3, rng);
  rows[1].path = "frames/gone.ppm";
  try {
    apply_redaction(rows, dir.path() / "in", {}, RedactionPolicy{}, dir.path() / "out");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
    EXPECT_NE(std::string(e.what()).find("gone.ppm"), std::string::npos);
  }
  rows = write_noise_frames(dir.path() / "in", 3, rng);
  const std::vector<Segment> overlapping{{0, 1}, {1, 2}};
  EXPECT_THROW(apply_redaction(rows, dir.path() / "in", overlapping, RedactionPolicy{},
                               dir.path() / "out"),
               Error);
}

TEST(Predict, DeterministicAndChecksFrameSize) {
  const Checkpoint ck = tiny_checkpoint(3);
  Rng rng(8);
  const AnnotatedSequence seq = ot::synthetic_sequence("v", 40, 16, rng);
  const auto a = predict_video(ck, seq, 0.5, 8);
  const auto b = predict_video(ck, seq, 0.5, 8);
  EXPECT_EQ(a.probabilities, b.probabilities);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_NO_THROW(a.validate());
  const auto hi = predict_video(ck, seq, 0.73, 8);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(hi.labels[i], a.labels[i]);

  const AnnotatedSequence big = ot::synthetic_sequence("w", 40, 20, rng);
  EXPECT_THROW(predict_video(ck, big, 0.5, 8), Error);
}

TEST(Evaluate, PerfectScores) {
  std::vector<LabeledTrace> traces{
      {"a", "c1", "test", {0.9, 0.1, 0.8}, {1, 0, 1}},
      {"b", "c2", "test", {0.2, 0.7}, {0, 1}},
  };
  const EvaluationReport r = evaluate_traces(traces, 0.5);
  ASSERT_EQ(r.groups.size(), 1u);
  const auto& g = r.groups[0];
  EXPECT_EQ(g.pooled.cm, (metrics::ConfusionMatrix{3, 0, 2, 0}));
  EXPECT_EQ(*g.pooled.metrics.roc_auc, 1.0);
  EXPECT_EQ(g.pooled.metrics.f1, 1.0);
  EXPECT_EQ(g.centers, (std::vector<std::string>{"c1", "c2"}));
  EXPECT_EQ(g.across_centers.f1.n, 2u);
  EXPECT_EQ(g.across_centers.f1.sd, 0.0);
  EXPECT_EQ(r.total_frames, 5);
  EXPECT_EQ(r.fn_count, 0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Evaluate, CountsAgainstOracle) {
  Rng rng(31);
  for (int k = 0; k < 30; ++k) {
    std::vector<LabeledTrace> traces;
    std::int64_t total = 0, fn = 0;
    const char* groups[] = {"g1", "g2"};
    for (int v = 0; v < 6; ++v) {
      LabeledTrace t;
      t.video_id = "v" + std::to_string(v);
      t.group = groups[v % 2];
      t.center = t.group + std::string("_c") + std::to_string(v % 3);
      const std::size_t n = 1 + rng.below(50);
      for (std::size_t i = 0; i < n; ++i) {
        t.probabilities.push_back(rng.uniform());
        t.truth.push_back(rng.below(3) == 0);
        fn += t.truth.back() && t.probabilities.back() < 0.5;
      }
      total += static_cast<std::int64_t>(n);
      traces.push_back(t);
    }
    const EvaluationReport r = evaluate_traces(traces, 0.5);
    EXPECT_EQ(r.total_frames, total);
    EXPECT_EQ(r.fn_count, fn);
    EXPECT_DOUBLE_EQ(r.fn_rate, static_cast<double>(fn) / static_cast<double>(total));
    EXPECT_EQ(r.videos.size(), 6u);
    metrics::ConfusionMatrix sum;
    for (const auto& g : r.groups) sum += g.pooled.cm;
    EXPECT_EQ(sum.total(), total);
    EXPECT_EQ(sum.fn, fn);

    // A strictly increasing map of scores and threshold leaves every count.
    std::vector<LabeledTrace> mapped = traces;
    for (auto& t : mapped)
      for (auto& p : t.probabilities) p = p * p;
    const EvaluationReport m = evaluate_traces(mapped, 0.25);
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      EXPECT_EQ(m.groups[g].pooled.cm, r.groups[g].pooled.cm);
    }
  }
}

TEST(Evaluate, SingleClassCenterReportsNullAndWarns) {
  std::vector<LabeledTrace> traces{
      {"a", "c1", "g", {0.9, 0.1}, {1, 0}},
      {"b", "c2", "g", {0.2, 0.3}, {0, 0}},
  };
  const EvaluationReport r = evaluate_traces(traces, 0.5);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.groups[0].across_centers.roc_auc.n, 1u);
  const auto j = nlohmann::json::parse(report_json(r));
  for (const char* key : {"threshold", "total_frames", "fn_count", "fn_rate", "videos",
                          "centers", "groups", "warnings"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const auto& c2 = j["centers"][1];
  EXPECT_TRUE(c2["metrics"]["roc_auc"].is_null());
  EXPECT_TRUE(c2["metrics"]["ap"].is_null());
  EXPECT_DOUBLE_EQ(j["groups"][0]["metrics"]["roc_auc"].get<double>(), 1.0);
  EXPECT_EQ(j["groups"][0]["across_centers"]["roc_auc"]["n"], 1);
}
