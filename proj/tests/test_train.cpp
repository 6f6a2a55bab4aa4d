#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oobnet/error.hpp"
#include "oobnet/metrics.hpp"
#include "oobnet/train.hpp"
#include "test_support.hpp"

using namespace oobnet;
using namespace oobnet::train;
namespace ot = oobnet::testing;

namespace {

std::vector<Window> sorted_windows(std::size_t n, int len, std::uint64_t seed = 0) {
  Rng rng(seed);
  auto w = sample_clips(n, len, rng);
  std::sort(w.begin(), w.end(), [](const Window& a, const Window& b) { return a.start < b.start; });
  return w;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.clip_len = 8;
  c.learning_rate = 1e-3;
  c.seed = 17;
  return c;
}

struct TinyData {
  std::vector<AnnotatedSequence> train, validation;
  TinyData() {
    Rng rng(99);
    for (int i = 0; i < 2; ++i) train.push_back(ot::synthetic_sequence("t" + std::to_string(i), 40, 16, rng));
    validation.push_back(ot::synthetic_sequence("v0", 40, 16, rng));
  }
};

}  // namespace

TEST(SampleClips, ConsecutiveWindows) {
  EXPECT_EQ(sorted_windows(10, 4), (std::vector<Window>{{0, 3}, {4, 7}, {8, 9}}));
  EXPECT_EQ(sorted_windows(3, 64), (std::vector<Window>{{0, 2}}));
  EXPECT_EQ(sorted_windows(1, 64), (std::vector<Window>{{0, 0}}));
  // A lone trailing frame joins the previous window.
  EXPECT_EQ(sorted_windows(9, 4), (std::vector<Window>{{0, 3}, {4, 8}}));
  Rng rng(0);
  EXPECT_THROW(sample_clips(10, 1, rng), Error);
}

TEST(SampleClips, CoverEveryFrameOnce) {
  Rng pick(3);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + pick.below(500);
    const int len = 2 + static_cast<int>(pick.below(80));
    const auto w = sorted_windows(n, len, pick.next_u64());
    std::size_t next = 0;
    for (const Window& x : w) {
      EXPECT_EQ(x.start, next);
      EXPECT_LE(x.length(), static_cast<std::size_t>(len) + 1);
      EXPECT_TRUE(x.length() >= 2 || n == 1);
      next = x.end + 1;
    }
    EXPECT_EQ(next, n);
  }
}

TEST(SampleClips, ShuffleDependsOnSeedOnly) {
  Rng a(5), b(5);
  EXPECT_EQ(sample_clips(1000, 10, a), sample_clips(1000, 10, b));
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(30);
    TensorD z = ot::random_tensor({static_cast<int>(n)}, rng, -6, 6);
    Labels y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(rng.below(2));
    const auto r = bce_loss(z, y);
    const auto numeric =
        ot::numeric_grad(z, [&] { return bce_loss(z, y).loss; }, ot::all_entries(n));
    EXPECT_LE(ot::relative_error(r.d_logits.values(), numeric), 1e-6);
  }
}

TEST(Bce, StableAtExtremeLogits) {
  const TensorD z({4}, std::vector<double>{1000, -1000, 1000, -1000});
  const auto r = bce_loss(z, Labels{1, 0, 0, 1});
  // Two confident hits cost ~0, two confident misses cost 1000 each.
  EXPECT_NEAR(r.loss, 500.0, 1e-9);
  EXPECT_TRUE(r.d_logits.all_finite());
  EXPECT_EQ(r.probabilities[0], 1.0);
  EXPECT_EQ(r.probabilities[1], 0.0);
  const auto at_zero = bce_loss(TensorD({1}), Labels{1});
  EXPECT_NEAR(at_zero.loss, std::log(2.0), 1e-15);
  EXPECT_THROW(bce_loss(TensorD({2}), Labels{1}), Error);
}

TEST(Adam, MatchesHandComputedSteps) {
  TrainConfig c;
  c.learning_rate = 0.1;
  Params<double> p;
  p.emplace("w", TensorD({2}, std::vector<double>{1.0, -2.0}));
  AdamState<double> st;
  const double g1[2] = {0.5, -3.0};
  const double g2[2] = {-1.0, 0.25};
  double w[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  int t = 0;
  for (const double* g : {g1, g2}) {
    Params<double> grads;
    grads.emplace("w", TensorD({2}, std::vector<double>{g[0], g[1]}));
    adam_step(p, grads, st, c);
    ++t;
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      w[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p.at("w")[i], w[i], 1e-15);
    }
  }
  EXPECT_EQ(st.step, 2);

  Params<double> empty;
  EXPECT_THROW(adam_step(p, empty, st, c), Error);
  Params<double> wrong;
  wrong.emplace("w", TensorD({3}));
  EXPECT_THROW(adam_step(p, wrong, st, c), Error);
}

TEST(Augment, NeutralSettingsAreIdentity) {
  TrainConfig c;
  c.rotation_max_deg = 0;
  c.contrast_min = c.contrast_max = 1.0;
  Rng rng(1);
  const TensorD frame = ot::random_tensor({3, 9, 9}, rng, 0, 1);
  const TensorD out = augment_frame(frame, rng, c);
  EXPECT_LE(ot::relative_error(out.values(), frame.values()), 1e-14);
}

TEST(Augment, StaysInUnitRangeAndIsSeeded) {
  TrainConfig c;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng data(seed);
    const TensorF clip = ot::random_tensor({3, 3, 12, 12}, data, 0, 1).cast<float>();
    Rng a(seed), b(seed);
    const TensorF x = augment_clip(clip, a, c);
    const TensorF y = augment_clip(clip, b, c);
    EXPECT_EQ(x, y);
    EXPECT_EQ(a.draws(), b.draws());
    EXPECT_GT(a.draws(), 0u);
    for (float v : x.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Augment, SmallRotationKeepsCenterPixel) {
  TrainConfig c;
  c.contrast_min = c.contrast_max = 1.0;
  Rng data(4);
  const TensorD frame = ot::random_tensor({3, 11, 11}, data, 0, 1);
  Rng rng(8);
  const TensorD out = augment_frame(frame, rng, c);
  for (int ch = 0; ch < 3; ++ch) {
    const std::size_t center = static_cast<std::size_t>(ch * 121 + 5 * 11 + 5);
    EXPECT_NEAR(out[center], frame[center], 1e-12);
  }
}

TEST(TrainConfig, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), Error);
  };
  bad([](TrainConfig& c) { c.learning_rate = 0; });
  bad([](TrainConfig& c) { c.learning_rate = std::nan(""); });
  bad([](TrainConfig& c) { c.clip_len = 1; });
  bad([](TrainConfig& c) { c.epochs = -1; });
  bad([](TrainConfig& c) { c.contrast_min = 1.3; });
  bad([](TrainConfig& c) { c.adam_beta2 = 1.0; });
  bad([](TrainConfig& c) { c.threshold_default = 1.0; });
}

TEST(Threshold, MatchesExhaustiveOracle) {
  Rng rng(12);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng.below(150);
    const std::uint64_t levels = rng.below(2) ? 7 : 100000;
    std::vector<double> p;
    Labels y;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back((static_cast<double>(rng.below(levels)) + 0.5) / static_cast<double>(levels));
      y.push_back(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_EQ(select_threshold_max_f1(p, y), ot::oracle_best_threshold(p, y));
  }
}

TEST(Threshold, ExamplesAndErrors) {
  // Perfectly separable: 0.5 already achieves F1 = 1 and wins the tie.
  EXPECT_EQ(select_threshold_max_f1(std::vector<double>{0.1, 0.2, 0.8, 0.9}, Labels{0, 0, 1, 1}),
            0.5);
  // Separable only above 0.5.
  EXPECT_DOUBLE_EQ(
      select_threshold_max_f1(std::vector<double>{0.55, 0.6, 0.8, 0.9}, Labels{0, 0, 1, 1}), 0.7);
  EXPECT_THROW(select_threshold_max_f1(std::vector<double>{0.1, 0.2}, Labels{1, 1}), Error);
}

TEST(Inference, ConsumesNoRandomness) {
  Rng rng(1);
  const ModelConfig mc = ModelConfig::tiny();
  const auto params = init_params<float>(mc, rng);
  const AnnotatedSequence seq = ot::synthetic_sequence("v", 40, 16, rng);
  const auto a = infer_probabilities(params, mc, seq, 8);
  const auto b = infer_probabilities(params, mc, seq, 8);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 40u);
  for (double x : a) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  // Each clip restarts the recurrent state, so clip 2 equals a standalone run.
  AnnotatedSequence tail = seq;
  tail.pixels.erase(tail.pixels.begin(), tail.pixels.begin() + 8 * seq.frame_pixels());
  tail.labels.erase(tail.labels.begin(), tail.labels.begin() + 8);
  const auto c = infer_probabilities(params, mc, tail, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(c[i], a[8 + i]);
  EXPECT_THROW(infer_probabilities(params, mc, AnnotatedSequence{}, 8), Error);
}

TEST(Train, DeterministicLogAndParams) {
  const TinyData d;
  const ModelConfig mc = ModelConfig::tiny();
  const auto a = train::train(mc, d.train, d.validation, small_config());
  const auto b = train::train(mc, d.train, d.validation, small_config());
  ASSERT_EQ(a.log.size(), 2u);
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
  EXPECT_EQ(a.best_params, b.best_params);
  EXPECT_TRUE(a.log[0].is_best);
  EXPECT_EQ(a.best_epoch, a.log[0].is_best && !a.log[1].is_best ? 1 : 2);
  for (const auto& e : a.log) EXPECT_TRUE(std::isfinite(e.train_loss));
  EXPECT_EQ(training_log_csv(a.log).substr(0, 34), "epoch,train_loss,val_f1,is_best\n1,");

  TrainConfig other = small_config();
  other.seed = 18;
  const auto c = train::train(mc, d.train, d.validation, other);
  EXPECT_NE(training_log_csv(a.log), training_log_csv(c.log));
}

TEST(Train, CallbackSeesEveryEpochAndZeroEpochsKeepsInit) {
  const TinyData d;
  const ModelConfig mc = ModelConfig::tiny();
  int calls = 0;
  train::train(mc, d.train, d.validation, small_config(), [&](const EpochLog& e) {
    EXPECT_EQ(e.epoch, ++calls);
  });
  EXPECT_EQ(calls, 2);

  TrainConfig none = small_config();
  none.epochs = 0;
  const auto r = train::train(mc, d.train, d.validation, none);
  EXPECT_EQ(r.best_epoch, 0);
  EXPECT_TRUE(r.log.empty());
  Rng rng(none.seed);
  EXPECT_EQ(r.best_params, init_params<float>(mc, rng));
}

TEST(Train, LearnsSeparableSyntheticFrames) {
  const TinyData d;
  const ModelConfig mc = ModelConfig::tiny();
  TrainConfig c = small_config();
  c.epochs = 8;
  c.learning_rate = 3e-3;
  const auto r = train::train(mc, d.train, d.validation, c);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
  EXPECT_GT(r.best_val_f1, 0.5);
}
