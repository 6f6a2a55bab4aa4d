#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oobnet/data.hpp"
#include "oobnet/model.hpp"
#include "oobnet/rng.hpp"

namespace oobnet::train {

struct TrainConfig {
  double learning_rate = 0.00009;
  int clip_len = 64;  // 2,048 in the full-size setup
  int epochs = 300;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double rotation_max_deg = 15.0;
  double contrast_min = 0.8;
  double contrast_max = 1.2;
  double threshold_default = 0.5;

  void validate() const;
};

template <typename T>
struct AdamState {
  Params<T> m;
  Params<T> v;
  std::int64_t step = 0;
};

// Random rotation about the frame center (bilinear, zero fill) followed by a
// random contrast change around each channel's mean, clamped to [0, 1].
// frame is [3, S, S].
template <typename T>
Tensor<T> augment_frame(const Tensor<T>& frame, Rng& rng, const TrainConfig& config);

// Applies augment_frame to every frame of a [T, 3, S, S] clip in order.
template <typename T>
Tensor<T> augment_clip(const Tensor<T>& clip, Rng& rng, const TrainConfig& config);

// Inclusive frame window.
struct Window {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  friend bool operator==(const Window&, const Window&) = default;
};

// Consecutive non-overlapping windows of clip_len frames covering the whole
// sequence, returned in shuffled order. A leftover tail of at least two
// frames becomes its own window; a single leftover frame joins the window
// before it.
std::vector<Window> sample_clips(std::size_t num_frames, int clip_len, Rng& rng);

template <typename T>
struct BceResult {
  double loss = 0;
  Tensor<T> d_logits;  // (p - y) / T
  Tensor<T> probabilities;
};

// Mean binary cross-entropy evaluated from logits.
template <typename T>
BceResult<T> bce_loss(const Tensor<T>& logits, std::span<const std::uint8_t> labels);

template <typename T>
void adam_step(Params<T>& params, const Params<T>& grads, AdamState<T>& state,
               const TrainConfig& config);

// Inference over a whole sequence in consecutive clips, LSTM state reset at
// each clip start. Never touches a generator.
std::vector<double> infer_probabilities(const OoBNetParams& params,
                                        const ModelConfig& config,
                                        const AnnotatedSequence& sequence,
                                        int clip_len);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double val_f1 = 0;
  bool is_best = false;
};

struct TrainResult {
  ModelConfig config;
  OoBNetParams best_params;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_f1 = 0;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// One optimizer step per clip; after every epoch the validation F1 at the
// default threshold decides whether the parameters become the new best
// (strictly better only, so ties keep the earlier epoch).
TrainResult train(const ModelConfig& model_config,
                  std::span<const AnnotatedSequence> train_set,
                  std::span<const AnnotatedSequence> validation_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// CSV "epoch,train_loss,val_f1,is_best".
std::string training_log_csv(std::span<const EpochLog> log);

// Operating threshold with the highest F1. Candidates are the midpoints
// between consecutive distinct probabilities plus 0.5; ties prefer the
// candidate closest to 0.5, then the smaller one.
double select_threshold_max_f1(std::span<const double> probabilities,
                               std::span<const std::uint8_t> labels);

}  // namespace oobnet::train
