#include "oobnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "oobnet/metrics.hpp"

namespace oobnet::train {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "train config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (clip_len < 2) fail("clip_len must be >= 2");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(rotation_max_deg >= 0.0 && rotation_max_deg < 90.0)) {
    fail("rotation_max_deg must be in [0, 90)");
  }
  if (!(contrast_min > 0.0 && contrast_min <= contrast_max)) {
    fail("contrast range must be positive and ordered");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_eps > 0.0)) {
    fail("adam hyperparameters out of range");
  }
  if (!(threshold_default > 0.0 && threshold_default < 1.0)) {
    fail("threshold_default must be in (0, 1)");
  }
}

template <typename T>
Tensor<T> augment_frame(const Tensor<T>& frame, Rng& rng, const TrainConfig& config) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "augment_frame: expected [3,H,W], got " + shape_string(frame.shape()));
  }
  const std::int64_t h = frame.dim(1);
  const std::int64_t w = frame.dim(2);
  const std::int64_t plane = h * w;
  const double angle = rng.uniform(-config.rotation_max_deg, config.rotation_max_deg) *
                       std::numbers::pi / 180.0;
  const double factor = rng.uniform(config.contrast_min, config.contrast_max);

  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  Tensor<T> out(frame.shape());
  for (std::int64_t ch = 0; ch < 3; ++ch) {
    const T* src = &frame[ch * plane];
    auto sample = [&](std::int64_t x, std::int64_t y) -> double {
      if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
      return src[y * w + x];
    };
    T* dst = &out[ch * plane];
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        // Inverse rotation maps each output pixel back into the source.
        const double sx = cs * dx + sn * dy + cx;
        const double sy = -sn * dx + cs * dy + cy;
        const double fx0 = std::floor(sx);
        const double fy0 = std::floor(sy);
        const auto x0 = static_cast<std::int64_t>(fx0);
        const auto y0 = static_cast<std::int64_t>(fy0);
        const double ax = sx - fx0;
        const double ay = sy - fy0;
        const double top = sample(x0, y0) * (1.0 - ax) + sample(x0 + 1, y0) * ax;
        const double bottom =
            sample(x0, y0 + 1) * (1.0 - ax) + sample(x0 + 1, y0 + 1) * ax;
        dst[y * w + x] = static_cast<T>(top * (1.0 - ay) + bottom * ay);
      }
    }
    double mean = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) mean += dst[i];
    mean /= static_cast<double>(plane);
    for (std::int64_t i = 0; i < plane; ++i) {
      const double v = (static_cast<double>(dst[i]) - mean) * factor + mean;
      dst[i] = static_cast<T>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

template <typename T>
Tensor<T> augment_clip(const Tensor<T>& clip, Rng& rng, const TrainConfig& config) {
  if (clip.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch,
                "augment_clip: expected [T,3,H,W], got " + shape_string(clip.shape()));
  }
  const Shape frame_shape{clip.dim(1), clip.dim(2), clip.dim(3)};
  const auto per = static_cast<std::size_t>(shape_numel(frame_shape));
  Tensor<T> out(clip.shape());
  for (std::int64_t t = 0; t < clip.dim(0); ++t) {
    const auto begin = clip.data().begin() + static_cast<std::ptrdiff_t>(t * per);
    Tensor<T> frame(frame_shape, std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(per)));
    const Tensor<T> aug = augment_frame(frame, rng, config);
    std::copy(aug.data().begin(), aug.data().end(), &out[t * per]);
  }
  return out;
}

std::vector<Window> sample_clips(std::size_t num_frames, int clip_len, Rng& rng) {
  if (clip_len < 2) {
    throw Error(ErrorCode::kInvalidArgument, "sample_clips: clip_len must be >= 2");
  }
  std::vector<Window> windows;
  const auto len = static_cast<std::size_t>(clip_len);
  for (std::size_t start = 0; start < num_frames; start += len) {
    windows.push_back({start, std::min(start + len, num_frames) - 1});
  }
  if (windows.size() > 1 && windows.back().length() == 1) {
    windows.pop_back();
    windows.back().end = num_frames - 1;
  }
  rng.shuffle(windows);
  return windows;
}

template <typename T>
BceResult<T> bce_loss(const Tensor<T>& logits, std::span<const std::uint8_t> labels) {
  if (logits.rank() != 1 || static_cast<std::size_t>(logits.dim(0)) != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "bce_loss: logits " + shape_string(logits.shape()) + " vs " +
                    std::to_string(labels.size()) + " labels");
  }
  const auto n = static_cast<double>(labels.size());
  BceResult<T> r;
  r.d_logits = Tensor<T>(logits.shape());
  r.probabilities = Tensor<T>(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = logits[i];
    const double y = labels[i] ? 1.0 : 0.0;
    // -[y log s(z) + (1-y) log(1-s(z))] without forming s(z).
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const T p = ops::sigmoid_scalar(logits[i]);
    r.probabilities[i] = p;
    r.d_logits[i] = static_cast<T>((static_cast<double>(p) - y) / n);
  }
  r.loss = total / n;
  return r;
}

template <typename T>
void adam_step(Params<T>& params, const Params<T>& grads, AdamState<T>& state,
               const TrainConfig& config) {
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw Error(ErrorCode::kShapeMismatch, "adam_step: no gradient for '" + name + "'");
    }
    if (it->second.shape() != p.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adam_step: gradient for '" + name + "' has shape " +
                      shape_string(it->second.shape()) + ", parameter " +
                      shape_string(p.shape()));
    }
  }
  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    const Tensor<T>& g = grads.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, p.shape());
    auto [vit, v_new] = state.v.try_emplace(name, p.shape());
    Tensor<T>& m = mit->second;
    Tensor<T>& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      p[i] = static_cast<T>(p[i] - config.learning_rate * m_hat /
                                       (std::sqrt(v_hat) + config.adam_eps));
    }
  }
}

std::vector<double> infer_probabilities(const OoBNetParams& params,
                                        const ModelConfig& config,
                                        const AnnotatedSequence& sequence,
                                        int clip_len) {
  if (clip_len < 1) {
    throw Error(ErrorCode::kInvalidArgument, "clip_len must be >= 1");
  }
  const std::size_t n = sequence.num_frames();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyDataset, "video '" + sequence.video_id + "' has no frames");
  }
  std::vector<double> probs;
  probs.reserve(n);
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(clip_len)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(clip_len));
    const TensorF p = forward_clip(params, config, sequence.clip<float>(start, end),
                                   Mode::kInfer, nullptr);
    probs.insert(probs.end(), p.data().begin(), p.data().end());
  }
  return probs;
}

namespace {

void check_labels(const AnnotatedSequence& s) {
  if (s.labels.size() != s.num_frames()) {
    throw Error(ErrorCode::kCountMismatch,
                "video '" + s.video_id + "' has " + std::to_string(s.num_frames()) +
                    " frames but " + std::to_string(s.labels.size()) + " labels");
  }
}

double validation_f1(const OoBNetParams& params, const ModelConfig& model_config,
                     std::span<const AnnotatedSequence> validation_set,
                     const TrainConfig& config) {
  metrics::ConfusionMatrix cm;
  for (const auto& seq : validation_set) {
    const auto probs = infer_probabilities(params, model_config, seq, config.clip_len);
    cm += metrics::confusion(seq.labels, binarize(probs, config.threshold_default));
  }
  return metrics::precision_recall_f1(cm).f1;
}

}  // namespace

TrainResult train(const ModelConfig& model_config,
                  std::span<const AnnotatedSequence> train_set,
                  std::span<const AnnotatedSequence> validation_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  if (train_set.empty()) throw Error(ErrorCode::kEmptyDataset, "training split is empty");
  if (validation_set.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "validation split is empty");
  }
  for (const auto& s : train_set) check_labels(s);
  for (const auto& s : validation_set) check_labels(s);

  Rng rng(config.seed);
  OoBNetParams params = init_params<float>(model_config, rng);
  AdamState<float> adam;

  TrainResult result;
  result.config = model_config;
  result.best_params = params;
  double best_f1 = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::pair<std::size_t, Window>> clips;
    for (std::size_t s = 0; s < train_set.size(); ++s) {
      for (const Window& w : sample_clips(train_set[s].num_frames(), config.clip_len, rng)) {
        clips.emplace_back(s, w);
      }
    }
    rng.shuffle(clips);

    double loss_sum = 0.0;
    for (const auto& [s, w] : clips) {
      const AnnotatedSequence& seq = train_set[s];
      const TensorF clip = augment_clip(seq.clip<float>(w.start, w.end + 1), rng, config);
      const std::span<const std::uint8_t> labels(seq.labels.data() + w.start, w.length());
      ClipTape<float> tape;
      const auto fw = forward_clip_taped(params, model_config, clip, Mode::kTrain, &rng, tape);
      const auto bce = bce_loss(fw.logits, labels);
      if (!std::isfinite(bce.loss)) {
        throw Error(ErrorCode::kNonFinite,
                    "training loss is not finite at epoch " + std::to_string(epoch) +
                        ", video '" + seq.video_id + "' frames " +
                        std::to_string(w.start) + "-" + std::to_string(w.end));
      }
      const auto grads = backward_clip(params, model_config, tape, bce.d_logits);
      adam_step(params, grads, adam, config);
      loss_sum += bce.loss;
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = clips.empty() ? 0.0 : loss_sum / static_cast<double>(clips.size());
    row.val_f1 = validation_f1(params, model_config, validation_set, config);
    if (row.val_f1 > best_f1) {
      best_f1 = row.val_f1;
      row.is_best = true;
      result.best_params = params;
      result.best_epoch = epoch;
      result.best_val_f1 = row.val_f1;
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

std::string training_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,val_f1,is_best\n";
  char buf[128];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%d\n", r.epoch, r.train_loss,
                  r.val_f1, r.is_best ? 1 : 0);
    out += buf;
  }
  return out;
}

double select_threshold_max_f1(std::span<const double> probabilities,
                               std::span<const std::uint8_t> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "select_threshold_max_f1: length mismatch");
  }
  std::vector<std::pair<double, std::uint8_t>> pairs;
  pairs.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(probabilities[i])) {
      throw Error(ErrorCode::kNonFinite, "select_threshold_max_f1: non-finite probability");
    }
    pairs.emplace_back(probabilities[i], labels[i] ? 1 : 0);
  }
  std::sort(pairs.begin(), pairs.end());
  const std::size_t n = pairs.size();
  // pos_before[k] = positives among the k smallest probabilities.
  std::vector<std::int64_t> pos_before(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) pos_before[k + 1] = pos_before[k] + pairs[k].second;
  const std::int64_t total_pos = pos_before[n];
  const std::int64_t total_neg = static_cast<std::int64_t>(n) - total_pos;
  if (total_pos == 0 || total_neg == 0) {
    throw Error(ErrorCode::kSingleClass, "select_threshold_max_f1 needs both classes");
  }

  std::vector<double> candidates{0.5};
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (pairs[k].first != pairs[k + 1].first) {
      candidates.push_back((pairs[k].first + pairs[k + 1].first) / 2.0);
    }
  }

  struct Score {
    std::int64_t num = 0;  // F1 = num / den
    std::int64_t den = 1;
  };
  auto f1_at = [&](double threshold) {
    const auto first = std::lower_bound(pairs.begin(), pairs.end(), threshold,
                                        [](const auto& p, double t) { return p.first < t; });
    const auto k = static_cast<std::size_t>(first - pairs.begin());
    const std::int64_t tp = total_pos - pos_before[k];
    const std::int64_t fp = static_cast<std::int64_t>(n - k) - tp;
    const std::int64_t fn = total_pos - tp;
    if (tp == 0) return Score{0, 1};
    return Score{2 * tp, 2 * tp + fp + fn};
  };

  double best = candidates.front();
  Score best_score = f1_at(best);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double t = candidates[c];
    const Score s = f1_at(t);
    const __int128 lhs = static_cast<__int128>(s.num) * best_score.den;
    const __int128 rhs = static_cast<__int128>(best_score.num) * s.den;
    bool better = lhs > rhs;
    if (lhs == rhs) {
      const double dt = std::abs(t - 0.5);
      const double db = std::abs(best - 0.5);
      better = dt < db || (dt == db && t < best);
    }
    if (better) {
      best = t;
      best_score = s;
    }
  }
  return best;
}

#define OOBNET_INSTANTIATE_TRAIN(T)                                              \
  template Tensor<T> augment_frame(const Tensor<T>&, Rng&, const TrainConfig&);  \
  template Tensor<T> augment_clip(const Tensor<T>&, Rng&, const TrainConfig&);   \
  template BceResult<T> bce_loss(const Tensor<T>&, std::span<const std::uint8_t>); \
  template void adam_step(Params<T>&, const Params<T>&, AdamState<T>&,           \
                          const TrainConfig&);

OOBNET_INSTANTIATE_TRAIN(float)
OOBNET_INSTANTIATE_TRAIN(double)

}  // namespace oobnet::train
