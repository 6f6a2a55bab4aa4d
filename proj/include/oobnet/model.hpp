#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oobnet/ops.hpp"
#include "oobnet/rng.hpp"
#include "oobnet/tensor.hpp"

namespace oobnet {

// One MobileNetV2 bottleneck stage: `repeats` inverted residual blocks, the
// first of which carries the stage stride.
struct InvertedResidualSpec {
  int expansion_factor = 1;
  int out_channels = 16;
  int stride = 1;
  int repeats = 1;

  friend bool operator==(const InvertedResidualSpec&,
                         const InvertedResidualSpec&) = default;
};

struct ModelConfig {
  int input_size = 64;
  int stem_channels = 8;
  std::vector<InvertedResidualSpec> backbone_blocks;
  // Optional 1x1 conv after the last block (MobileNetV2 uses 1280). 0 = none.
  int head_channels = 0;
  int feature_dim = 32;
  int lstm_units = 32;
  double dropout_rate = 0.5;
  double layer_norm_eps = 1e-5;

  // Micro backbone trainable on one laptop core.
  static ModelConfig desk_scale();
  // Published MobileNetV2 layout with the 640-unit LSTM.
  static ModelConfig mobilenet_v2();
  // Smallest useful network, for gradient checks.
  static ModelConfig tiny();
  static ModelConfig preset(const std::string& name);

  // Throws kInvalidArgument naming the violated constraint.
  void validate() const;

  // Channel width of the backbone output as implied by the block list.
  int backbone_output_channels() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Learned weights by name. std::map keeps iteration lexicographic.
template <typename T>
using Params = std::map<std::string, Tensor<T>>;

using OoBNetParams = Params<float>;

// Expected name -> shape table for a config; the single source of truth for
// parameter layout.
std::map<std::string, Shape> param_shapes(const ModelConfig& config);

// Glorot-uniform half-width sqrt(6 / (fan_in + fan_out)) for a weight
// tensor; 0 for rank-1 tensors, which are not Glorot-initialized.
double glorot_bound(const Shape& shape);

template <typename T>
Params<T> init_params(const ModelConfig& config, Rng& rng);

template <typename T>
Params<T> cast_params(const Params<float>& params) {
  Params<T> out;
  for (const auto& [name, t] : params) out.emplace(name, t.template cast<T>());
  return out;
}

template <typename T>
Params<float> to_float_params(const Params<T>& params) {
  Params<float> out;
  for (const auto& [name, t] : params) out.emplace(name, t.template cast<float>());
  return out;
}

enum class Mode { kTrain, kInfer };

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;

  static LstmState zeros(int units) {
    return {Tensor<T>({units}), Tensor<T>({units})};
  }
};

// [N, 3, S, S] -> [N, feature_dim].
template <typename T>
Tensor<T> backbone_forward(const Params<T>& params, const ModelConfig& config,
                           const Tensor<T>& batch);

template <typename T>
std::pair<Tensor<T>, LstmState<T>> lstm_step(const Params<T>& params,
                                             const Tensor<T>& x,
                                             const LstmState<T>& state);

// Cached forward state for one clip, consumed by backward_clip.
template <typename T>
struct ClipTape;

template <typename T>
struct ClipForward {
  Tensor<T> logits;         // [T]
  Tensor<T> probabilities;  // [T]
};

// Runs a clip through the whole network with a fresh LSTM state. rng is only
// consulted in train mode (dropout) and may be null in infer mode.
template <typename T>
Tensor<T> forward_clip(const Params<T>& params, const ModelConfig& config,
                       const Tensor<T>& clip, Mode mode, Rng* rng);

// Like forward_clip, but also returns logits and records the tape needed for
// backpropagation through time.
template <typename T>
ClipForward<T> forward_clip_taped(const Params<T>& params,
                                  const ModelConfig& config,
                                  const Tensor<T>& clip, Mode mode, Rng* rng,
                                  ClipTape<T>& tape);

// Gradients of the loss w.r.t. every parameter, given d loss / d logits.
template <typename T>
Params<T> backward_clip(const Params<T>& params, const ModelConfig& config,
                        const ClipTape<T>& tape, const Tensor<T>& d_logits);

using Labels = std::vector<std::uint8_t>;

// label = 1 (out-of-body) iff probability >= threshold; threshold in (0, 1).
Labels binarize(std::span<const float> probabilities, double threshold);
Labels binarize(std::span<const double> probabilities, double threshold);

// ---------------------------------------------------------------------------
// Tape layout. Exposed so tests can inspect it; treat as opaque otherwise.

template <typename T>
struct BlockTape {
  std::string prefix;
  bool has_expand = false;
  bool residual = false;
  ops::OpCache<T> expand_conv, expand_act;
  ops::OpCache<T> dw_conv, dw_act;
  ops::OpCache<T> project_conv;
};

template <typename T>
struct BackboneTape {
  ops::OpCache<T> stem_conv, stem_act;
  std::vector<BlockTape<T>> blocks;
  bool has_head = false;
  ops::OpCache<T> head_conv, head_act;
  ops::OpCache<T> pool;
};

template <typename T>
struct LstmStepCache {
  Tensor<T> x, h_prev, c_prev;
  std::vector<T> i, f, g, o, tanh_c;
};

template <typename T>
struct ClipTape {
  BackboneTape<T> backbone;
  ops::OpCache<T> ln1, drop, ln2, fc;
  std::vector<LstmStepCache<T>> lstm;
};

}  // namespace oobnet
