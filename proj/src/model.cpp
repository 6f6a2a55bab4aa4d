#include "oobnet/model.hpp"

#include <cmath>
#include <cstdio>

namespace oobnet {

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "model config: " + what);
}

std::string block_prefix(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "block%02d", index);
  return buf;
}

// Flattened view of the backbone: one entry per inverted residual block.
struct BlockLayout {
  std::string prefix;
  int in_channels;
  int hidden_channels;
  int out_channels;
  int stride;
  bool has_expand;
  bool residual;
};

std::vector<BlockLayout> block_layout(const ModelConfig& config) {
  std::vector<BlockLayout> blocks;
  int in = config.stem_channels;
  int index = 0;
  for (const auto& stage : config.backbone_blocks) {
    for (int r = 0; r < stage.repeats; ++r) {
      BlockLayout b;
      b.prefix = block_prefix(index++);
      b.in_channels = in;
      b.hidden_channels = in * stage.expansion_factor;
      b.out_channels = stage.out_channels;
      b.stride = r == 0 ? stage.stride : 1;
      b.has_expand = stage.expansion_factor != 1;
      b.residual = b.stride == 1 && in == stage.out_channels;
      blocks.push_back(b);
      in = stage.out_channels;
    }
  }
  return blocks;
}

template <typename T>
const Tensor<T>& param(const Params<T>& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw Error(ErrorCode::kConfigMismatch, "missing parameter '" + name + "'");
  }
  return it->second;
}

template <typename T>
void accumulate(Params<T>& grads, const std::string& prefix,
                ops::LayerGrad<T>& layer) {
  for (auto& [key, g] : layer.d_params) {
    const std::string name = prefix + "." + key;
    auto it = grads.find(name);
    if (it == grads.end()) {
      grads.emplace(name, std::move(g));
    } else {
      ops::add_inplace(it->second, g);
    }
  }
}

template <typename T>
Tensor<T> backbone_impl(const Params<T>& params, const ModelConfig& config,
                        const Tensor<T>& batch, BackboneTape<T>* tape) {
  if (batch.rank() != 4 || batch.dim(1) != 3 ||
      batch.dim(2) != config.input_size || batch.dim(3) != config.input_size) {
    throw Error(ErrorCode::kShapeMismatch,
                "backbone: expected [N,3," + std::to_string(config.input_size) +
                    "," + std::to_string(config.input_size) + "], got " +
                    shape_string(batch.shape()));
  }
  auto slot = [tape](ops::OpCache<T> BackboneTape<T>::*member) {
    return tape ? &(tape->*member) : nullptr;
  };
  Tensor<T> x = ops::conv2d(batch, param(params, "stem.weight"),
                            param(params, "stem.bias"), 2, 1,
                            slot(&BackboneTape<T>::stem_conv));
  x = ops::relu6(x, slot(&BackboneTape<T>::stem_act));

  for (const BlockLayout& b : block_layout(config)) {
    BlockTape<T>* bt = nullptr;
    if (tape) {
      tape->blocks.push_back({});
      bt = &tape->blocks.back();
      bt->prefix = b.prefix;
      bt->has_expand = b.has_expand;
      bt->residual = b.residual;
    }
    const std::string& p = b.prefix;
    Tensor<T> h = x;
    if (b.has_expand) {
      h = ops::conv2d(h, param(params, p + ".expand.weight"),
                      param(params, p + ".expand.bias"), 1, 0,
                      bt ? &bt->expand_conv : nullptr);
      h = ops::relu6(h, bt ? &bt->expand_act : nullptr);
    }
    h = ops::depthwise_conv2d(h, param(params, p + ".dw.weight"),
                              param(params, p + ".dw.bias"), b.stride, 1,
                              bt ? &bt->dw_conv : nullptr);
    h = ops::relu6(h, bt ? &bt->dw_act : nullptr);
    // Linear bottleneck: no activation after the projection.
    h = ops::conv2d(h, param(params, p + ".project.weight"),
                    param(params, p + ".project.bias"), 1, 0,
                    bt ? &bt->project_conv : nullptr);
    if (b.residual) ops::add_inplace(h, x);
    x = std::move(h);
  }

  if (config.head_channels > 0) {
    if (tape) tape->has_head = true;
    x = ops::conv2d(x, param(params, "head.weight"), param(params, "head.bias"),
                    1, 0, slot(&BackboneTape<T>::head_conv));
    x = ops::relu6(x, slot(&BackboneTape<T>::head_act));
  }
  return ops::global_avg_pool(x, slot(&BackboneTape<T>::pool));
}

template <typename T>
Tensor<T> backbone_backward(const BackboneTape<T>& tape,
                            const Tensor<T>& d_features, Params<T>& grads) {
  using ops::Op;
  Tensor<T> d = ops::backward(Op::kGlobalAvgPool, tape.pool, d_features).d_input;
  if (tape.has_head) {
    d = ops::backward(Op::kRelu6, tape.head_act, d).d_input;
    auto g = ops::backward(Op::kConv2d, tape.head_conv, d);
    accumulate(grads, "head", g);
    d = std::move(g.d_input);
  }
  for (auto it = tape.blocks.rbegin(); it != tape.blocks.rend(); ++it) {
    const BlockTape<T>& bt = *it;
    Tensor<T> d_skip;
    if (bt.residual) d_skip = d;
    auto g = ops::backward(Op::kConv2d, bt.project_conv, d);
    accumulate(grads, bt.prefix + ".project", g);
    d = ops::backward(Op::kRelu6, bt.dw_act, g.d_input).d_input;
    g = ops::backward(Op::kDepthwiseConv2d, bt.dw_conv, d);
    accumulate(grads, bt.prefix + ".dw", g);
    d = std::move(g.d_input);
    if (bt.has_expand) {
      d = ops::backward(Op::kRelu6, bt.expand_act, d).d_input;
      g = ops::backward(Op::kConv2d, bt.expand_conv, d);
      accumulate(grads, bt.prefix + ".expand", g);
      d = std::move(g.d_input);
    }
    if (bt.residual) ops::add_inplace(d, d_skip);
  }
  d = ops::backward(Op::kRelu6, tape.stem_act, d).d_input;
  auto g = ops::backward(Op::kConv2d, tape.stem_conv, d);
  accumulate(grads, "stem", g);
  return std::move(g.d_input);
}

template <typename T>
T tanh_scalar(T x) {
  return std::tanh(x);
}

template <typename T>
std::pair<Tensor<T>, LstmState<T>> lstm_step_impl(const Params<T>& params,
                                                  const T* x, std::int64_t dim,
                                                  const LstmState<T>& state,
                                                  LstmStepCache<T>* cache) {
  const Tensor<T>& w_ih = param(params, "lstm.w_ih");
  const Tensor<T>& w_hh = param(params, "lstm.w_hh");
  const Tensor<T>& bias = param(params, "lstm.bias");
  const std::int64_t units = state.h.dim(0);
  if (w_ih.dim(1) != dim || w_hh.dim(1) != units || w_ih.dim(0) != 4 * units) {
    throw Error(ErrorCode::kShapeMismatch,
                "lstm_step: input width " + std::to_string(dim) + " / units " +
                    std::to_string(units) + " inconsistent with weights " +
                    shape_string(w_ih.shape()) + ", " +
                    shape_string(w_hh.shape()));
  }
  std::vector<T> z(static_cast<std::size_t>(4 * units));
  for (std::int64_t k = 0; k < 4 * units; ++k) {
    T acc = bias[k];
    const T* wi = &w_ih[k * dim];
    for (std::int64_t j = 0; j < dim; ++j) acc += wi[j] * x[j];
    const T* wh = &w_hh[k * units];
    for (std::int64_t j = 0; j < units; ++j) acc += wh[j] * state.h[j];
    z[k] = acc;
  }
  LstmState<T> next = LstmState<T>::zeros(static_cast<int>(units));
  std::vector<T> gi(units), gf(units), gg(units), go(units), tc(units);
  for (std::int64_t u = 0; u < units; ++u) {
    gi[u] = ops::sigmoid_scalar(z[u]);
    gf[u] = ops::sigmoid_scalar(z[units + u]);
    gg[u] = tanh_scalar(z[2 * units + u]);
    go[u] = ops::sigmoid_scalar(z[3 * units + u]);
    next.c[u] = gf[u] * state.c[u] + gi[u] * gg[u];
    tc[u] = tanh_scalar(next.c[u]);
    next.h[u] = go[u] * tc[u];
  }
  if (cache) {
    cache->x = Tensor<T>({dim}, std::vector<T>(x, x + dim));
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->g = std::move(gg);
    cache->o = std::move(go);
    cache->tanh_c = std::move(tc);
  }
  Tensor<T> h = next.h;
  return {std::move(h), std::move(next)};
}

template <typename T>
ClipForward<T> clip_impl(const Params<T>& params, const ModelConfig& config,
                         const Tensor<T>& clip, Mode mode, Rng* rng,
                         ClipTape<T>* tape) {
  if (clip.rank() != 4 || clip.dim(0) < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "forward_clip: expected [T,3,S,S] with T >= 1, got " +
                    shape_string(clip.shape()));
  }
  const std::int64_t steps = clip.dim(0);
  const bool training = mode == Mode::kTrain;
  Tensor<T> feats = backbone_impl(params, config, clip,
                                  tape ? &tape->backbone : nullptr);
  feats = ops::layer_norm(feats, param(params, "ln1.gamma"),
                          param(params, "ln1.beta"), config.layer_norm_eps,
                          tape ? &tape->ln1 : nullptr);
  feats = ops::dropout(feats, config.dropout_rate, rng, training,
                       tape ? &tape->drop : nullptr)
              .output;

  const int units = config.lstm_units;
  const std::int64_t dim = feats.dim(1);
  Tensor<T> hidden({steps, units});
  LstmState<T> state = LstmState<T>::zeros(units);
  if (tape) tape->lstm.resize(static_cast<std::size_t>(steps));
  for (std::int64_t t = 0; t < steps; ++t) {
    auto [h, next] = lstm_step_impl(params, &feats[t * dim], dim, state,
                                    tape ? &tape->lstm[t] : nullptr);
    std::copy(h.data().begin(), h.data().end(), &hidden[t * units]);
    state = std::move(next);
  }
  hidden = ops::layer_norm(hidden, param(params, "ln2.gamma"),
                           param(params, "ln2.beta"), config.layer_norm_eps,
                           tape ? &tape->ln2 : nullptr);
  Tensor<T> logits = ops::linear(hidden, param(params, "fc.weight"),
                                 param(params, "fc.bias"),
                                 tape ? &tape->fc : nullptr);
  ClipForward<T> out;
  out.logits = logits.reshaped({steps});
  out.probabilities = ops::sigmoid(out.logits);
  return out;
}

}  // namespace

ModelConfig ModelConfig::desk_scale() {
  ModelConfig c;
  c.input_size = 64;
  c.stem_channels = 8;
  c.backbone_blocks = {{2, 16, 2, 1}, {2, 24, 2, 1}, {4, 32, 2, 1}};
  c.head_channels = 0;
  c.feature_dim = 32;
  c.lstm_units = 32;
  c.dropout_rate = 0.5;
  c.layer_norm_eps = 1e-5;
  return c;
}

ModelConfig ModelConfig::mobilenet_v2() {
  ModelConfig c;
  c.input_size = 64;
  c.stem_channels = 32;
  c.backbone_blocks = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 2, 3},
                       {6, 64, 2, 4},  {6, 96, 1, 3},  {6, 160, 2, 3},
                       {6, 320, 1, 1}};
  c.head_channels = 1280;
  c.feature_dim = 1280;
  c.lstm_units = 640;
  c.dropout_rate = 0.5;
  c.layer_norm_eps = 1e-5;
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.input_size = 16;
  c.stem_channels = 8;
  // The first block keeps 8 channels at stride 1, so it has a skip path.
  c.backbone_blocks = {{1, 8, 1, 1}, {2, 12, 2, 1}};
  c.head_channels = 0;
  c.feature_dim = 12;
  c.lstm_units = 8;
  c.dropout_rate = 0.5;
  c.layer_norm_eps = 1e-5;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "desk") return desk_scale();
  if (name == "mobilenet_v2") return mobilenet_v2();
  if (name == "tiny") return tiny();
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model preset '" + name +
                  "' (expected desk, mobilenet_v2 or tiny)");
}

int ModelConfig::backbone_output_channels() const {
  if (head_channels > 0) return head_channels;
  if (backbone_blocks.empty()) return stem_channels;
  return backbone_blocks.back().out_channels;
}

void ModelConfig::validate() const {
  if (stem_channels < 1) config_error("stem_channels must be >= 1");
  if (backbone_blocks.empty()) config_error("backbone_blocks is empty");
  int stride2 = 1;  // the stem
  for (std::size_t i = 0; i < backbone_blocks.size(); ++i) {
    const auto& b = backbone_blocks[i];
    const std::string where = "block stage " + std::to_string(i) + ": ";
    if (b.expansion_factor < 1) config_error(where + "expansion_factor < 1");
    if (b.out_channels < 1) config_error(where + "out_channels < 1");
    if (b.stride != 1 && b.stride != 2) config_error(where + "stride not 1 or 2");
    if (b.repeats < 1) config_error(where + "repeats < 1");
    if (b.stride == 2) ++stride2;
  }
  if (head_channels < 0) config_error("head_channels must be >= 0");
  if (input_size < 8) config_error("input_size must be >= 8");
  if (stride2 >= 31 || input_size % (1 << stride2) != 0) {
    config_error("input_size " + std::to_string(input_size) +
                 " not divisible by 2^" + std::to_string(stride2));
  }
  if (feature_dim != backbone_output_channels()) {
    config_error("feature_dim " + std::to_string(feature_dim) +
                 " != backbone output width " +
                 std::to_string(backbone_output_channels()));
  }
  if (lstm_units < 1) config_error("lstm_units must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    config_error("dropout_rate must be in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) config_error("layer_norm_eps must be > 0");
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : backbone_blocks) {
    blocks.push_back({{"expansion_factor", b.expansion_factor},
                      {"out_channels", b.out_channels},
                      {"stride", b.stride},
                      {"repeats", b.repeats}});
  }
  return {{"input_size", input_size},         {"stem_channels", stem_channels},
          {"backbone_blocks", blocks},        {"head_channels", head_channels},
          {"feature_dim", feature_dim},       {"lstm_units", lstm_units},
          {"dropout_rate", dropout_rate},     {"layer_norm_eps", layer_norm_eps}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.input_size = j.at("input_size").get<int>();
    c.stem_channels = j.at("stem_channels").get<int>();
    c.head_channels = j.at("head_channels").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.lstm_units = j.at("lstm_units").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    for (const auto& b : j.at("backbone_blocks")) {
      c.backbone_blocks.push_back({b.at("expansion_factor").get<int>(),
                                   b.at("out_channels").get<int>(),
                                   b.at("stride").get<int>(),
                                   b.at("repeats").get<int>()});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigMismatch,
                std::string("model config json: ") + e.what());
  }
}

std::map<std::string, Shape> param_shapes(const ModelConfig& config) {
  config.validate();
  std::map<std::string, Shape> shapes;
  const std::int64_t stem = config.stem_channels;
  shapes["stem.weight"] = {stem, 3, 3, 3};
  shapes["stem.bias"] = {stem};
  std::int64_t last = stem;
  for (const BlockLayout& b : block_layout(config)) {
    const std::int64_t hidden = b.hidden_channels;
    if (b.has_expand) {
      shapes[b.prefix + ".expand.weight"] = {hidden, b.in_channels, 1, 1};
      shapes[b.prefix + ".expand.bias"] = {hidden};
    }
    shapes[b.prefix + ".dw.weight"] = {hidden, 3, 3};
    shapes[b.prefix + ".dw.bias"] = {hidden};
    shapes[b.prefix + ".project.weight"] = {b.out_channels, hidden, 1, 1};
    shapes[b.prefix + ".project.bias"] = {b.out_channels};
    last = b.out_channels;
  }
  if (config.head_channels > 0) {
    shapes["head.weight"] = {config.head_channels, last, 1, 1};
    shapes["head.bias"] = {config.head_channels};
  }
  const std::int64_t feat = config.feature_dim;
  const std::int64_t units = config.lstm_units;
  shapes["ln1.gamma"] = {feat};
  shapes["ln1.beta"] = {feat};
  shapes["lstm.w_ih"] = {4 * units, feat};
  shapes["lstm.w_hh"] = {4 * units, units};
  shapes["lstm.bias"] = {4 * units};
  shapes["ln2.gamma"] = {units};
  shapes["ln2.beta"] = {units};
  shapes["fc.weight"] = {1, units};
  shapes["fc.bias"] = {1};
  return shapes;
}

double glorot_bound(const Shape& shape) {
  double fan_in = 0;
  double fan_out = 0;
  switch (shape.size()) {
    case 4:  // [F, C, kH, kW]
      fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
      fan_out = static_cast<double>(shape[0] * shape[2] * shape[3]);
      break;
    case 3:  // depthwise [C, kH, kW]: each filter maps one channel to one
      fan_in = fan_out = static_cast<double>(shape[1] * shape[2]);
      break;
    case 2:  // [O, D]
      fan_in = static_cast<double>(shape[1]);
      fan_out = static_cast<double>(shape[0]);
      break;
    default:
      return 0.0;
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename T>
Params<T> init_params(const ModelConfig& config, Rng& rng) {
  Params<T> params;
  for (const auto& [name, shape] : param_shapes(config)) {
    Tensor<T> t(shape);
    const bool is_gamma = name.size() > 6 && name.ends_with(".gamma");
    if (shape.size() >= 2) {
      const double bound = glorot_bound(shape);
      for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    } else if (is_gamma) {
      t.fill(T(1));
    } else if (name == "lstm.bias") {
      // Gate order i, f, g, o; the forget slice starts at 1.
      const std::int64_t units = config.lstm_units;
      for (std::int64_t u = units; u < 2 * units; ++u) t[u] = T(1);
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

template <typename T>
Tensor<T> backbone_forward(const Params<T>& params, const ModelConfig& config,
                           const Tensor<T>& batch) {
  return backbone_impl<T>(params, config, batch, nullptr);
}

template <typename T>
std::pair<Tensor<T>, LstmState<T>> lstm_step(const Params<T>& params,
                                             const Tensor<T>& x,
                                             const LstmState<T>& state) {
  if (x.rank() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "lstm_step: x must be a vector, got " + shape_string(x.shape()));
  }
  return lstm_step_impl<T>(params, x.data().data(), x.dim(0), state, nullptr);
}

template <typename T>
Tensor<T> forward_clip(const Params<T>& params, const ModelConfig& config,
                       const Tensor<T>& clip, Mode mode, Rng* rng) {
  return clip_impl<T>(params, config, clip, mode, rng, nullptr).probabilities;
}

template <typename T>
ClipForward<T> forward_clip_taped(const Params<T>& params,
                                  const ModelConfig& config,
                                  const Tensor<T>& clip, Mode mode, Rng* rng,
                                  ClipTape<T>& tape) {
  tape = ClipTape<T>{};
  return clip_impl<T>(params, config, clip, mode, rng, &tape);
}

template <typename T>
Params<T> backward_clip(const Params<T>& params, const ModelConfig& config,
                        const ClipTape<T>& tape, const Tensor<T>& d_logits) {
  using ops::Op;
  const std::int64_t steps = static_cast<std::int64_t>(tape.lstm.size());
  if (steps == 0) {
    throw Error(ErrorCode::kMissingCache, "backward_clip: empty tape");
  }
  if (d_logits.shape() != Shape{steps}) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward_clip: d_logits shape " +
                    shape_string(d_logits.shape()) + " != [" +
                    std::to_string(steps) + "]");
  }
  Params<T> grads;
  auto g = ops::backward(Op::kLinear, tape.fc, d_logits.reshaped({steps, 1}));
  accumulate(grads, "fc", g);
  g = ops::backward(Op::kLayerNorm, tape.ln2, g.d_input);
  accumulate(grads, "ln2", g);
  const Tensor<T>& d_hidden = g.d_input;

  const Tensor<T>& w_ih = param(params, "lstm.w_ih");
  const Tensor<T>& w_hh = param(params, "lstm.w_hh");
  const std::int64_t units = config.lstm_units;
  const std::int64_t dim = w_ih.dim(1);
  Tensor<T> d_w_ih(w_ih.shape());
  Tensor<T> d_w_hh(w_hh.shape());
  Tensor<T> d_bias({4 * units});
  Tensor<T> d_feats({steps, dim});
  std::vector<T> dh_next(units, T(0)), dc_next(units, T(0)), dz(4 * units);
  for (std::int64_t t = steps - 1; t >= 0; --t) {
    const LstmStepCache<T>& s = tape.lstm[t];
    for (std::int64_t u = 0; u < units; ++u) {
      const T dh = d_hidden[t * units + u] + dh_next[u];
      const T i = s.i[u], f = s.f[u], gg = s.g[u], o = s.o[u], tc = s.tanh_c[u];
      const T d_o = dh * tc;
      const T dc = dh * o * (T(1) - tc * tc) + dc_next[u];
      dz[u] = dc * gg * i * (T(1) - i);
      dz[units + u] = dc * s.c_prev[u] * f * (T(1) - f);
      dz[2 * units + u] = dc * i * (T(1) - gg * gg);
      dz[3 * units + u] = d_o * o * (T(1) - o);
      dc_next[u] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), T(0));
    T* dx = &d_feats[t * dim];
    for (std::int64_t k = 0; k < 4 * units; ++k) {
      const T gz = dz[k];
      d_bias[k] += gz;
      const T* wi = &w_ih[k * dim];
      T* dwi = &d_w_ih[k * dim];
      for (std::int64_t j = 0; j < dim; ++j) {
        dwi[j] += gz * s.x[j];
        dx[j] += gz * wi[j];
      }
      const T* wh = &w_hh[k * units];
      T* dwh = &d_w_hh[k * units];
      for (std::int64_t j = 0; j < units; ++j) {
        dwh[j] += gz * s.h_prev[j];
        dh_next[j] += gz * wh[j];
      }
    }
  }
  grads.emplace("lstm.w_ih", std::move(d_w_ih));
  grads.emplace("lstm.w_hh", std::move(d_w_hh));
  grads.emplace("lstm.bias", std::move(d_bias));

  g = ops::backward(Op::kDropout, tape.drop, d_feats);
  g = ops::backward(Op::kLayerNorm, tape.ln1, g.d_input);
  accumulate(grads, "ln1", g);
  backbone_backward(tape.backbone, g.d_input, grads);
  return grads;
}

namespace {

template <typename T>
Labels binarize_impl(std::span<const T> probabilities, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "binarize: threshold must be in (0, 1), got " +
                    std::to_string(threshold));
  }
  Labels labels(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    labels[i] = static_cast<double>(probabilities[i]) >= threshold ? 1 : 0;
  }
  return labels;
}

}  // namespace

Labels binarize(std::span<const float> probabilities, double threshold) {
  return binarize_impl(probabilities, threshold);
}

Labels binarize(std::span<const double> probabilities, double threshold) {
  return binarize_impl(probabilities, threshold);
}

#define OOBNET_INSTANTIATE_MODEL(T)                                          \
  template Params<T> init_params<T>(const ModelConfig&, Rng&);               \
  template Tensor<T> backbone_forward(const Params<T>&, const ModelConfig&,  \
                                      const Tensor<T>&);                     \
  template std::pair<Tensor<T>, LstmState<T>> lstm_step(                     \
      const Params<T>&, const Tensor<T>&, const LstmState<T>&);              \
  template Tensor<T> forward_clip(const Params<T>&, const ModelConfig&,      \
                                  const Tensor<T>&, Mode, Rng*);             \
  template ClipForward<T> forward_clip_taped(const Params<T>&,               \
                                             const ModelConfig&,             \
                                             const Tensor<T>&, Mode, Rng*,   \
                                             ClipTape<T>&);                  \
  template Params<T> backward_clip(const Params<T>&, const ModelConfig&,     \
                                   const ClipTape<T>&, const Tensor<T>&);

OOBNET_INSTANTIATE_MODEL(float)
OOBNET_INSTANTIATE_MODEL(double)

}  // namespace oobnet
