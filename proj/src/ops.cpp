#include "oobnet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace oobnet::ops {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConv2d: return "conv2d";
    case Op::kDepthwiseConv2d: return "depthwise_conv2d";
    case Op::kLinear: return "linear";
    case Op::kRelu6: return "relu6";
    case Op::kLayerNorm: return "layer_norm";
    case Op::kDropout: return "dropout";
    case Op::kSigmoid: return "sigmoid";
    case Op::kGlobalAvgPool: return "global_avg_pool";
  }
  return "unknown";
}

namespace {

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

void require_rank(const Shape& shape, std::size_t rank, const char* op,
                  const char* name) {
  if (shape.size() != rank) {
    shape_error(std::string(op) + ": " + name + " must have rank " +
                std::to_string(rank) + ", got shape " + shape_string(shape));
  }
}

// Half-open range of output positions o for which o*stride - padding + k
// lands inside [0, in).
struct Range {
  std::int64_t begin;
  std::int64_t end;
};

Range valid_outputs(std::int64_t in, std::int64_t out, int stride, int padding,
                    std::int64_t k) {
  const std::int64_t lo_num = padding - k;
  const std::int64_t lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
  const std::int64_t hi_num = in - 1 + padding - k;
  if (hi_num < 0) return {0, 0};
  const std::int64_t hi = std::min(out, hi_num / stride + 1);
  return {lo, std::max(lo, hi)};
}

struct ConvGeometry {
  std::int64_t n, c, h, w;
  std::int64_t f, kh, kw;
  std::int64_t ho, wo;
};

ConvGeometry conv_geometry(const Shape& in, const Shape& weight,
                           const Shape& bias, int stride, int padding,
                           bool depthwise) {
  const char* op = depthwise ? "depthwise_conv2d" : "conv2d";
  require_rank(in, 4, op, "input");
  require_rank(weight, depthwise ? 3 : 4, op, "weight");
  require_rank(bias, 1, op, "bias");
  if (stride < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(op) + ": stride must be >= 1");
  }
  if (padding < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(op) + ": padding must be >= 0");
  }
  ConvGeometry g{};
  g.n = in[0];
  g.c = in[1];
  g.h = in[2];
  g.w = in[3];
  if (depthwise) {
    g.f = weight[0];
    g.kh = weight[1];
    g.kw = weight[2];
    if (g.f != g.c) {
      shape_error(std::string(op) + ": weight channels " +
                  std::to_string(g.f) + " != input channels " +
                  std::to_string(g.c));
    }
  } else {
    g.f = weight[0];
    g.kh = weight[2];
    g.kw = weight[3];
    if (weight[1] != g.c) {
      shape_error(std::string(op) + ": weight in-channels " +
                  std::to_string(weight[1]) + " != input channels " +
                  std::to_string(g.c));
    }
  }
  if (bias[0] != g.f) {
    shape_error(std::string(op) + ": bias length " + std::to_string(bias[0]) +
                " != filters " + std::to_string(g.f));
  }
  if (g.kh > g.h + 2 * padding || g.kw > g.w + 2 * padding) {
    shape_error(std::string(op) + ": kernel " + std::to_string(g.kh) + "x" +
                std::to_string(g.kw) + " exceeds padded input " +
                std::to_string(g.h + 2 * padding) + "x" +
                std::to_string(g.w + 2 * padding));
  }
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;
  return g;
}

// Accumulates one input plane convolved with one kernel into an output plane.
template <typename T>
void conv_plane_forward(const T* in, const T* kernel, T* out,
                        const ConvGeometry& g, int stride, int padding) {
  for (std::int64_t ky = 0; ky < g.kh; ++ky) {
    const Range ry = valid_outputs(g.h, g.ho, stride, padding, ky);
    for (std::int64_t kx = 0; kx < g.kw; ++kx) {
      const T wv = kernel[ky * g.kw + kx];
      if (wv == T(0)) continue;
      const Range rx = valid_outputs(g.w, g.wo, stride, padding, kx);
      for (std::int64_t oy = ry.begin; oy < ry.end; ++oy) {
        const T* in_row = in + (oy * stride - padding + ky) * g.w;
        T* out_row = out + oy * g.wo;
        const std::int64_t offset = kx - padding;
        if (stride == 1) {
          const T* src = in_row + offset;
          for (std::int64_t ox = rx.begin; ox < rx.end; ++ox) {
            out_row[ox] += wv * src[ox];
          }
        } else {
          for (std::int64_t ox = rx.begin; ox < rx.end; ++ox) {
            out_row[ox] += wv * in_row[ox * stride + offset];
          }
        }
      }
    }
  }
}

template <typename T>
void conv_plane_backward(const T* in, const T* kernel, const T* d_out,
                         T* d_in, T* d_kernel, const ConvGeometry& g,
                         int stride, int padding) {
  for (std::int64_t ky = 0; ky < g.kh; ++ky) {
    const Range ry = valid_outputs(g.h, g.ho, stride, padding, ky);
    for (std::int64_t kx = 0; kx < g.kw; ++kx) {
      const T wv = kernel[ky * g.kw + kx];
      const Range rx = valid_outputs(g.w, g.wo, stride, padding, kx);
      T dw = T(0);
      for (std::int64_t oy = ry.begin; oy < ry.end; ++oy) {
        const std::int64_t row = (oy * stride - padding + ky) * g.w;
        const T* in_row = in + row;
        T* d_in_row = d_in + row;
        const T* d_out_row = d_out + oy * g.wo;
        const std::int64_t offset = kx - padding;
        for (std::int64_t ox = rx.begin; ox < rx.end; ++ox) {
          const std::int64_t ix = ox * stride + offset;
          dw += in_row[ix] * d_out_row[ox];
          d_in_row[ix] += wv * d_out_row[ox];
        }
      }
      d_kernel[ky * g.kw + kx] += dw;
    }
  }
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const Tensor<T>& weight,
                       const Tensor<T>& bias, int stride, int padding,
                       bool depthwise, OpCache<T>* cache) {
  const ConvGeometry g = conv_geometry(input.shape(), weight.shape(),
                                       bias.shape(), stride, padding, depthwise);
  Tensor<T> out({g.n, g.f, g.ho, g.wo});
  const std::int64_t in_plane = g.h * g.w;
  const std::int64_t out_plane = g.ho * g.wo;
  const std::int64_t ksize = g.kh * g.kw;
  const T* in = input.data().data();
  const T* wt = weight.data().data();
  T* o = out.data().data();
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t f = 0; f < g.f; ++f) {
      T* plane = o + (n * g.f + f) * out_plane;
      std::fill(plane, plane + out_plane, bias[f]);
      if (depthwise) {
        conv_plane_forward(in + (n * g.c + f) * in_plane, wt + f * ksize,
                           plane, g, stride, padding);
      } else {
        for (std::int64_t c = 0; c < g.c; ++c) {
          conv_plane_forward(in + (n * g.c + c) * in_plane,
                             wt + (f * g.c + c) * ksize, plane, g, stride,
                             padding);
        }
      }
    }
  }
  OOBNET_DEBUG_CHECK_FINITE(out, depthwise ? "depthwise_conv2d" : "conv2d");
  if (cache) {
    *cache = ConvCache<T>{input, weight, stride, padding, depthwise};
  }
  return out;
}

template <typename T>
LayerGrad<T> conv_backward(const ConvCache<T>& c, const Tensor<T>& d_output) {
  const Shape bias_shape{c.weight.shape()[0]};
  const ConvGeometry g = conv_geometry(c.input.shape(), c.weight.shape(),
                                       bias_shape, c.stride, c.padding,
                                       c.depthwise);
  if (d_output.shape() != Shape{g.n, g.f, g.ho, g.wo}) {
    shape_error("conv backward: d_output shape " +
                shape_string(d_output.shape()) + " != forward output " +
                shape_string({g.n, g.f, g.ho, g.wo}));
  }
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(c.input.shape());
  Tensor<T> d_weight(c.weight.shape());
  Tensor<T> d_bias(bias_shape);
  const std::int64_t in_plane = g.h * g.w;
  const std::int64_t out_plane = g.ho * g.wo;
  const std::int64_t ksize = g.kh * g.kw;
  const T* in = c.input.data().data();
  const T* wt = c.weight.data().data();
  const T* dout = d_output.data().data();
  T* din = grad.d_input.data().data();
  T* dwt = d_weight.data().data();
  for (std::int64_t n = 0; n < g.n; ++n) {
    for (std::int64_t f = 0; f < g.f; ++f) {
      const T* dplane = dout + (n * g.f + f) * out_plane;
      T sum = T(0);
      for (std::int64_t i = 0; i < out_plane; ++i) sum += dplane[i];
      d_bias[f] += sum;
      if (c.depthwise) {
        conv_plane_backward(in + (n * g.c + f) * in_plane, wt + f * ksize,
                            dplane, din + (n * g.c + f) * in_plane,
                            dwt + f * ksize, g, c.stride, c.padding);
      } else {
        for (std::int64_t ch = 0; ch < g.c; ++ch) {
          conv_plane_backward(in + (n * g.c + ch) * in_plane,
                              wt + (f * g.c + ch) * ksize, dplane,
                              din + (n * g.c + ch) * in_plane,
                              dwt + (f * g.c + ch) * ksize, g, c.stride,
                              c.padding);
        }
      }
    }
  }
  grad.d_params.emplace("weight", std::move(d_weight));
  grad.d_params.emplace("bias", std::move(d_bias));
  return grad;
}

template <typename T>
LayerGrad<T> linear_backward(const LinearCache<T>& c, const Tensor<T>& d_output) {
  const std::int64_t n = c.input.dim(0);
  const std::int64_t d = c.input.dim(1);
  const std::int64_t o = c.weight.dim(0);
  if (d_output.shape() != Shape{n, o}) {
    shape_error("linear backward: d_output shape " +
                shape_string(d_output.shape()) + " != " +
                shape_string({n, o}));
  }
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(c.input.shape());
  Tensor<T> d_weight(c.weight.shape());
  Tensor<T> d_bias({o});
  for (std::int64_t r = 0; r < n; ++r) {
    const T* x = &c.input[r * d];
    T* dx = &grad.d_input[r * d];
    for (std::int64_t k = 0; k < o; ++k) {
      const T g = d_output[r * o + k];
      if (g == T(0)) continue;
      d_bias[k] += g;
      const T* w = &c.weight[k * d];
      T* dw = &d_weight[k * d];
      for (std::int64_t j = 0; j < d; ++j) {
        dx[j] += g * w[j];
        dw[j] += g * x[j];
      }
    }
  }
  grad.d_params.emplace("weight", std::move(d_weight));
  grad.d_params.emplace("bias", std::move(d_bias));
  return grad;
}

template <typename T>
void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    shape_error(std::string(op) + " backward: d_output shape " +
                shape_string(b) + " != forward shape " + shape_string(a));
  }
}

template <typename T>
LayerGrad<T> relu6_backward(const Relu6Cache<T>& c, const Tensor<T>& d_output) {
  require_same_shape<T>(c.input.shape(), d_output.shape(), "relu6");
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(c.input.shape());
  for (std::size_t i = 0; i < c.input.size(); ++i) {
    const T x = c.input[i];
    grad.d_input[i] = (x > T(0) && x < T(6)) ? d_output[i] : T(0);
  }
  return grad;
}

template <typename T>
LayerGrad<T> layer_norm_backward(const LayerNormCache<T>& c,
                                 const Tensor<T>& d_output) {
  require_same_shape<T>(c.normalized.shape(), d_output.shape(), "layer_norm");
  const std::int64_t n = c.normalized.dim(0);
  const std::int64_t d = c.normalized.dim(1);
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(c.normalized.shape());
  Tensor<T> d_gamma({d});
  Tensor<T> d_beta({d});
  std::vector<double> dxhat(static_cast<std::size_t>(d));
  for (std::int64_t r = 0; r < n; ++r) {
    const T* xhat = &c.normalized[r * d];
    const T* dy = &d_output[r * d];
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      d_gamma[j] += dy[j] * xhat[j];
      d_beta[j] += dy[j];
      dxhat[j] = static_cast<double>(dy[j]) * c.gamma[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    const double inv_std = c.inv_std[r];
    T* dx = &grad.d_input[r * d];
    for (std::int64_t j = 0; j < d; ++j) {
      dx[j] = static_cast<T>(inv_std *
                             (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat));
    }
  }
  grad.d_params.emplace("gamma", std::move(d_gamma));
  grad.d_params.emplace("beta", std::move(d_beta));
  return grad;
}

template <typename T>
LayerGrad<T> dropout_backward(const DropoutCache<T>& c,
                              const Tensor<T>& d_output) {
  require_same_shape<T>(c.mask.shape(), d_output.shape(), "dropout");
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(d_output.shape());
  for (std::size_t i = 0; i < d_output.size(); ++i) {
    grad.d_input[i] = d_output[i] * c.mask[i];
  }
  return grad;
}

template <typename T>
LayerGrad<T> sigmoid_backward(const SigmoidCache<T>& c,
                              const Tensor<T>& d_output) {
  require_same_shape<T>(c.output.shape(), d_output.shape(), "sigmoid");
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(d_output.shape());
  for (std::size_t i = 0; i < d_output.size(); ++i) {
    const T y = c.output[i];
    grad.d_input[i] = d_output[i] * y * (T(1) - y);
  }
  return grad;
}

template <typename T>
LayerGrad<T> pool_backward(const PoolCache& c, const Tensor<T>& d_output) {
  const Shape& s = c.input_shape;
  require_same_shape<T>(Shape{s[0], s[1]}, d_output.shape(), "global_avg_pool");
  const std::int64_t plane = s[2] * s[3];
  LayerGrad<T> grad;
  grad.d_input = Tensor<T>(s);
  const T scale = T(1) / static_cast<T>(plane);
  for (std::int64_t i = 0; i < s[0] * s[1]; ++i) {
    const T g = d_output[i] * scale;
    std::fill(&grad.d_input[i * plane], &grad.d_input[i * plane] + plane, g);
  }
  return grad;
}

template <typename Cache, typename T>
const Cache& expect_cache(Op op, const OpCache<T>& cache) {
  if (std::holds_alternative<std::monostate>(cache)) {
    throw Error(ErrorCode::kMissingCache,
                std::string(op_name(op)) + ": forward state was not cached");
  }
  const Cache* c = std::get_if<Cache>(&cache);
  if (!c) {
    throw Error(ErrorCode::kMissingCache,
                std::string(op_name(op)) +
                    ": cached state belongs to a different op");
  }
  return *c;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding,
                 OpCache<T>* cache) {
  return conv_forward(input, weight, bias, stride, padding, false, cache);
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, int stride, int padding,
                           OpCache<T>* cache) {
  return conv_forward(input, weight, bias, stride, padding, true, cache);
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, OpCache<T>* cache) {
  require_rank(input.shape(), 2, "linear", "input");
  require_rank(weight.shape(), 2, "linear", "weight");
  require_rank(bias.shape(), 1, "linear", "bias");
  const std::int64_t n = input.dim(0);
  const std::int64_t d = input.dim(1);
  const std::int64_t o = weight.dim(0);
  if (weight.dim(1) != d) {
    shape_error("linear: weight inner dim " + std::to_string(weight.dim(1)) +
                " != input dim " + std::to_string(d));
  }
  if (bias.dim(0) != o) {
    shape_error("linear: bias length " + std::to_string(bias.dim(0)) +
                " != outputs " + std::to_string(o));
  }
  Tensor<T> out({n, o});
  for (std::int64_t r = 0; r < n; ++r) {
    const T* x = &input[r * d];
    for (std::int64_t k = 0; k < o; ++k) {
      const T* w = &weight[k * d];
      T acc = bias[k];
      for (std::int64_t j = 0; j < d; ++j) acc += x[j] * w[j];
      out[r * o + k] = acc;
    }
  }
  OOBNET_DEBUG_CHECK_FINITE(out, "linear");
  if (cache) *cache = LinearCache<T>{input, weight};
  return out;
}

template <typename T>
Tensor<T> relu6(const Tensor<T>& input, OpCache<T>* cache) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = std::min(std::max(input[i], T(0)), T(6));
  }
  if (cache) *cache = Relu6Cache<T>{input};
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps, OpCache<T>* cache) {
  require_rank(input.shape(), 2, "layer_norm", "input");
  const std::int64_t n = input.dim(0);
  const std::int64_t d = input.dim(1);
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    shape_error("layer_norm: gamma " + shape_string(gamma.shape()) +
                " / beta " + shape_string(beta.shape()) +
                " must both be [" + std::to_string(d) + "]");
  }
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "layer_norm: eps must be > 0");
  }
  Tensor<T> out(input.shape());
  Tensor<T> normalized(input.shape());
  std::vector<T> inv_stds(static_cast<std::size_t>(n));
  for (std::int64_t r = 0; r < n; ++r) {
    const T* x = &input[r * d];
    double mean = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mean += x[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double dev = x[j] - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    inv_stds[r] = static_cast<T>(inv_std);
    for (std::int64_t j = 0; j < d; ++j) {
      const T xhat = static_cast<T>((x[j] - mean) * inv_std);
      normalized[r * d + j] = xhat;
      out[r * d + j] = xhat * gamma[j] + beta[j];
    }
  }
  OOBNET_DEBUG_CHECK_FINITE(out, "layer_norm");
  if (cache) {
    *cache = LayerNormCache<T>{std::move(normalized), std::move(inv_stds), gamma};
  }
  return out;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, Rng* rng,
                         bool training, OpCache<T>* cache) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  DropoutResult<T> result{input, Tensor<T>(input.shape(), T(1))};
  if (training) {
    if (!rng) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dropout: training mode needs a generator");
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < input.size(); ++i) {
      const T m = rng->bernoulli(rate) ? T(0) : keep_scale;
      result.mask[i] = m;
      result.output[i] = input[i] * m;
    }
  }
  if (cache) *cache = DropoutCache<T>{result.mask};
  return result;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input, OpCache<T>* cache) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = sigmoid_scalar(input[i]);
  }
  if (cache) *cache = SigmoidCache<T>{out};
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input, OpCache<T>* cache) {
  require_rank(input.shape(), 4, "global_avg_pool", "input");
  const std::int64_t nc = input.dim(0) * input.dim(1);
  const std::int64_t plane = input.dim(2) * input.dim(3);
  Tensor<T> out({input.dim(0), input.dim(1)});
  for (std::int64_t i = 0; i < nc; ++i) {
    double acc = 0.0;
    const T* p = &input[i * plane];
    for (std::int64_t j = 0; j < plane; ++j) acc += p[j];
    out[i] = static_cast<T>(acc / static_cast<double>(plane));
  }
  if (cache) *cache = PoolCache{input.shape()};
  return out;
}

template <typename T>
LayerGrad<T> backward(Op op, const OpCache<T>& cache, const Tensor<T>& d_output) {
  switch (op) {
    case Op::kConv2d:
    case Op::kDepthwiseConv2d: {
      const auto& c = expect_cache<ConvCache<T>>(op, cache);
      if (c.depthwise != (op == Op::kDepthwiseConv2d)) {
        throw Error(ErrorCode::kMissingCache,
                    std::string(op_name(op)) +
                        ": cached state belongs to a different op");
      }
      return conv_backward(c, d_output);
    }
    case Op::kLinear:
      return linear_backward(expect_cache<LinearCache<T>>(op, cache), d_output);
    case Op::kRelu6:
      return relu6_backward(expect_cache<Relu6Cache<T>>(op, cache), d_output);
    case Op::kLayerNorm:
      return layer_norm_backward(expect_cache<LayerNormCache<T>>(op, cache),
                                 d_output);
    case Op::kDropout:
      return dropout_backward(expect_cache<DropoutCache<T>>(op, cache),
                              d_output);
    case Op::kSigmoid:
      return sigmoid_backward(expect_cache<SigmoidCache<T>>(op, cache),
                              d_output);
    case Op::kGlobalAvgPool:
      return pool_backward<T>(expect_cache<PoolCache>(op, cache), d_output);
  }
  throw Error(ErrorCode::kInvalidArgument, "backward: unknown op");
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out = a;
  add_inplace(out, b);
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b) {
  if (acc.shape() != b.shape()) {
    shape_error("add: shapes " + shape_string(acc.shape()) + " and " +
                shape_string(b.shape()) + " differ");
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b[i];
}

#define OOBNET_INSTANTIATE_OPS(T)                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, int, int, OpCache<T>*);          \
  template Tensor<T> depthwise_conv2d(const Tensor<T>&, const Tensor<T>&,      \
                                      const Tensor<T>&, int, int,              \
                                      OpCache<T>*);                            \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, OpCache<T>*);                    \
  template Tensor<T> relu6(const Tensor<T>&, OpCache<T>*);                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&,            \
                                const Tensor<T>&, double, OpCache<T>*);        \
  template DropoutResult<T> dropout(const Tensor<T>&, double, Rng*, bool,      \
                                    OpCache<T>*);                              \
  template Tensor<T> sigmoid(const Tensor<T>&, OpCache<T>*);                   \
  template Tensor<T> global_avg_pool(const Tensor<T>&, OpCache<T>*);           \
  template LayerGrad<T> backward(Op, const OpCache<T>&, const Tensor<T>&);     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                  \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);

OOBNET_INSTANTIATE_OPS(float)
OOBNET_INSTANTIATE_OPS(double)

}  // namespace oobnet::ops
