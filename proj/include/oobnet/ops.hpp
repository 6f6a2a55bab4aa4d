#pragma once

#include <map>
#include <string>
#include <variant>

#include "oobnet/rng.hpp"
#include "oobnet/tensor.hpp"

// Forward and backward kernels for every layer the network uses. Forward
// functions are pure; when given a cache pointer they record what the
// matching backward needs. Layout is N-C-H-W throughout.
namespace oobnet::ops {

enum class Op {
  kConv2d,
  kDepthwiseConv2d,
  kLinear,
  kRelu6,
  kLayerNorm,
  kDropout,
  kSigmoid,
  kGlobalAvgPool,
};

const char* op_name(Op op);

template <typename T>
struct ConvCache {
  Tensor<T> input;
  Tensor<T> weight;
  int stride = 1;
  int padding = 0;
  bool depthwise = false;
};

template <typename T>
struct LinearCache {
  Tensor<T> input;
  Tensor<T> weight;
};

template <typename T>
struct Relu6Cache {
  Tensor<T> input;
};

template <typename T>
struct LayerNormCache {
  Tensor<T> normalized;  // (x - mean) / sqrt(var + eps)
  std::vector<T> inv_std;
  Tensor<T> gamma;
};

template <typename T>
struct DropoutCache {
  Tensor<T> mask;  // 0 or 1/(1-rate) per element
};

template <typename T>
struct SigmoidCache {
  Tensor<T> output;
};

struct PoolCache {
  Shape input_shape;
};

template <typename T>
using OpCache = std::variant<std::monostate, ConvCache<T>, LinearCache<T>,
                             Relu6Cache<T>, LayerNormCache<T>, DropoutCache<T>,
                             SigmoidCache<T>, PoolCache>;

// Gradients of a scalar loss w.r.t. an op's input and its parameters. Keys in
// d_params are "weight", "bias", "gamma", "beta".
template <typename T>
struct LayerGrad {
  Tensor<T> d_input;
  std::map<std::string, Tensor<T>> d_params;
};

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding,
                 OpCache<T>* cache = nullptr);

// weight is [C, kH, kW]: one filter per channel.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                           const Tensor<T>& bias, int stride, int padding,
                           OpCache<T>* cache = nullptr);

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, OpCache<T>* cache = nullptr);

template <typename T>
Tensor<T> relu6(const Tensor<T>& input, OpCache<T>* cache = nullptr);

// Normalizes each row of [N, D] with population variance.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps = 1e-5,
                     OpCache<T>* cache = nullptr);

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;
};

// Inverted dropout. In inference mode (training == false) the input passes
// through untouched and the generator is not consulted, so rng may be null.
template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, Rng* rng,
                         bool training, OpCache<T>* cache = nullptr);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input, OpCache<T>* cache = nullptr);

// Scalar helpers shared with the LSTM cell and the loss.
template <typename T>
inline T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input, OpCache<T>* cache = nullptr);

// Dispatches to the op's analytic backward. Throws kMissingCache when the
// cache is empty or was recorded by a different op.
template <typename T>
LayerGrad<T> backward(Op op, const OpCache<T>& cache, const Tensor<T>& d_output);

// Elementwise helpers used when composing layers.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b);

}  // namespace oobnet::ops
