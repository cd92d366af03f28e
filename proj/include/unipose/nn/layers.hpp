#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "unipose/ops.hpp"
#include "unipose/tensor.hpp"

namespace unipose::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

/// Deterministic weight initialisation. Values are drawn in double precision
/// so that float and double models built from the same seed agree.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  template <typename T>
  Tensor<T> he_normal(Shape shape, int fan_in);
  template <typename T>
  Tensor<T> constant(Shape shape, double value);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// One convolution layer: kernel, channels, stride, padding and dilation
/// rate. A negative padding means "same": dilation * (kernel - 1) / 2.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = -1;
  int dilation = 1;
  bool bias = true;

  int resolved_padding() const { return padding >= 0 ? padding : dilation * (kernel - 1) / 2; }
  std::int64_t param_count() const {
    return static_cast<std::int64_t>(out_channels) * in_channels * kernel * kernel +
           (bias ? out_channels : 0);
  }
};

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const ConvSpec& spec, Initializer& init);

  Tensor<T> operator()(const Tensor<T>& input) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;

  const ConvSpec& spec() const { return spec_; }
  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

 private:
  ConvSpec spec_;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

/// Per-channel learnable scale and shift with no batch statistics.
template <typename T>
class ChannelAffine {
 public:
  ChannelAffine() = default;
  ChannelAffine(int channels, double initial_scale, Initializer& init);

  Tensor<T> operator()(const Tensor<T>& input) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;

  Tensor<T>& scale() { return scale_; }
  Tensor<T>& shift() { return shift_; }

 private:
  Tensor<T> scale_;
  Tensor<T> shift_;
};

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1 / (1 - rate); the mask is
/// a pure function of `seed`. Evaluation mode is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, std::uint64_t seed, bool training);

}  // namespace unipose::nn
