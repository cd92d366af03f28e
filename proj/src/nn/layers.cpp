#include "unipose/nn/layers.hpp"

#include <cmath>

namespace unipose::nn {

template <typename T>
Tensor<T> Initializer::he_normal(Shape shape, int fan_in) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(fan_in, 1)));
  std::vector<T> values(shape.numel());
  for (auto& v : values) v = static_cast<T>(dist(rng_));
  return Tensor<T>(shape, std::move(values), true);
}

template <typename T>
Tensor<T> Initializer::constant(Shape shape, double value) {
  return Tensor<T>::full(shape, static_cast<T>(value), true);
}

template <typename T>
Conv2d<T>::Conv2d(const ConvSpec& spec, Initializer& init) : spec_(spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 ||
      spec.dilation < 1) {
    throw TensorError("Conv2d: invalid layer specification");
  }
  weight_ = init.he_normal<T>(Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
                              spec.in_channels * spec.kernel * spec.kernel);
  if (spec.bias) bias_ = init.constant<T>(Shape{spec.out_channels, 1, 1, 1}, 0.0);
}

template <typename T>
Tensor<T> Conv2d<T>::operator()(const Tensor<T>& input) const {
  return ops::conv2d(input, weight_, bias_,
                     {spec_.stride, spec_.resolved_padding(), spec_.dilation});
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".weight", weight_});
  if (bias_.defined()) out.push_back({prefix + ".bias", bias_});
}

template <typename T>
ChannelAffine<T>::ChannelAffine(int channels, double initial_scale, Initializer& init)
    : scale_(init.constant<T>(Shape{channels, 1, 1, 1}, initial_scale)),
      shift_(init.constant<T>(Shape{channels, 1, 1, 1}, 0.0)) {}

template <typename T>
Tensor<T> ChannelAffine<T>::operator()(const Tensor<T>& input) const {
  return ops::channel_affine(input, scale_, shift_);
}

template <typename T>
void ChannelAffine<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  out.push_back({prefix + ".scale", scale_});
  out.push_back({prefix + ".shift", shift_});
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, std::uint64_t seed, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw TensorError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return input;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(input.numel());
  for (auto& m : mask) m = u(rng) < rate ? T(0) : keep;
  return ops::mul_constant<T>(input, mask);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class ChannelAffine<float>;
template class ChannelAffine<double>;
template Tensor<float> dropout(const Tensor<float>&, double, std::uint64_t, bool);
template Tensor<double> dropout(const Tensor<double>&, double, std::uint64_t, bool);
template Tensor<float> Initializer::he_normal<float>(Shape, int);
template Tensor<double> Initializer::he_normal<double>(Shape, int);
template Tensor<float> Initializer::constant<float>(Shape, double);
template Tensor<double> Initializer::constant<double>(Shape, double);

}  // namespace unipose::nn
