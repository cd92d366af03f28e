#include "unipose/nn/conv_lstm.hpp"

namespace unipose::nn {

template <typename T>
ConvLSTMCell<T>::ConvLSTMCell(int input_channels, int hidden_channels, Initializer& init,
                              int kernel)
    : input_channels_(input_channels), hidden_channels_(hidden_channels) {
  if (input_channels < 1 || hidden_channels < 1) {
    throw TensorError("ConvLSTMCell: channel counts must be positive");
  }
  gates_ = Conv2d<T>({input_channels + hidden_channels, 4 * hidden_channels, kernel, 1, -1, 1, true},
                     init);
}

template <typename T>
ConvLSTMState<T> ConvLSTMCell<T>::zero_state(int n, int h, int w) const {
  const Shape s{n, hidden_channels_, h, w};
  return {Tensor<T>(s), Tensor<T>(s)};
}

template <typename T>
ConvLSTMState<T> ConvLSTMCell<T>::step(const Tensor<T>& x, const ConvLSTMState<T>& state) const {
  const Shape& xs = x.shape();
  const Shape& hs = state.hidden.shape();
  if (xs.c != input_channels_) {
    throw TensorError("ConvLSTMCell: expected " + std::to_string(input_channels_) +
                      " input channels, got " + std::to_string(xs.c));
  }
  if (!(hs == state.cell.shape())) throw TensorError("ConvLSTMCell: hidden and cell shapes differ");
  if (hs.c != hidden_channels_ || hs.n != xs.n || hs.h != xs.h || hs.w != xs.w) {
    throw TensorError("ConvLSTMCell: state " + hs.str() + " does not match input " + xs.str());
  }
  const int c = hidden_channels_;
  auto z = gates_(ops::concat_channels<T>({x, state.hidden}));
  auto i = ops::sigmoid(ops::slice_channels(z, 0, c));
  auto f = ops::sigmoid(ops::slice_channels(z, c, c));
  auto o = ops::sigmoid(ops::slice_channels(z, 2 * c, c));
  auto g = ops::tanh(ops::slice_channels(z, 3 * c, c));
  auto cell = ops::add(ops::mul(f, state.cell), ops::mul(i, g));
  auto hidden = ops::mul(o, ops::tanh(cell));
  return {hidden, cell};
}

template <typename T>
void ConvLSTMCell<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  gates_.collect(prefix + ".gates", out);
}

template class ConvLSTMCell<float>;
template class ConvLSTMCell<double>;

}  // namespace unipose::nn
