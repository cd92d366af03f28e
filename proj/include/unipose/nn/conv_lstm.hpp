#pragma once

#include <string>

#include "unipose/nn/layers.hpp"

namespace unipose::nn {

template <typename T>
struct ConvLSTMState {
  Tensor<T> hidden;
  Tensor<T> cell;
};

/// Convolutional LSTM cell. One 3x3 convolution over concat(x, hidden)
/// produces the four gate pre-activations in the order i, f, o, g.
template <typename T>
class ConvLSTMCell {
 public:
  ConvLSTMCell() = default;
  ConvLSTMCell(int input_channels, int hidden_channels, Initializer& init, int kernel = 3);

  ConvLSTMState<T> zero_state(int n, int h, int w) const;
  ConvLSTMState<T> step(const Tensor<T>& x, const ConvLSTMState<T>& state) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;

  int input_channels() const { return input_channels_; }
  int hidden_channels() const { return hidden_channels_; }
  Conv2d<T>& gates() { return gates_; }

 private:
  int input_channels_ = 0;
  int hidden_channels_ = 0;
  Conv2d<T> gates_;
};

}  // namespace unipose::nn
