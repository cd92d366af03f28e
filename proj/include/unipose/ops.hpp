#pragma once

#include <vector>

#include "unipose/tensor.hpp"

// Differentiable operations over (N,C,H,W) tensors. Every op records itself
// for reverse-mode differentiation when any input requires grad.
namespace unipose::ops {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// Output extent of a convolution/pooling window along one axis.
int conv_output_size(int input, int kernel, int stride, int padding, int dilation);

/// Atrous 2-D convolution. `weight` is (Cout, Cin, kh, kw); `bias` is either
/// undefined or holds Cout values. Each tap of the kernel reads the input
/// `dilation` pixels apart; dilation 1 is the dense convolution.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dOptions options);

/// Max over non-overlapping or strided windows, no padding. The gradient is
/// routed to the first (row-major) maximal element of each window.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int window, int stride);

/// Align-corners bilinear resampling.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& input, int out_h, int out_w);

/// Softmax over the H*W cells of every (sample, channel) plane.
template <typename T>
Tensor<T> spatial_softmax(const Tensor<T>& input);

/// Mean over H*W; output is (N,C,1,1).
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

/// Repeats an (N,C,1,1) tensor over an h x w grid.
template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& input, int h, int w);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);
template <typename T>
Tensor<T> tanh(const Tensor<T>& input);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// y = x * scale[c] + shift[c]; scale and shift hold C values each.
template <typename T>
Tensor<T> channel_affine(const Tensor<T>& input, const Tensor<T>& scale, const Tensor<T>& shift);

/// Concatenation along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

/// Channels [begin, begin + count).
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count);

/// Multiplies by a fixed (non-differentiable) mask of the same shape.
template <typename T>
Tensor<T> mul_constant(const Tensor<T>& input, std::span<const T> mask);

template <typename T>
Tensor<T> sum(const Tensor<T>& input);
template <typename T>
Tensor<T> mean(const Tensor<T>& input);

}  // namespace unipose::ops
