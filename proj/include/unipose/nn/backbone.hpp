#pragma once

#include <string>
#include <vector>

#include "unipose/nn/layers.hpp"

namespace unipose::nn {

/// Residual feature extractor with two taps: low-level features at stride 4
/// and deep features at stride 8.
///
/// Layout: a 3x3 stem conv followed by a 2x2 max pool (stride 2), then one
/// stage per entry of `stage_channels`. Each stage downsamples by its entry
/// of `stage_strides` in its first block and dilates by its entry of
/// `stage_dilations`. The low-level tap is the output of the first stage
/// whose cumulative stride reaches 4.
struct BackboneConfig {
  int in_channels = 3;
  int stem_channels = 64;
  std::vector<int> stage_channels{64, 256, 512, 512};
  std::vector<int> blocks_per_stage{2, 2, 2, 2};
  std::vector<int> stage_strides{1, 2, 2, 1};
  std::vector<int> stage_dilations{1, 1, 1, 2};
  int output_stride = 8;

  /// Throws TensorError unless the strides compose to exactly 8 with a
  /// stride-4 tap in between.
  void validate() const;
  int low_level_stage() const;
  int low_level_channels() const;
  int deep_channels() const { return stage_channels.back(); }
};

struct ResidualBlockSpec {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int dilation = 1;
};

/// out = relu(F(x) + shortcut(x)), F = affine(conv(relu(affine(conv(x))))).
/// The shortcut is the identity when shapes allow, otherwise a strided 1x1
/// projection with its own affine.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(const ResidualBlockSpec& spec, Initializer& init);

  Tensor<T> operator()(const Tensor<T>& input) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;

  const ResidualBlockSpec& spec() const { return spec_; }
  bool has_projection() const { return has_projection_; }

 private:
  ResidualBlockSpec spec_;
  Conv2d<T> conv1_, conv2_, projection_;
  ChannelAffine<T> norm1_, norm2_, projection_norm_;
  bool has_projection_ = false;
};

template <typename T>
struct BackboneFeatures {
  Tensor<T> low_level;  // (N, low_level_channels, H/4, W/4)
  Tensor<T> deep;       // (N, deep_channels, H/8, W/8)
};

template <typename T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& config, Initializer& init);

  BackboneFeatures<T> operator()(const Tensor<T>& image) const;
  void collect(const std::string& prefix, ParamList<T>& out) const;
  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  Conv2d<T> stem_;
  ChannelAffine<T> stem_norm_;
  std::vector<std::vector<ResidualBlock<T>>> stages_;
};

}  // namespace unipose::nn
