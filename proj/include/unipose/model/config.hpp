#pragma once

#include "unipose/arch/wasp.hpp"
#include "unipose/nn/backbone.hpp"
#include "unipose/util/kv.hpp"

namespace unipose::model {

struct DecoderConfig {
  int channels = 256;
  /// Width of the full-resolution conv + ReLU layer between the bilinear
  /// upsample and the output conv. 0 removes it.
  int refine_channels = 64;
  double dropout = 0.1;
  int refine_kernel = 1;  // odd
  /// When > 1, features are first upsampled by this factor and passed
  /// through a 3x3 conv + ReLU before the final resize.
  int mid_scale = 4;
};

struct ModelConfig {
  int num_joints = 14;
  int input_h = 64;
  int input_w = 64;
  bool lstm = false;
  int lstm_frames = 5;
  int post_lstm_channels = 64;
  nn::BackboneConfig backbone;
  arch::WaspConfig wasp;
  DecoderConfig decoder;

  int heatmap_channels() const { return num_joints + 2; }
  /// Throws std::invalid_argument subclasses on inconsistent settings.
  void validate() const;

  util::KeyValues to_kv() const;
  /// Starts from `base` and overrides every key present in `kv`.
  static ModelConfig from_kv(const util::KeyValues& kv, ModelConfig base);
  static ModelConfig from_kv(const util::KeyValues& kv);

  /// Narrow preset for desk-scale training runs.
  static ModelConfig tiny(int num_joints = 14);
};

}  // namespace unipose::model
