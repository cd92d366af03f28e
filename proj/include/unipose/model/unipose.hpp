#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "unipose/arch/wasp.hpp"
#include "unipose/model/config.hpp"
#include "unipose/nn/backbone.hpp"
#include "unipose/nn/conv_lstm.hpp"

namespace unipose::model {

/// Pools the stride-4 features down to the stride-8 grid, concatenates them
/// with the pooled module output, applies two 3x3 conv + ReLU + dropout
/// layers, upsamples bilinearly to the input size and maps to heatmaps.
template <typename T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(int context_channels, int low_level_channels, int out_channels,
          const DecoderConfig& config, nn::Initializer& init);

  Tensor<T> operator()(const Tensor<T>& context, const Tensor<T>& low_level, int out_h, int out_w,
                       bool training = false, std::uint64_t seed = 0) const;
  void collect(const std::string& prefix, nn::ParamList<T>& out) const;

 private:
  int context_channels_ = 0;
  int low_level_channels_ = 0;
  DecoderConfig config_;
  nn::Conv2d<T> conv1_, conv2_, mid_, refine_, out_;
};

/// Recurrent head over decoder heatmaps: a ConvLSTM whose hidden state has
/// one channel per heatmap, read out by two 3x3 convs.
template <typename T>
class LstmHead {
 public:
  LstmHead() = default;
  LstmHead(int heatmap_channels, int hidden_width, nn::Initializer& init);

  nn::ConvLSTMState<T> zero_state(const Shape& maps) const;
  nn::ConvLSTMState<T> step(const Tensor<T>& maps, const nn::ConvLSTMState<T>& state) const;
  Tensor<T> readout(const Tensor<T>& hidden) const;
  void collect(const std::string& prefix, nn::ParamList<T>& out) const;

 private:
  nn::ConvLSTMCell<T> cell_;
  nn::Conv2d<T> post1_, post2_;
};

struct CallCounts {
  std::size_t backbone = 0;
  std::size_t wasp = 0;
  std::size_t decoder = 0;
  std::size_t lstm_steps = 0;
};

template <typename T>
class UniPoseModel {
 public:
  UniPoseModel(const ModelConfig& config, std::uint64_t seed);

  /// Single pass backbone -> WASP -> decoder. Returns (N, K+2, H, W).
  Tensor<T> forward(const Tensor<T>& image, bool training = false, std::uint64_t seed = 0) const;

  /// Per-frame final heatmaps for a clip. The heatmaps of frame t come from
  /// a recurrence started at zero state on frame max(0, t - window + 1);
  /// window <= 0 uses config().lstm_frames. Each frame passes through the
  /// single-frame network exactly once.
  std::vector<Tensor<T>> forward_sequence(const std::vector<Tensor<T>>& frames,
                                          int window = 0) const;

  /// Runs the recurrence from zero state over already decoded heatmaps and
  /// returns the final heatmaps after every step (`all_steps`) or only
  /// after the last one.
  std::vector<Tensor<T>> lstm_unroll(const std::vector<Tensor<T>>& decoder_maps,
                                     bool all_steps) const;

  nn::ParamList<T> parameters() const;
  nn::ParamList<T> base_parameters() const;
  nn::ParamList<T> lstm_parameters() const;

  const ModelConfig& config() const { return config_; }
  CallCounts counts() const;
  void reset_counts() const;

 private:
  struct Counters {
    std::atomic<std::size_t> backbone{0}, wasp{0}, decoder{0}, lstm_steps{0};
  };

  ModelConfig config_;
  nn::Backbone<T> backbone_;
  arch::Wasp<T> wasp_;
  Decoder<T> decoder_;
  LstmHead<T> lstm_;
  std::unique_ptr<Counters> counters_ = std::make_unique<Counters>();
};

}  // namespace unipose::model
