#pragma once

#include <vector>

#include "unipose/data/synth.hpp"
#include "unipose/metrics/heatmaps.hpp"

namespace unipose::train {

/// Concatenates single-item tensors along the batch axis.
Tensor<float> stack_batch(const std::vector<Tensor<float>>& items);
/// Copies batch item `n` out as a (1, C, H, W) tensor without graph links.
Tensor<float> batch_item(const Tensor<float>& batch, int n);

/// Ground truth used for scoring and targets. With `count_occluded`, joints
/// hidden only by an occluder count as visible again.
metrics::Keypoints scoring_truth(const data::PoseSample& sample, bool count_occluded);

struct Targets {
  Tensor<float> maps;        // (N, K+2, H, W)
  std::vector<float> mask;   // per plane, for heatmap_loss
};

Targets make_targets(const std::vector<const data::PoseSample*>& samples, int h, int w,
                     const metrics::GaussianSpec& spec, bool count_occluded);

}  // namespace unipose::train
