#pragma once

#include <vector>

#include "unipose/metrics/keypoints.hpp"
#include "unipose/tensor.hpp"

namespace unipose::train {

/// Mean squared error over the unmasked (n, c) planes of two equally shaped
/// heatmap stacks. `mask` holds one 0/1 entry per plane in (n, c) order;
/// an empty mask keeps every plane. Zero when every plane is masked.
template <typename T>
Tensor<T> heatmap_loss(const Tensor<T>& pred, const Tensor<T>& target, const std::vector<T>& mask = {});

/// Plane mask for K joint channels plus the two box corner channels:
/// hidden joints are masked out, corners always count.
template <typename T>
std::vector<T> joint_mask(const std::vector<metrics::Keypoints>& keypoints);

}  // namespace unipose::train
