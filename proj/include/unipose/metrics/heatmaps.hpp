#pragma once

#include "unipose/metrics/keypoints.hpp"
#include "unipose/tensor.hpp"

namespace unipose::metrics {

struct GaussianSpec {
  double sigma = 3.0;
  double peak = 1.0;
  /// Truncation radius in units of sigma; values farther away are zero.
  double truncation = 3.0;

  void validate() const;
};

/// (1, K+2, h, w) training targets. Channel k holds a Gaussian centred on
/// the rounded pixel of joint k (all zeros when the joint is not visible);
/// channels K and K+1 hold the top-left and bottom-right box corners.
template <typename T>
Tensor<T> gaussian_targets(const Keypoints& keypoints, const Box& box, int h, int w,
                           const GaussianSpec& spec = {});

/// Writes one truncated Gaussian into channel `c` of sample `n`, keeping the
/// elementwise maximum with what is already there.
template <typename T>
void draw_gaussian(Tensor<T>& maps, int n, int c, Point center, const GaussianSpec& spec);

struct Peak {
  int x = 0;
  int y = 0;
  double value = 0.0;
};

/// Global argmax of one channel. Ties go to the smallest row, then the
/// smallest column.
template <typename T>
Peak argmax(const Tensor<T>& maps, int n, int c);

/// Decodes the first `k` channels of sample `n` into joints. Every decoded
/// joint is marked visible and carries its peak value as confidence.
template <typename T>
Keypoints decode_joints(const Tensor<T>& maps, int n, int k);

/// Box from the two corner channels K and K+1 of sample `n`; inverted axes
/// are swapped into order, and coincident peaks give a zero-area box.
template <typename T>
Box decode_bbox(const Tensor<T>& maps, int n, int k);

}  // namespace unipose::metrics
