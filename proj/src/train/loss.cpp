#include "unipose/train/loss.hpp"

#include "unipose/ops.hpp"

namespace unipose::train {

using namespace unipose::ops;

template <typename T>
Tensor<T> heatmap_loss(const Tensor<T>& pred, const Tensor<T>& target, const std::vector<T>& mask) {
  const Shape& s = pred.shape();
  if (!(s == target.shape())) {
    throw TensorError("heatmap_loss: prediction " + s.str() + " vs target " + target.shape().str());
  }
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  if (!mask.empty() && mask.size() != planes) {
    throw TensorError("heatmap_loss: mask has " + std::to_string(mask.size()) + " entries for " +
                      std::to_string(planes) + " planes");
  }
  const Tensor<T> diff = sub(pred, target);
  Tensor<T> sq = mul(diff, diff);
  std::size_t kept = planes;
  if (!mask.empty()) {
    kept = 0;
    std::vector<T> elementwise(s.numel());
    for (std::size_t p = 0; p < planes; ++p) {
      if (mask[p] != T(0) && mask[p] != T(1)) throw TensorError("heatmap_loss: mask entries must be 0 or 1");
      kept += mask[p] == T(1);
      std::fill_n(elementwise.begin() + p * s.plane(), s.plane(), mask[p]);
    }
    sq = mul_constant(sq, std::span<const T>(elementwise));
  }
  const T denom = kept == 0 ? T(0) : T(1) / static_cast<T>(kept * s.plane());
  return scale(sum(sq), denom);
}

template <typename T>
std::vector<T> joint_mask(const std::vector<metrics::Keypoints>& keypoints) {
  std::vector<T> mask;
  for (const auto& kp : keypoints) {
    for (const auto& j : kp.joints) mask.push_back(j.visible ? T(1) : T(0));
    mask.push_back(T(1));
    mask.push_back(T(1));
  }
  return mask;
}

template Tensor<float> heatmap_loss(const Tensor<float>&, const Tensor<float>&, const std::vector<float>&);
template Tensor<double> heatmap_loss(const Tensor<double>&, const Tensor<double>&, const std::vector<double>&);
template std::vector<float> joint_mask(const std::vector<metrics::Keypoints>&);
template std::vector<double> joint_mask(const std::vector<metrics::Keypoints>&);

}  // namespace unipose::train
