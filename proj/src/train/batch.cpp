#include "unipose/train/batch.hpp"

#include <algorithm>

#include "unipose/train/loss.hpp"

namespace unipose::train {

Tensor<float> stack_batch(const std::vector<Tensor<float>>& items) {
  if (items.empty()) throw TensorError("stack_batch: no items");
  const Shape one = items.front().shape();
  std::vector<float> data;
  data.reserve(one.numel() * items.size());
  int n = 0;
  for (const auto& t : items) {
    const Shape& s = t.shape();
    if (s.c != one.c || s.h != one.h || s.w != one.w) {
      throw TensorError("stack_batch: item " + s.str() + " does not match " + one.str());
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
    n += s.n;
  }
  return Tensor<float>(Shape{n, one.c, one.h, one.w}, std::move(data));
}

Tensor<float> batch_item(const Tensor<float>& batch, int n) {
  const Shape& s = batch.shape();
  if (n < 0 || n >= s.n) throw TensorError("batch_item: index out of range");
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  const auto d = batch.data();
  return Tensor<float>(Shape{1, s.c, s.h, s.w}, std::vector<float>(d.begin() + n * per, d.begin() + (n + 1) * per));
}

metrics::Keypoints scoring_truth(const data::PoseSample& sample, bool count_occluded) {
  metrics::Keypoints kp = sample.keypoints;
  if (count_occluded) {
    for (std::size_t j = 0; j < kp.joints.size() && j < sample.meta.occluded.size(); ++j) {
      if (sample.meta.occluded[j]) kp.joints[j].visible = true;
    }
  }
  return kp;
}

Targets make_targets(const std::vector<const data::PoseSample*>& samples, int h, int w,
                     const metrics::GaussianSpec& spec, bool count_occluded) {
  std::vector<Tensor<float>> maps;
  std::vector<metrics::Keypoints> truth;
  for (const auto* s : samples) {
    truth.push_back(scoring_truth(*s, count_occluded));
    maps.push_back(metrics::gaussian_targets<float>(truth.back(), s->bbox, h, w, spec));
  }
  return {stack_batch(maps), joint_mask<float>(truth)};
}

}  // namespace unipose::train
