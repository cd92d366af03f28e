#include "unipose/metrics/heatmaps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace unipose::metrics {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void GaussianSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw MetricError("GaussianSpec: sigma must be positive, got " + std::to_string(sigma));
  }
  if (!(truncation > 0.0)) throw MetricError("GaussianSpec: truncation must be positive");
}

template <typename T>
void draw_gaussian(Tensor<T>& maps, int n, int c, Point center, const GaussianSpec& spec) {
  spec.validate();
  const Shape& s = maps.shape();
  const double cx = std::round(center.x), cy = std::round(center.y);
  const double radius = spec.truncation * spec.sigma;
  const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  const int r = static_cast<int>(std::floor(radius));
  const int x0 = std::max(0, static_cast<int>(cx) - r), x1 = std::min(s.w - 1, static_cast<int>(cx) + r);
  const int y0 = std::max(0, static_cast<int>(cy) - r), y1 = std::min(s.h - 1, static_cast<int>(cy) + r);
  auto data = maps.mutable_data();
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d2 > radius * radius) continue;
      T& dst = data[s.index(n, c, y, x)];
      dst = std::max(dst, static_cast<T>(spec.peak * std::exp(-d2 * inv)));
    }
  }
}

template <typename T>
Tensor<T> gaussian_targets(const Keypoints& keypoints, const Box& box, int h, int w,
                           const GaussianSpec& spec) {
  spec.validate();
  if (h < 1 || w < 1) throw MetricError("gaussian_targets: image size must be positive");
  const int k = keypoints.size();
  Tensor<T> maps(Shape{1, k + 2, h, w});
  for (int j = 0; j < k; ++j) {
    const auto& joint = keypoints.joints[j];
    if (joint.visible) draw_gaussian(maps, 0, j, joint.point(), spec);
  }
  draw_gaussian(maps, 0, k, {box.x_min, box.y_min}, spec);
  draw_gaussian(maps, 0, k + 1, {box.x_max, box.y_max}, spec);
  return maps;
}

template <typename T>
Peak argmax(const Tensor<T>& maps, int n, int c) {
  const Shape& s = maps.shape();
  if (n < 0 || n >= s.n || c < 0 || c >= s.c) throw MetricError("argmax: channel out of range");
  const T* p = maps.data().data() + s.index(n, c, 0, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.plane(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return {static_cast<int>(best % s.w), static_cast<int>(best / s.w), static_cast<double>(p[best])};
}

template <typename T>
Keypoints decode_joints(const Tensor<T>& maps, int n, int k) {
  if (k > maps.shape().c) throw MetricError("decode_joints: fewer channels than joints");
  Keypoints out;
  out.joints.resize(k);
  for (int j = 0; j < k; ++j) {
    const Peak p = argmax(maps, n, j);
    out.joints[j] = {static_cast<double>(p.x), static_cast<double>(p.y), true, p.value};
  }
  return out;
}

template <typename T>
Box decode_bbox(const Tensor<T>& maps, int n, int k) {
  if (k + 2 > maps.shape().c) throw MetricError("decode_bbox: corner channels missing");
  const Peak a = argmax(maps, n, k);
  const Peak b = argmax(maps, n, k + 1);
  return {static_cast<double>(std::min(a.x, b.x)), static_cast<double>(std::min(a.y, b.y)),
          static_cast<double>(std::max(a.x, b.x)), static_cast<double>(std::max(a.y, b.y))};
}

#define UNIPOSE_INSTANTIATE(T)                                                               \
  template void draw_gaussian(Tensor<T>&, int, int, Point, const GaussianSpec&);             \
  template Tensor<T> gaussian_targets(const Keypoints&, const Box&, int, int,                \
                                      const GaussianSpec&);                                  \
  template Peak argmax(const Tensor<T>&, int, int);                                          \
  template Keypoints decode_joints(const Tensor<T>&, int, int);                              \
  template Box decode_bbox(const Tensor<T>&, int, int);
UNIPOSE_INSTANTIATE(float)
UNIPOSE_INSTANTIATE(double)
#undef UNIPOSE_INSTANTIATE

}  // namespace unipose::metrics
