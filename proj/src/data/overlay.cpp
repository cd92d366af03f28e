#include "unipose/data/overlay.hpp"

#include <cmath>
#include <cstdlib>

namespace unipose::data {

OverlayStyle OverlayStyle::for_figure(const FigureModel& figure) {
  OverlayStyle style;
  for (const auto& c : figure.joint_color) {
    style.joint_colors.push_back({static_cast<std::uint8_t>(std::lround(c[0] * 255.0f)),
                                  static_cast<std::uint8_t>(std::lround(c[1] * 255.0f)),
                                  static_cast<std::uint8_t>(std::lround(c[2] * 255.0f))});
  }
  return style;
}

namespace {

void put(Rgb8Image& img, int x, int y, const Rgb8& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.at(y, x);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

void line(Rgb8Image& img, int x0, int y0, int x1, int y1, const Rgb8& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

int px(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

Rgb8Image render_overlay(const Tensor<float>& image, const metrics::Keypoints& pose,
                         const std::optional<metrics::Box>& box, const OverlayStyle& style) {
  Rgb8Image img = to_rgb8(image, 0);
  if (box) {
    const int x0 = px(box->x_min), y0 = px(box->y_min), x1 = px(box->x_max), y1 = px(box->y_max);
    line(img, x0, y0, x1, y0, style.box_color);
    line(img, x1, y0, x1, y1, style.box_color);
    line(img, x1, y1, x0, y1, style.box_color);
    line(img, x0, y1, x0, y0, style.box_color);
  }
  const auto& j = pose.joints;
  const int k = static_cast<int>(j.size());
  for (const auto& [a, b] : pose.limbs) {
    if (a < 0 || b < 0 || a >= k || b >= k || !j[a].visible || !j[b].visible) continue;
    line(img, px(j[a].x), px(j[a].y), px(j[b].x), px(j[b].y), style.limb_color);
  }
  const int r = style.marker_radius;
  for (int i = 0; i < k; ++i) {
    if (!j[i].visible) continue;
    const Rgb8 c = style.joint_colors.empty() ? Rgb8{255, 0, 0}
                                              : style.joint_colors[i % style.joint_colors.size()];
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) put(img, px(j[i].x) + dx, px(j[i].y) + dy, c);
  }
  return img;
}

void write_overlay(const std::string& path, const Tensor<float>& image, const metrics::Keypoints& pose,
                   const std::optional<metrics::Box>& box, const OverlayStyle& style) {
  write_png(path, render_overlay(image, pose, box, style));
}

}  // namespace unipose::data
