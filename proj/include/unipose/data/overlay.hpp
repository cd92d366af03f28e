#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unipose/data/image_io.hpp"
#include "unipose/data/synth.hpp"

namespace unipose::data {

using Rgb8 = std::array<std::uint8_t, 3>;

struct OverlayStyle {
  std::vector<Rgb8> joint_colors;  // cycled if shorter than K
  Rgb8 limb_color{255, 255, 255};
  Rgb8 box_color{255, 255, 0};
  int marker_radius = 1;  // markers are (2r+1)^2 squares

  /// Joint colours taken from the figure palette.
  static OverlayStyle for_figure(const FigureModel& figure);
};

/// Draws the box outline, the limbs between visible joints and a marker at
/// every visible joint over batch item 0 of `image`.
Rgb8Image render_overlay(const Tensor<float>& image, const metrics::Keypoints& pose,
                         const std::optional<metrics::Box>& box, const OverlayStyle& style);

void write_overlay(const std::string& path, const Tensor<float>& image, const metrics::Keypoints& pose,
                   const std::optional<metrics::Box>& box, const OverlayStyle& style);

}  // namespace unipose::data
