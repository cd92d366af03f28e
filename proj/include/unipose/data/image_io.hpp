#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unipose/tensor.hpp"

namespace unipose::data {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB raster, row-major.
struct Rgb8Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Rgb8Image() = default;
  Rgb8Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(3) * h * w, 0) {}
  std::uint8_t* at(int y, int x) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int y, int x) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

/// Quantizes batch item `n` of a (N,3,H,W) tensor in [0,1].
Rgb8Image to_rgb8(const Tensor<float>& image, int n = 0);
/// (1,3,H,W) tensor with values v/255.
Tensor<float> from_rgb8(const Rgb8Image& image);

std::string encode_png(const Rgb8Image& image);
Rgb8Image decode_png(const std::string& bytes);
void write_png(const std::string& path, const Rgb8Image& image);
Rgb8Image read_png(const std::string& path);

}  // namespace unipose::data
