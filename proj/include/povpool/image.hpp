#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace povpool {

/// 8-bit sRGB image, row-major interleaved RGB. This is the at-rest form;
/// all arithmetic happens on RealImage.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size == width * height * 3

  bool valid() const {
    return width >= 0 && height >= 0 &&
           pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }
};

/// Normalized real-valued image in [0,1], same interleaved layout as Image.
/// Values may leave [0,1] transiently inside expressions; quantize() clamps.
struct RealImage {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd data;  // size == width * height * 3
};

/// p / 255.0 per channel.
RealImage to_real(const Image& image);

/// The single real -> 8-bit conversion: scale by 255, round half to even,
/// clamp to [0, 255].
Image quantize(const RealImage& image);

/// Half-to-even rounding of one channel value, exposed for tests.
std::uint8_t quantize_channel(double value);

bool same_pixels(const Image& a, const Image& b);

}  // namespace povpool
