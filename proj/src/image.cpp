#include "povpool/image.hpp"

#include "povpool/error.hpp"

#include <cmath>

namespace povpool {

RealImage to_real(const Image& image) {
  if (!image.valid()) {
    fail(Errc::DimensionMismatch, "pixel buffer length does not match width*height*3");
  }
  RealImage out;
  out.width = image.width;
  out.height = image.height;
  out.data = Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>>(
                 image.pixels.data(), static_cast<Eigen::Index>(image.pixels.size()))
                 .cast<double>() /
             255.0;
  return out;
}

std::uint8_t quantize_channel(double value) {
  double x = value * 255.0;
  if (!(x > 0.0)) return 0;  // also catches NaN
  if (x >= 255.0) return 255;
  double f = std::floor(x);
  double frac = x - f;
  double r;
  if (frac > 0.5) {
    r = f + 1.0;
  } else if (frac < 0.5) {
    r = f;
  } else {
    r = (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
  }
  return static_cast<std::uint8_t>(r);
}

Image quantize(const RealImage& image) {
  Image out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(static_cast<std::size_t>(image.width) * image.height * 3);
  if (image.data.size() != static_cast<Eigen::Index>(out.pixels.size())) {
    fail(Errc::DimensionMismatch, "real buffer length does not match width*height*3");
  }
  for (Eigen::Index i = 0; i < image.data.size(); ++i) {
    out.pixels[static_cast<std::size_t>(i)] = quantize_channel(image.data[i]);
  }
  return out;
}

bool same_pixels(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
}

}  // namespace povpool
