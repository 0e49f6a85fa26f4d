#include "povpool/pooling.hpp"

#include "povpool/error.hpp"

#include <cmath>
#include <string>

namespace povpool {

const char* operator_name(PoolOperator op) {
  switch (op) {
    case PoolOperator::WA: return "WA";
    case PoolOperator::WAE: return "WAE";
    case PoolOperator::WAR: return "WAR";
    case PoolOperator::BBLF: return "BBLF";
  }
  return "?";
}

std::optional<PoolOperator> operator_from_name(const std::string& name) {
  if (name == "WA" || name == "wa") return PoolOperator::WA;
  if (name == "WAE" || name == "wae") return PoolOperator::WAE;
  if (name == "WAR" || name == "war") return PoolOperator::WAR;
  if (name == "BBLF" || name == "bblf") return PoolOperator::BBLF;
  return std::nullopt;
}

void PoolingSpec::validate() const {
  if (fps < 1) fail(Errc::BadParameter, "fps must be >= 1");
  if (lambda.has_value() != (op == PoolOperator::WAE)) {
    fail(Errc::BadParameter, "lambda is set iff the operator is WAE");
  }
  if (alpha.has_value() != (op == PoolOperator::BBLF) ||
      sigma.has_value() != (op == PoolOperator::BBLF)) {
    fail(Errc::BadParameter, "alpha and sigma are set iff the operator is BBLF");
  }
  if (lambda && *lambda <= 0.0) fail(Errc::BadParameter, "lambda must be > 0");
  if (alpha && (*alpha < 0.0 || *alpha > 1.0)) fail(Errc::BadParameter, "alpha must be in [0,1]");
  if (sigma && *sigma <= 0.0) fail(Errc::BadParameter, "sigma must be > 0");
}

PoolingSpec PoolingSpec::wa(int fps) { return PoolingSpec{PoolOperator::WA, fps, {}, {}, {}}; }

PoolingSpec PoolingSpec::wae(int fps, double lambda) {
  return PoolingSpec{PoolOperator::WAE, fps, lambda, {}, {}};
}

PoolingSpec PoolingSpec::war(int fps) { return PoolingSpec{PoolOperator::WAR, fps, {}, {}, {}}; }

PoolingSpec PoolingSpec::bblf(int fps, double alpha, double sigma) {
  return PoolingSpec{PoolOperator::BBLF, fps, {}, alpha, sigma};
}

WeightVector uniform_weights(int f) {
  if (f < 1) fail(Errc::EmptyWindow, "window size must be >= 1");
  return WeightVector::Constant(f, 1.0 / f);
}

WeightVector exp_weights(int f, double lambda) {
  if (f < 1) fail(Errc::EmptyWindow, "window size must be >= 1");
  if (lambda <= 0.0) fail(Errc::BadParameter, "lambda must be > 0");
  // Offsets d = tau - s*f run from -(f-1) to 0; the last frame gets exp(0).
  WeightVector offsets = WeightVector::LinSpaced(f, 1.0 - f, 0.0);
  WeightVector w = (lambda * offsets).exp();
  return w / w.sum();
}

WeightVector ramp_weights(int f) {
  if (f < 1) fail(Errc::EmptyWindow, "window size must be >= 1");
  WeightVector k = WeightVector::LinSpaced(f, 1.0, static_cast<double>(f));
  return k / k.sum();
}

namespace {

RealImage frame_real(const Frame& frame) { return to_real(frame.image); }

void require_uniform_dims(const SecondWindow& window) {
  if (window.frames.empty()) fail(Errc::EmptyWindow, "window has no frames");
  const Image& first = window.frames.front().image;
  for (const Frame& frame : window.frames) {
    if (frame.image.width != first.width || frame.image.height != first.height) {
      fail(Errc::DimensionMismatch, "frames in one window differ in size");
    }
  }
}

}  // namespace

RealImage pooled_real(const SecondWindow& window, const WeightVector& weights) {
  require_uniform_dims(window);
  if (weights.size() != static_cast<Eigen::Index>(window.frames.size())) {
    fail(Errc::WeightMismatch,
         "weight count " + std::to_string(weights.size()) + " != window size " +
             std::to_string(window.frames.size()));
  }
  RealImage acc = frame_real(window.frames.front());
  acc.data *= weights[0];
  for (Eigen::Index i = 1; i < weights.size(); ++i) {
    acc.data += weights[i] * frame_real(window.frames[static_cast<std::size_t>(i)]).data;
  }
  return acc;
}

PooledFrame weighted_average(const SecondWindow& window, const WeightVector& weights) {
  PooledFrame out;
  out.second_index = window.second_index;
  out.image = quantize(pooled_real(window, weights));
  return out;
}

Eigen::ArrayXd gaussian_kernel(double sigma) {
  if (sigma <= 0.0) fail(Errc::BadParameter, "sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::ArrayXd kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-static_cast<double>(i) * i / (2.0 * sigma * sigma));
  }
  return kernel / kernel.sum();
}

namespace {

// Symmetric reflection with the edge sample repeated: indices fold over the
// period 2n, so it is well defined for any offset and keeps total mass.
int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

Eigen::ArrayXXd gaussian_blur_plane(const Eigen::ArrayXXd& plane, double sigma) {
  const Eigen::ArrayXd kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int rows = static_cast<int>(plane.rows());
  const int cols = static_cast<int>(plane.cols());
  if (rows == 0 || cols == 0) fail(Errc::DimensionMismatch, "empty plane");

  Eigen::ArrayXXd horizontal(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * plane(y, reflect_index(x + k, cols));
      }
      horizontal(y, x) = acc;
    }
  }
  Eigen::ArrayXXd out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * horizontal(reflect_index(y + k, rows), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

RealImage gaussian_blur(const RealImage& image, double sigma) {
  RealImage out;
  out.width = image.width;
  out.height = image.height;
  out.data.resize(image.data.size());
  for (int channel = 0; channel < 3; ++channel) {
    Eigen::ArrayXXd plane(image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        plane(y, x) = image.data[3 * (static_cast<Eigen::Index>(y) * image.width + x) + channel];
      }
    }
    Eigen::ArrayXXd blurred = gaussian_blur_plane(plane, sigma);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        out.data[3 * (static_cast<Eigen::Index>(y) * image.width + x) + channel] = blurred(y, x);
      }
    }
  }
  return out;
}

RealImage bblf_real(const SecondWindow& window, double alpha, double sigma) {
  if (alpha < 0.0 || alpha > 1.0) fail(Errc::BadParameter, "alpha must be in [0,1]");
  if (sigma <= 0.0) fail(Errc::BadParameter, "sigma must be > 0");
  require_uniform_dims(window);
  const int f = static_cast<int>(window.frames.size());
  RealImage last = frame_real(window.frames.back());
  if (1.0 - alpha == 0.0) {
    return last;
  }
  RealImage average = pooled_real(window, uniform_weights(f));
  RealImage blurred = gaussian_blur(average, sigma);
  RealImage out;
  out.width = last.width;
  out.height = last.height;
  out.data = alpha * last.data + (1.0 - alpha) * blurred.data;
  return out;
}

PooledFrame blend_blur_last_frame(const SecondWindow& window, const PoolingSpec& spec) {
  spec.validate();
  if (spec.op != PoolOperator::BBLF) {
    fail(Errc::BadParameter, "blend_blur_last_frame needs a BBLF spec");
  }
  PooledFrame out;
  out.second_index = window.second_index;
  out.spec = spec;
  out.image = quantize(bblf_real(window, *spec.alpha, *spec.sigma));
  return out;
}

PooledFrame pool_second(const SecondWindow& window, const PoolingSpec& spec) {
  spec.validate();
  if (window.frames.empty()) fail(Errc::EmptyWindow, "window has no frames");
  const int f = static_cast<int>(window.frames.size());
  PooledFrame out;
  switch (spec.op) {
    case PoolOperator::WA:
      out = weighted_average(window, uniform_weights(f));
      break;
    case PoolOperator::WAE:
      out = weighted_average(window, exp_weights(f, *spec.lambda));
      break;
    case PoolOperator::WAR:
      out = weighted_average(window, ramp_weights(f));
      break;
    case PoolOperator::BBLF:
      return blend_blur_last_frame(window, spec);
  }
  out.spec = spec;
  return out;
}

const Frame& key_frame(const SecondWindow& window) {
  if (window.frames.empty()) fail(Errc::EmptyWindow, "window has no frames");
  return window.frames.back();
}

}  // namespace povpool
