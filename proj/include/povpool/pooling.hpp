#pragma once

#include "povpool/frame.hpp"
#include "povpool/image.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace povpool {

/// The four temporal pooling operators. Each collapses the f frames of one
/// wall-clock second into a single image.
///
///   WA   - uniform average
///   WAE  - exponential recency weights, exp(lambda * d) with d <= 0 and
///          d = 0 on the last frame of the second
///   WAR  - linear recency ramp, weight k / (1 + 2 + ... + f)
///   BBLF - alpha * last_frame + (1 - alpha) * gaussian_blur(uniform average)
enum class PoolOperator { WA, WAE, WAR, BBLF };

const char* operator_name(PoolOperator op);
std::optional<PoolOperator> operator_from_name(const std::string& name);

/// Operator choice plus its parameters. lambda is meaningful only for WAE;
/// alpha and sigma only for BBLF. validate() enforces that coupling.
struct PoolingSpec {
  PoolOperator op = PoolOperator::WA;
  int fps = 0;
  std::optional<double> lambda;  // WAE, > 0
  std::optional<double> alpha;   // BBLF, in [0,1]
  std::optional<double> sigma;   // BBLF, > 0

  void validate() const;

  static PoolingSpec wa(int fps);
  static PoolingSpec wae(int fps, double lambda);
  static PoolingSpec war(int fps);
  static PoolingSpec bblf(int fps, double alpha, double sigma);
};

/// Per-frame weights of one window, ordered by frame position. Nonnegative,
/// summing to 1.
using WeightVector = Eigen::ArrayXd;

/// One pooled image per second together with the spec that produced it.
struct PooledFrame {
  int second_index = 0;
  Image image;
  PoolingSpec spec;
};

WeightVector uniform_weights(int f);
WeightVector exp_weights(int f, double lambda);
WeightVector ramp_weights(int f);

/// Weighted per-pixel average in normalized reals (no rounding).
RealImage pooled_real(const SecondWindow& window, const WeightVector& weights);

/// pooled_real followed by the single rounding to 8-bit.
PooledFrame weighted_average(const SecondWindow& window, const WeightVector& weights);

/// Separable Gaussian convolution of a single channel plane. Kernel radius
/// ceil(3*sigma), kernel normalized to sum 1, symmetric reflection at the
/// borders (edge sample repeated), so constant inputs and total mass are
/// preserved.
Eigen::ArrayXXd gaussian_blur_plane(const Eigen::ArrayXXd& plane, double sigma);

/// Channel-wise separable Gaussian blur of an interleaved RGB image.
RealImage gaussian_blur(const RealImage& image, double sigma);

/// The normalized 1-D kernel used by gaussian_blur; exposed for tests.
Eigen::ArrayXd gaussian_kernel(double sigma);

/// Blend-blur in normalized reals:
///   alpha * last_frame + (1 - alpha) * blur(uniform average).
RealImage bblf_real(const SecondWindow& window, double alpha, double sigma);

/// bblf_real followed by the single rounding to 8-bit.
PooledFrame blend_blur_last_frame(const SecondWindow& window, const PoolingSpec& spec);

/// Dispatch to the operator named by spec.
PooledFrame pool_second(const SecondWindow& window, const PoolingSpec& spec);

/// The last frame of the second (index s*f), unchanged.
const Frame& key_frame(const SecondWindow& window);

}  // namespace povpool
