#include "povpool/pooling.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "povpool/error.hpp"
#include "test_util.hpp"

using povpool::Errc;
using povpool::Error;
using povpool::Image;
using povpool::PoolingSpec;
using povpool::PoolOperator;
using povpool::RealImage;
using povpool::SecondWindow;
using povpool::WeightVector;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected povpool::Error");
}

SecondWindow random_window(std::mt19937& rng, int f, int width, int height, int second = 1) {
  std::vector<Image> images;
  for (int i = 0; i < f; ++i) images.push_back(testutil::random_image(rng, width, height));
  return testutil::make_window(second, f, images);
}

}  // namespace

TEST_CASE("uniform weights are 1/f") {
  const WeightVector w = povpool::uniform_weights(3);
  REQUIRE(w.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("exponential weights match hand-computed values") {
  SUBCASE("f=2, lambda=ln 2 gives 1/3 and 2/3") {
    const WeightVector w = povpool::exp_weights(2, std::log(2.0));
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  }
  SUBCASE("f=3, lambda=1 normalizes {e^-2, e^-1, 1}") {
    const WeightVector w = povpool::exp_weights(3, 1.0);
    const double denom = std::exp(-2.0) + std::exp(-1.0) + 1.0;
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(std::exp(-2.0) / denom).epsilon(1e-13));
    CHECK(w[1] == doctest::Approx(std::exp(-1.0) / denom).epsilon(1e-13));
    CHECK(w[2] == doctest::Approx(1.0 / denom).epsilon(1e-13));
  }
}

TEST_CASE("ramp weights are k over the triangular number") {
  const WeightVector w3 = povpool::ramp_weights(3);
  REQUIRE(w3.size() == 3);
  CHECK(w3[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(w3[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(w3[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-15));

  const WeightVector w4 = povpool::ramp_weights(4);
  REQUIRE(w4.size() == 4);
  CHECK(w4[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(w4[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(w4[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(w4[3] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("all weight schemes collapse to [1] at f=1") {
  CHECK(povpool::uniform_weights(1)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(povpool::exp_weights(1, 0.7)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(povpool::ramp_weights(1)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights are nonnegative, sum to one, and recency weights increase") {
  for (int f : {2, 24, 30, 60}) {
    CAPTURE(f);
    const WeightVector uniform = povpool::uniform_weights(f);
    const WeightVector exp = povpool::exp_weights(f, 1.0 / f);
    const WeightVector ramp = povpool::ramp_weights(f);
    for (const WeightVector* w : {&uniform, &exp, &ramp}) {
      CHECK(w->minCoeff() >= 0.0);
      CHECK(w->sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int i = 1; i < f; ++i) {
      CHECK(exp[i] > exp[i - 1]);
      CHECK(ramp[i] > ramp[i - 1]);
    }
  }
}

TEST_CASE("exponential weights approach uniform as lambda goes to zero") {
  const WeightVector w = povpool::exp_weights(10, 1e-9);
  const WeightVector uniform = povpool::uniform_weights(10);
  CHECK((w - uniform).abs().maxCoeff() < 1e-8);
}

TEST_CASE("a large lambda concentrates all mass on the last frame") {
  const WeightVector w = povpool::exp_weights(4, 50.0);
  CHECK(w[3] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.head(3).sum() < 1e-12);
}

TEST_CASE("weight constructors reject empty windows and bad lambda") {
  CHECK(code_of([] { povpool::uniform_weights(0); }) == Errc::EmptyWindow);
  CHECK(code_of([] { povpool::ramp_weights(-1); }) == Errc::EmptyWindow);
  CHECK(code_of([] { povpool::exp_weights(0, 1.0); }) == Errc::EmptyWindow);
  CHECK(code_of([] { povpool::exp_weights(3, 0.0); }) == Errc::BadParameter);
  CHECK(code_of([] { povpool::exp_weights(3, -2.0); }) == Errc::BadParameter);
}

TEST_CASE("pooling identical frames is a fixed point for every operator") {
  // The averaging operators fix any identical-frame window (convex
  // combination); BBLF mixes in a blur, so its fixed points are the
  // blur-invariant (constant) windows.
  std::mt19937 rng(21);
  const Image textured = testutil::random_image(rng, 10, 7);
  const SecondWindow textured_window =
      testutil::make_window(1, 5, std::vector<Image>(5, textured));
  for (const PoolingSpec& spec :
       {PoolingSpec::wa(5), PoolingSpec::wae(5, 0.2), PoolingSpec::war(5)}) {
    CAPTURE(povpool::operator_name(spec.op));
    const povpool::PooledFrame pooled = povpool::pool_second(textured_window, spec);
    CHECK(povpool::same_pixels(pooled.image, textured));
  }

  const Image flat = testutil::constant_image(10, 7, 57, 201, 9);
  const SecondWindow flat_window = testutil::make_window(1, 5, std::vector<Image>(5, flat));
  for (const PoolingSpec& spec :
       {PoolingSpec::wa(5), PoolingSpec::wae(5, 0.2), PoolingSpec::war(5),
        PoolingSpec::bblf(5, 0.5, 2.0)}) {
    CAPTURE(povpool::operator_name(spec.op));
    const povpool::PooledFrame pooled = povpool::pool_second(flat_window, spec);
    CHECK(povpool::same_pixels(pooled.image, flat));
  }
}

TEST_CASE("averaging pure black and pure white rounds the tie up to 128") {
  const SecondWindow window = testutil::make_window(
      1, 2, {testutil::constant_image(2, 2, 0, 0, 0), testutil::constant_image(2, 2, 255, 255, 255)});
  const povpool::PooledFrame pooled =
      povpool::weighted_average(window, povpool::uniform_weights(2));
  for (std::uint8_t p : pooled.image.pixels) CHECK(p == 128);
}

TEST_CASE("pooling a single-frame window reproduces the frame exactly") {
  std::mt19937 rng(22);
  const Image base = testutil::random_image(rng, 8, 8);
  const SecondWindow window = testutil::make_window(1, 1, {base});
  const povpool::PooledFrame pooled =
      povpool::weighted_average(window, povpool::uniform_weights(1));
  CHECK(povpool::same_pixels(pooled.image, base));
}

TEST_CASE("pooled pixels stay inside the per-pixel range of the window") {
  std::mt19937 rng(23);
  const SecondWindow window = random_window(rng, 5, 8, 8);

  std::uniform_real_distribution<double> dist(0.05, 1.0);
  WeightVector w(5);
  for (int i = 0; i < 5; ++i) w[i] = dist(rng);
  w /= w.sum();

  const RealImage real = povpool::pooled_real(window, w);
  const povpool::PooledFrame pooled = povpool::weighted_average(window, w);
  for (std::size_t i = 0; i < pooled.image.pixels.size(); ++i) {
    int lo = 255, hi = 0;
    for (const auto& frame : window.frames) {
      lo = std::min<int>(lo, frame.image.pixels[i]);
      hi = std::max<int>(hi, frame.image.pixels[i]);
    }
    CHECK(real.data[static_cast<Eigen::Index>(i)] >= lo / 255.0 - 1e-12);
    CHECK(real.data[static_cast<Eigen::Index>(i)] <= hi / 255.0 + 1e-12);
    // Integer endpoints survive the rounding: the result cannot escape [lo, hi].
    CHECK(pooled.image.pixels[i] >= lo);
    CHECK(pooled.image.pixels[i] <= hi);
  }
}

TEST_CASE("pooled_real validates window shape and weight count") {
  std::mt19937 rng(24);
  SecondWindow window = random_window(rng, 3, 4, 4);
  CHECK(code_of([&] { povpool::pooled_real(window, povpool::uniform_weights(2)); }) ==
        Errc::WeightMismatch);
  CHECK(code_of([&] {
          povpool::pooled_real(SecondWindow{}, povpool::uniform_weights(1));
        }) == Errc::EmptyWindow);

  window.frames[1].image = testutil::random_image(rng, 5, 4);
  CHECK(code_of([&] { povpool::pooled_real(window, povpool::uniform_weights(3)); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("gaussian kernel has radius ceil(3 sigma), symmetry, and unit mass") {
  struct Case {
    double sigma;
    int taps;
  };
  for (const Case& c : {Case{0.3, 3}, Case{1.0, 7}, Case{2.0, 13}, Case{2.5, 17}}) {
    CAPTURE(c.sigma);
    const Eigen::ArrayXd k = povpool::gaussian_kernel(c.sigma);
    CHECK(k.size() == c.taps);
    CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index i = 0; i < k.size(); ++i) {
      CHECK(k[i] == doctest::Approx(k[k.size() - 1 - i]).epsilon(1e-15));
    }
  }
  CHECK(code_of([] { povpool::gaussian_kernel(0.0); }) == Errc::BadParameter);
  CHECK(code_of([] { povpool::gaussian_kernel(-1.0); }) == Errc::BadParameter);
}

TEST_CASE("gaussian kernel values match the normalized density") {
  const double sigma = 1.5;
  const Eigen::ArrayXd k = povpool::gaussian_kernel(sigma);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  REQUIRE(k.size() == 2 * radius + 1);
  double denom = 0.0;
  for (int i = -radius; i <= radius; ++i) denom += std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (int i = -radius; i <= radius; ++i) {
    CHECK(k[i + radius] ==
          doctest::Approx(std::exp(-(i * i) / (2.0 * sigma * sigma)) / denom).epsilon(1e-13));
  }
}

TEST_CASE("blurring a constant plane returns it unchanged") {
  Eigen::ArrayXXd plane = Eigen::ArrayXXd::Constant(7, 11, 0.37);
  const Eigen::ArrayXXd out = povpool::gaussian_blur_plane(plane, 2.0);
  CHECK((out - 0.37).abs().maxCoeff() < 1e-12);
}

TEST_CASE("reflection padding preserves total mass") {
  std::mt19937 rng(25);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::ArrayXXd plane(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) plane(y, x) = dist(rng);
  for (double sigma : {0.5, 1.0, 2.0}) {
    CAPTURE(sigma);
    const Eigen::ArrayXXd out = povpool::gaussian_blur_plane(plane, sigma);
    CHECK(out.sum() == doctest::Approx(plane.sum()).epsilon(1e-9));
  }
}

TEST_CASE("an interior impulse spreads as the separable product kernel") {
  Eigen::ArrayXXd plane = Eigen::ArrayXXd::Zero(9, 9);
  plane(4, 4) = 1.0;
  const Eigen::ArrayXd k = povpool::gaussian_kernel(1.0);
  const int radius = 3;
  const Eigen::ArrayXXd out = povpool::gaussian_blur_plane(plane, 1.0);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      const int dy = y - 4;
      const int dx = x - 4;
      double expected = 0.0;
      if (std::abs(dy) <= radius && std::abs(dx) <= radius) {
        expected = k[dy + radius] * k[dx + radius];
      }
      CHECK(out(y, x) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("separable blur matches a dense 2-d convolution oracle") {
  std::mt19937 rng(26);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const int rows = 8, cols = 6;
  Eigen::ArrayXXd plane(rows, cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) plane(y, x) = dist(rng);

  const double sigma = 0.8;
  const Eigen::ArrayXd k = povpool::gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const auto reflect = [](int i, int n) {
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
  };
  Eigen::ArrayXXd expected(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          acc += k[dy + radius] * k[dx + radius] *
                 plane(reflect(y + dy, rows), reflect(x + dx, cols));
        }
      }
      expected(y, x) = acc;
    }
  }

  const Eigen::ArrayXXd out = povpool::gaussian_blur_plane(plane, sigma);
  CHECK((out - expected).abs().maxCoeff() < 1e-12);
}

TEST_CASE("image blur treats channels independently") {
  RealImage image;
  image.width = 6;
  image.height = 5;
  image.data = Eigen::ArrayXd::Zero(6 * 5 * 3);
  std::mt19937 rng(27);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::ArrayXXd green(5, 6);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      green(y, x) = dist(rng);
      image.data[3 * (y * 6 + x) + 1] = green(y, x);
    }
  }
  const RealImage out = povpool::gaussian_blur(image, 1.0);
  const Eigen::ArrayXXd expected = povpool::gaussian_blur_plane(green, 1.0);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      CHECK(out.data[3 * (y * 6 + x) + 0] == 0.0);
      CHECK(out.data[3 * (y * 6 + x) + 1] == doctest::Approx(expected(y, x)).epsilon(1e-13));
      CHECK(out.data[3 * (y * 6 + x) + 2] == 0.0);
    }
  }
}

TEST_CASE("blend-blur with alpha=1 is exactly the last frame") {
  std::mt19937 rng(28);
  const SecondWindow window = random_window(rng, 4, 9, 6);
  const povpool::PooledFrame pooled =
      povpool::blend_blur_last_frame(window, PoolingSpec::bblf(4, 1.0, 2.0));
  CHECK(povpool::same_pixels(pooled.image, window.frames.back().image));
}

TEST_CASE("blend-blur with alpha=0 is the blurred uniform average") {
  std::mt19937 rng(29);
  const SecondWindow window = random_window(rng, 3, 7, 7);
  const povpool::PooledFrame pooled =
      povpool::blend_blur_last_frame(window, PoolingSpec::bblf(3, 0.0, 1.5));
  const Image expected = povpool::quantize(
      povpool::gaussian_blur(povpool::pooled_real(window, povpool::uniform_weights(3)), 1.5));
  CHECK(povpool::same_pixels(pooled.image, expected));
}

TEST_CASE("blend-blur on a 1x1 clip reduces to scalar interpolation") {
  // Blurring a 1x1 plane is the identity (every reflected tap lands on the
  // one pixel and the kernel sums to 1), so the result is
  // alpha * last + (1 - alpha) * mean.
  const SecondWindow window = testutil::make_window(
      1, 2, {testutil::constant_image(1, 1, 40, 0, 200), testutil::constant_image(1, 1, 80, 0, 100)});
  const RealImage real = povpool::bblf_real(window, 0.25, 2.0);
  const double mean_r = (40.0 / 255.0 + 80.0 / 255.0) / 2.0;
  const double mean_b = (200.0 / 255.0 + 100.0 / 255.0) / 2.0;
  CHECK(real.data[0] == doctest::Approx(0.25 * (80.0 / 255.0) + 0.75 * mean_r).epsilon(1e-12));
  CHECK(real.data[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(real.data[2] == doctest::Approx(0.25 * (100.0 / 255.0) + 0.75 * mean_b).epsilon(1e-12));
}

TEST_CASE("blend-blur validates its parameters even on shortcut paths") {
  std::mt19937 rng(30);
  const SecondWindow window = random_window(rng, 2, 4, 4);
  CHECK(code_of([&] { povpool::bblf_real(window, 1.0, 0.0); }) == Errc::BadParameter);
  CHECK(code_of([&] { povpool::bblf_real(window, -0.1, 1.0); }) == Errc::BadParameter);
  CHECK(code_of([&] { povpool::bblf_real(window, 1.1, 1.0); }) == Errc::BadParameter);
  CHECK(code_of([&] {
          povpool::blend_blur_last_frame(window, PoolingSpec::wa(2));
        }) == Errc::BadParameter);
}

TEST_CASE("pool_second dispatches to the matching weight scheme") {
  std::mt19937 rng(31);
  const SecondWindow window = random_window(rng, 4, 6, 6, 3);

  const auto wa = povpool::pool_second(window, PoolingSpec::wa(4));
  CHECK(povpool::same_pixels(
      wa.image, povpool::weighted_average(window, povpool::uniform_weights(4)).image));
  CHECK(wa.second_index == 3);

  const auto war = povpool::pool_second(window, PoolingSpec::war(4));
  CHECK(povpool::same_pixels(
      war.image, povpool::weighted_average(window, povpool::ramp_weights(4)).image));

  const auto wae = povpool::pool_second(window, PoolingSpec::wae(4, 0.7));
  CHECK(povpool::same_pixels(
      wae.image, povpool::weighted_average(window, povpool::exp_weights(4, 0.7)).image));

  const auto bblf = povpool::pool_second(window, PoolingSpec::bblf(4, 0.5, 2.0));
  CHECK(povpool::same_pixels(
      bblf.image,
      povpool::blend_blur_last_frame(window, PoolingSpec::bblf(4, 0.5, 2.0)).image));
}

TEST_CASE("pool_second WAE hand value on a 1x1 two-frame window") {
  const SecondWindow window = testutil::make_window(
      1, 2, {testutil::constant_image(1, 1, 30, 10, 99), testutil::constant_image(1, 1, 200, 130, 99)});
  const auto pooled = povpool::pool_second(window, PoolingSpec::wae(2, std::log(2.0)));
  // weights (1/3, 2/3): r = 430/3 = 143.33 -> 143, g = 270/3 = 90, b = 99.
  CHECK(pooled.image.pixels[0] == 143);
  CHECK(pooled.image.pixels[1] == 90);
  CHECK(pooled.image.pixels[2] == 99);
}

TEST_CASE("spec validation couples parameters to their operator") {
  PoolingSpec wa = PoolingSpec::wa(24);
  wa.lambda = 0.5;
  CHECK(code_of([&] { wa.validate(); }) == Errc::BadParameter);

  PoolingSpec wae = PoolingSpec::wae(24, 0.5);
  wae.lambda.reset();
  CHECK(code_of([&] { wae.validate(); }) == Errc::BadParameter);

  CHECK(code_of([] { PoolingSpec::bblf(24, 1.2, 1.0).validate(); }) == Errc::BadParameter);
  CHECK(code_of([] { PoolingSpec::wae(0, 0.5).validate(); }) == Errc::BadParameter);
  CHECK_NOTHROW(PoolingSpec::bblf(24, 0.5, 2.0).validate());
}

TEST_CASE("operator names round-trip and unknown names are rejected") {
  for (PoolOperator op :
       {PoolOperator::WA, PoolOperator::WAE, PoolOperator::WAR, PoolOperator::BBLF}) {
    const auto back = povpool::operator_from_name(povpool::operator_name(op));
    REQUIRE(back.has_value());
    CHECK(*back == op);
  }
  CHECK(povpool::operator_from_name("wa").has_value());
  CHECK_FALSE(povpool::operator_from_name("median").has_value());
  CHECK_FALSE(povpool::operator_from_name("").has_value());
}

TEST_CASE("key_frame is the last frame of the second") {
  std::mt19937 rng(32);
  std::vector<Image> images;
  for (int i = 0; i < 24; ++i) images.push_back(testutil::random_image(rng, 4, 4));
  const SecondWindow window = testutil::make_window(2, 24, images);
  const povpool::Frame& key = povpool::key_frame(window);
  CHECK(key.index == 48);
  CHECK(povpool::same_pixels(key.image, images.back()));
  CHECK(code_of([] { povpool::key_frame(SecondWindow{}); }) == Errc::EmptyWindow);
}
