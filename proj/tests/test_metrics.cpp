#include <doctest.h>

#include <cmath>
#include <gsblur/metrics.hpp>
#include <gsblur/rng.hpp>

using namespace gsblur;

namespace {

float q255(double v) {
  v = std::min(1.0, std::max(0.0, v));
  return float(std::round(v * 255.0) / 255.0);
}

// Deterministic sinusoid pair k; the same closed form was evaluated with an
// independent reference SSIM implementation to freeze the expected values.
void make_pair(int k, Image& a, Image& b) {
  a = Image(32, 32, 3);
  b = Image(32, 32, 3);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      for (int c = 0; c < 3; ++c) {
        const double av = 0.5 + 0.5 * std::sin(0.1 * (k + 1) * i + 0.23 * j + c);
        a.at(i, j, c) = q255(av);
        b.at(i, j, c) =
            q255(double(a.at(i, j, c)) + 0.1 * std::sin(0.31 * i - 0.17 * j + k));
      }
}

}  // namespace

TEST_CASE("psnr basics") {
  Image x(16, 16, 3);
  Rng rng(2);
  for (auto& v : x.data) v = float(rng.uniform());
  CHECK(psnr(x, x) == kPsnrClamp);

  // Uniform difference of 0.1 -> exactly 20 dB.
  Image y = x;
  for (auto& v : x.data) v = 0.45f;
  for (auto& v : y.data) v = 0.55f;
  CHECK(psnr(x, y) == doctest::Approx(20.0).epsilon(1e-6));

  // Additive zero-mean noise sigma -> -20*log10(sigma) within 0.3 dB.
  for (double sigma : {0.02, 0.05, 0.1}) {
    Image base(64, 64, 3), noisy(64, 64, 3);
    for (std::size_t i = 0; i < base.data.size(); ++i) {
      base.data[i] = 0.5f;
      noisy.data[i] = float(0.5 + sigma * rng.normal());
    }
    CHECK(std::abs(psnr(base, noisy) + 20.0 * std::log10(sigma)) < 0.3);
  }

  CHECK_THROWS_AS(psnr(Image(8, 8, 3), Image(9, 8, 3)), std::invalid_argument);
}

TEST_CASE("ssim identity and extremes") {
  Image x(32, 32, 1);
  Rng rng(3);
  for (auto& v : x.data) v = float(rng.uniform());
  CHECK(ssim(x, x).value == doctest::Approx(1.0).epsilon(1e-12));

  // Binary image vs its inversion: strongly anti-correlated, SSIM < 0.1.
  Image bin(32, 32, 1), inv(32, 32, 1);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) {
      const float v = ((i / 4 + j / 4) & 1) ? 1.0f : 0.0f;
      bin.at(i, j, 0) = v;
      inv.at(i, j, 0) = 1.0f - v;
    }
  CHECK(ssim(bin, inv).value < 0.1);
}

TEST_CASE("ssim constant-offset closed form") {
  // Both inputs constant: the structure term is C2/C2 = 1 and the luminance
  // term reduces to the scalar formula.
  Image a(24, 24, 3), b(24, 24, 3);
  for (auto& v : a.data) v = 0.4f;
  for (auto& v : b.data) v = 0.5f;
  const double c1 = 0.01 * 0.01;
  const double expected = (2 * 0.4 * 0.5 + c1) / (0.4 * 0.4 + 0.5 * 0.5 + c1);
  // Inputs are float images, so 0.4f/0.5f are only ~1e-8 from exact.
  CHECK(ssim(a, b).value == doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected == doctest::Approx(0.9756157034869544).epsilon(1e-12));
}

TEST_CASE("ssim matches independent reference on 5 fixed pairs") {
  // Frozen from scikit-image structural_similarity with gaussian_weights,
  // sigma = 1.5, win_size = 11, population covariance, data_range = 1.
  const double expected[5] = {0.8934838058, 0.9243349651, 0.9471277966,
                              0.9648130166, 0.9733205095};
  for (int k = 0; k < 5; ++k) {
    Image a, b;
    make_pair(k, a, b);
    CHECK(ssim(a, b).value == doctest::Approx(expected[k]).epsilon(1e-4));
  }
}

TEST_CASE("ssim map shape and border") {
  Image a(20, 18, 1), b(20, 18, 1);
  Rng rng(8);
  for (auto& v : a.data) v = float(rng.uniform());
  for (auto& v : b.data) v = float(rng.uniform());
  const SsimResult r = ssim(a, b);
  REQUIRE(r.map.width == 20);
  REQUIRE(r.map.height == 18);
  // 11x11 windows need 5 pixels of margin; the border of the map is zero.
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 18; ++j) {
      const bool border = i < 5 || i >= 15 || j < 5 || j >= 13;
      if (border) CHECK(r.map.at(i, j, 0) == 0.0f);
    }
}

TEST_CASE("ssim gradient matches finite differences") {
  Image a(24, 24, 3), b(24, 24, 3);
  Rng rng(12);
  for (auto& v : a.data) v = float(rng.uniform());
  for (auto& v : b.data) v = float(rng.uniform());
  const ImageD g = ssim_gradient(a, b);
  const double h = 1e-4;
  for (int trial = 0; trial < 48; ++trial) {
    const std::size_t i = rng.uniform_index(a.data.size());
    Image p = a;
    p.data[i] = float(double(p.data[i]) + h);
    const double vp = ssim(p, b).value;
    p.data[i] = float(double(a.data[i]) - h);
    const double vm = ssim(p, b).value;
    const double fd = (vp - vm) / (2.0 * h);
    CHECK(std::abs(g.data[i] - fd) <
          1e-3 * std::max({1e-4, std::abs(fd), std::abs(g.data[i])}));
  }
}

TEST_CASE("l1 mean") {
  Image a(8, 8, 3), b(8, 8, 3);
  for (auto& v : a.data) v = 0.25f;
  for (auto& v : b.data) v = 0.75f;
  CHECK(l1_mean(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(l1_mean(a, a) == 0.0);
}
