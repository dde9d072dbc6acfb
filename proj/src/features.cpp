#include "gsblur/features.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace gsblur {

namespace {

constexpr int kLevels = 3;
constexpr double kColorMean = 0.5, kColorStd = 0.25;
constexpr double kGradMean = 0.25, kGradStd = 0.25;
constexpr double kMagEps = 1e-12;
constexpr int kBlurRadius = 3;  // sigma = 1.0

std::array<double, 2 * kBlurRadius + 1> make_kernel() {
  std::array<double, 2 * kBlurRadius + 1> a{};
  double sum = 0;
  for (int i = -kBlurRadius; i <= kBlurRadius; ++i) {
    a[static_cast<std::size_t>(i + kBlurRadius)] = std::exp(-0.5 * double(i) * i);
    sum += a[static_cast<std::size_t>(i + kBlurRadius)];
  }
  for (auto& v : a) v /= sum;
  return a;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable Gaussian blur with clamp-to-edge boundary, all channels.
ImageD gauss_blur(const ImageD& img) {
  static const auto k = make_kernel();
  ImageD tmp(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i)
          s += k[static_cast<std::size_t>(i + kBlurRadius)] *
               img.at(clampi(x + i, 0, img.width - 1), y, c);
        tmp.at(x, y, c) = s;
      }
  ImageD out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double s = 0;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i)
          s += k[static_cast<std::size_t>(i + kBlurRadius)] *
               tmp.at(x, clampi(y + i, 0, img.height - 1), c);
        out.at(x, y, c) = s;
      }
  return out;
}

// Exact adjoint of gauss_blur (clamped reads become scattered accumulates).
ImageD gauss_blur_adjoint(const ImageD& grad) {
  static const auto k = make_kernel();
  ImageD tmp(grad.width, grad.height, grad.channels);
  for (int y = 0; y < grad.height; ++y)
    for (int x = 0; x < grad.width; ++x)
      for (int c = 0; c < grad.channels; ++c) {
        const double g = grad.at(x, y, c);
        if (g == 0) continue;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i)
          tmp.at(x, clampi(y + i, 0, grad.height - 1), c) +=
              k[static_cast<std::size_t>(i + kBlurRadius)] * g;
      }
  ImageD out(grad.width, grad.height, grad.channels);
  for (int y = 0; y < grad.height; ++y)
    for (int x = 0; x < grad.width; ++x)
      for (int c = 0; c < grad.channels; ++c) {
        const double g = tmp.at(x, y, c);
        if (g == 0) continue;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i)
          out.at(clampi(x + i, 0, grad.width - 1), y, c) +=
              k[static_cast<std::size_t>(i + kBlurRadius)] * g;
      }
  return out;
}

ImageD downsample2(const ImageD& img) {
  ImageD out(img.width / 2, img.height / 2, img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(2 * x, 2 * y, c);
  return out;
}

ImageD downsample2_adjoint(const ImageD& grad, int w, int h) {
  ImageD out(w, h, grad.channels);
  for (int y = 0; y < grad.height; ++y)
    for (int x = 0; x < grad.width; ++x)
      for (int c = 0; c < grad.channels; ++c)
        out.at(2 * x, 2 * y, c) = grad.at(x, y, c);
  return out;
}

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

ImageD to_luma(const ImageD& img) {
  ImageD out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y, 0) = kLumaR * img.at(x, y, 0) + kLumaG * img.at(x, y, 1) +
                        kLumaB * img.at(x, y, 2);
  return out;
}

struct SobelPair {
  ImageD gx, gy;
};

SobelPair sobel(const ImageD& luma) {
  SobelPair out{ImageD(luma.width, luma.height, 1),
                ImageD(luma.width, luma.height, 1)};
  auto at = [&](int x, int y) {
    return luma.at(clampi(x, 0, luma.width - 1), clampi(y, 0, luma.height - 1), 0);
  };
  for (int y = 0; y < luma.height; ++y)
    for (int x = 0; x < luma.width; ++x) {
      out.gx.at(x, y, 0) = (at(x + 1, y - 1) - at(x - 1, y - 1)) +
                           2.0 * (at(x + 1, y) - at(x - 1, y)) +
                           (at(x + 1, y + 1) - at(x - 1, y + 1));
      out.gy.at(x, y, 0) = (at(x - 1, y + 1) - at(x - 1, y - 1)) +
                           2.0 * (at(x, y + 1) - at(x, y - 1)) +
                           (at(x + 1, y + 1) - at(x + 1, y - 1));
    }
  return out;
}

ImageD sobel_adjoint(const ImageD& d_gx, const ImageD& d_gy, int w, int h) {
  ImageD out(w, h, 1);
  auto add = [&](int x, int y, double v) {
    out.at(clampi(x, 0, w - 1), clampi(y, 0, h - 1), 0) += v;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = d_gx.at(x, y, 0);
      if (gx != 0) {
        add(x + 1, y - 1, gx);
        add(x - 1, y - 1, -gx);
        add(x + 1, y, 2.0 * gx);
        add(x - 1, y, -2.0 * gx);
        add(x + 1, y + 1, gx);
        add(x - 1, y + 1, -gx);
      }
      const double gy = d_gy.at(x, y, 0);
      if (gy != 0) {
        add(x - 1, y + 1, gy);
        add(x - 1, y - 1, -gy);
        add(x, y + 1, 2.0 * gy);
        add(x, y - 1, -2.0 * gy);
        add(x + 1, y + 1, gy);
        add(x + 1, y - 1, -gy);
      }
    }
  return out;
}

struct LevelWork {
  ImageD color;  // level image, 3ch
  SobelPair sob;
  ImageD mag;
};

std::vector<LevelWork> build_pyramid(const Image& img) {
  if (img.width < 16 || img.height < 16)
    throw std::invalid_argument("extract_features: image must be >= 16x16");
  if (img.channels != 3)
    throw std::invalid_argument("extract_features: expected 3-channel image");
  std::vector<LevelWork> work(kLevels);
  work[0].color = img.cast<double>();
  for (int l = 1; l < kLevels; ++l)
    work[static_cast<std::size_t>(l)].color =
        downsample2(gauss_blur(work[static_cast<std::size_t>(l - 1)].color));
  for (auto& w : work) {
    w.sob = sobel(to_luma(w.color));
    w.mag = ImageD(w.color.width, w.color.height, 1);
    for (int y = 0; y < w.color.height; ++y)
      for (int x = 0; x < w.color.width; ++x)
        w.mag.at(x, y, 0) = std::sqrt(w.sob.gx.at(x, y, 0) * w.sob.gx.at(x, y, 0) +
                                      w.sob.gy.at(x, y, 0) * w.sob.gy.at(x, y, 0) +
                                      kMagEps);
  }
  return work;
}

FeatureMap assemble(const std::vector<LevelWork>& work) {
  FeatureMap fm;
  for (int l = 0; l < kLevels; ++l) {
    const auto& w = work[static_cast<std::size_t>(l)];
    FeatureLevel fl;
    fl.level = l;
    fl.planes = ImageD(w.color.width, w.color.height, 4);
    for (int y = 0; y < w.color.height; ++y)
      for (int x = 0; x < w.color.width; ++x) {
        for (int c = 0; c < 3; ++c)
          fl.planes.at(x, y, c) = (w.color.at(x, y, c) - kColorMean) / kColorStd;
        fl.planes.at(x, y, 3) = (w.mag.at(x, y, 0) - kGradMean) / kGradStd;
      }
    fm.levels.push_back(std::move(fl));
  }
  return fm;
}

}  // namespace

FeatureMap extract_features(const Image& img) {
  return assemble(build_pyramid(img));
}

double feature_distance(const FeatureMap& fa, const FeatureMap& fb) {
  if (fa.levels.size() != fb.levels.size())
    throw std::invalid_argument("feature_distance: level count mismatch");
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < fa.levels.size(); ++l) {
    const auto& pa = fa.levels[l].planes;
    const auto& pb = fb.levels[l].planes;
    if (!pa.same_shape(pb))
      throw std::invalid_argument("feature_distance: level shape mismatch");
    for (std::size_t i = 0; i < pa.data.size(); ++i) {
      const double d = pa.data[i] - pb.data[i];
      sum += d * d;
    }
    n += pa.data.size();
  }
  return sum / double(n);
}

PerceptualLoss perceptual_loss(const Image& a, const Image& b_fixed) {
  require_same_shape(a, b_fixed, "perceptual_loss");
  const auto wa = build_pyramid(a);
  const auto wb = build_pyramid(b_fixed);
  const FeatureMap fa = assemble(wa);
  const FeatureMap fb = assemble(wb);

  PerceptualLoss out;
  out.value = feature_distance(fa, fb);
  const double inv_n = 1.0 / double(fa.element_count());

  // Reverse pass: accumulate dL into each level's color image, then fold
  // coarse levels back through the pyramid into level 0.
  std::vector<ImageD> d_color(kLevels);
  for (int l = kLevels - 1; l >= 0; --l) {
    const auto& w = wa[static_cast<std::size_t>(l)];
    const auto& pa = fa.levels[static_cast<std::size_t>(l)].planes;
    const auto& pb = fb.levels[static_cast<std::size_t>(l)].planes;
    ImageD dc(w.color.width, w.color.height, 3);
    ImageD d_gx(w.color.width, w.color.height, 1);
    ImageD d_gy(w.color.width, w.color.height, 1);
    for (int y = 0; y < w.color.height; ++y)
      for (int x = 0; x < w.color.width; ++x) {
        for (int c = 0; c < 3; ++c)
          dc.at(x, y, c) = 2.0 * inv_n * (pa.at(x, y, c) - pb.at(x, y, c)) / kColorStd;
        const double dmag =
            2.0 * inv_n * (pa.at(x, y, 3) - pb.at(x, y, 3)) / kGradStd;
        const double mag = w.mag.at(x, y, 0);
        d_gx.at(x, y, 0) = dmag * w.sob.gx.at(x, y, 0) / mag;
        d_gy.at(x, y, 0) = dmag * w.sob.gy.at(x, y, 0) / mag;
      }
    const ImageD d_luma = sobel_adjoint(d_gx, d_gy, w.color.width, w.color.height);
    for (int y = 0; y < w.color.height; ++y)
      for (int x = 0; x < w.color.width; ++x) {
        const double g = d_luma.at(x, y, 0);
        dc.at(x, y, 0) += kLumaR * g;
        dc.at(x, y, 1) += kLumaG * g;
        dc.at(x, y, 2) += kLumaB * g;
      }
    // Contribution flowing down from the coarser level.
    if (l < kLevels - 1 && !d_color[static_cast<std::size_t>(l + 1)].empty()) {
      const ImageD up = gauss_blur_adjoint(downsample2_adjoint(
          d_color[static_cast<std::size_t>(l + 1)], w.color.width, w.color.height));
      for (std::size_t i = 0; i < dc.data.size(); ++i) dc.data[i] += up.data[i];
    }
    d_color[static_cast<std::size_t>(l)] = std::move(dc);
  }

  out.adjoint = ImageD(a.width, a.height, 3);
  out.adjoint.data = d_color[0].data;
  return out;
}

}  // namespace gsblur
