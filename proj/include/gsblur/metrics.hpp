#pragma once

#include "gsblur/image.hpp"

namespace gsblur {

// 10*log10(1/MSE) for [0,1]-range images, channel-pooled MSE; identical
// images clamp to 99 dB.
double psnr(const Image& a, const Image& b);
inline constexpr double kPsnrClamp = 99.0;

struct SsimResult {
  double value = 0.0;   // mean SSIM over valid window positions, channel-averaged
  Image map;            // per-pixel SSIM map (valid region; border = 0)
};

// Standard SSIM: 11x11 Gaussian window sigma=1.5, C1=(0.01)^2, C2=(0.03)^2
// on unit range. Windows fully inside the image (valid region).
SsimResult ssim(const Image& a, const Image& b);

// d(mean SSIM)/da, exact analytic adjoint of ssim().value w.r.t. `a`.
ImageD ssim_gradient(const Image& a, const Image& b);

double l1_mean(const Image& a, const Image& b);

}  // namespace gsblur
