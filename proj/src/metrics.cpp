#include "gsblur/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gsblur {

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    sum += d * d;
  }
  const double mse = sum / double(a.data.size());
  if (mse <= 0.0) return kPsnrClamp;
  return std::min(kPsnrClamp, -10.0 * std::log10(mse));
}

double l1_mean(const Image& a, const Image& b) {
  require_same_shape(a, b, "l1_mean");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    sum += std::abs(double(a.data[i]) - double(b.data[i]));
  return sum / double(a.data.size());
}

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& window2d() {
  static const std::vector<double> w = [] {
    std::vector<double> g(kWin);
    double s1 = 0;
    for (int i = 0; i < kWin; ++i) {
      g[static_cast<std::size_t>(i)] =
          std::exp(-0.5 * (i - kHalf) * (i - kHalf) / (1.5 * 1.5));
      s1 += g[static_cast<std::size_t>(i)];
    }
    std::vector<double> w2(kWin * kWin);
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x)
        w2[static_cast<std::size_t>(y) * kWin + x] =
            g[static_cast<std::size_t>(y)] * g[static_cast<std::size_t>(x)] /
            (s1 * s1);
    return w2;
  }();
  return w;
}

struct WindowStats {
  double mux, muy, sxx, syy, sxy;
};

WindowStats window_stats(const Image& a, const Image& b, int x0, int y0,
                         int ch) {
  const auto& w = window2d();
  double mux = 0, muy = 0, mxx = 0, myy = 0, mxy = 0;
  for (int dy = 0; dy < kWin; ++dy)
    for (int dx = 0; dx < kWin; ++dx) {
      const double wk = w[static_cast<std::size_t>(dy) * kWin + dx];
      const double xa = a.at(x0 + dx, y0 + dy, ch);
      const double xb = b.at(x0 + dx, y0 + dy, ch);
      mux += wk * xa;
      muy += wk * xb;
      mxx += wk * xa * xa;
      myy += wk * xb * xb;
      mxy += wk * xa * xb;
    }
  return {mux, muy, mxx - mux * mux, myy - muy * muy, mxy - mux * muy};
}

}  // namespace

SsimResult ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  SsimResult res;
  res.map = Image(a.width, a.height, 1);
  const int wv = a.width - kWin + 1, hv = a.height - kWin + 1;
  double total = 0.0;
  for (int y0 = 0; y0 < hv; ++y0) {
    for (int x0 = 0; x0 < wv; ++x0) {
      double s_ch = 0.0;
      for (int ch = 0; ch < a.channels; ++ch) {
        const WindowStats s = window_stats(a, b, x0, y0, ch);
        const double a1 = 2.0 * s.mux * s.muy + kC1;
        const double a2 = 2.0 * s.sxy + kC2;
        const double b1 = s.mux * s.mux + s.muy * s.muy + kC1;
        const double b2 = s.sxx + s.syy + kC2;
        s_ch += (a1 * a2) / (b1 * b2);
      }
      s_ch /= a.channels;
      res.map.at(x0 + kHalf, y0 + kHalf, 0) = float(s_ch);
      total += s_ch;
    }
  }
  res.value = total / (double(wv) * hv);
  return res;
}

ImageD ssim_gradient(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim_gradient");
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim_gradient: image smaller than window");
  ImageD grad(a.width, a.height, a.channels);
  const auto& w = window2d();
  const int wv = a.width - kWin + 1, hv = a.height - kWin + 1;
  const double inv_n = 1.0 / (double(wv) * hv * a.channels);
  for (int y0 = 0; y0 < hv; ++y0) {
    for (int x0 = 0; x0 < wv; ++x0) {
      for (int ch = 0; ch < a.channels; ++ch) {
        const WindowStats s = window_stats(a, b, x0, y0, ch);
        const double a1 = 2.0 * s.mux * s.muy + kC1;
        const double a2 = 2.0 * s.sxy + kC2;
        const double b1 = s.mux * s.mux + s.muy * s.muy + kC1;
        const double b2 = s.sxx + s.syy + kC2;
        const double S = (a1 * a2) / (b1 * b2);
        // Partials of S w.r.t. window statistics.
        const double f_mu = 2.0 * s.muy * a2 / (b1 * b2) - 2.0 * s.mux * S / b1;
        const double f_sxx = -S / b2;
        const double f_sxy = 2.0 * a1 / (b1 * b2);
        for (int dy = 0; dy < kWin; ++dy)
          for (int dx = 0; dx < kWin; ++dx) {
            const double wk = w[static_cast<std::size_t>(dy) * kWin + dx];
            const double xa = a.at(x0 + dx, y0 + dy, ch);
            const double xb = b.at(x0 + dx, y0 + dy, ch);
            grad.at(x0 + dx, y0 + dy, ch) +=
                inv_n * wk *
                (f_mu + f_sxx * 2.0 * (xa - s.mux) + f_sxy * (xb - s.muy));
          }
      }
    }
  }
  return grad;
}

}  // namespace gsblur
