#include "gsblur/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace gsblur {

SpectrumProfile radial_spectrum(const Image& img) {
  const int w = img.width, h = img.height;
  // Luma, mean removal, Hann window.
  std::vector<double> f(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v;
      if (img.channels >= 3)
        v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
            0.114 * img.at(x, y, 2);
      else
        v = img.at(x, y, 0);
      f[static_cast<std::size_t>(y) * w + x] = v;
    }
  double mean = 0;
  for (double v : f) mean += v;
  mean /= double(f.size());
  for (int y = 0; y < h; ++y) {
    const double wy = 0.5 * (1.0 - std::cos(2.0 * M_PI * y / (h - 1)));
    for (int x = 0; x < w; ++x) {
      const double wx = 0.5 * (1.0 - std::cos(2.0 * M_PI * x / (w - 1)));
      f[static_cast<std::size_t>(y) * w + x] =
          (f[static_cast<std::size_t>(y) * w + x] - mean) * wx * wy;
    }
  }

  std::vector<fftw_complex> out(static_cast<std::size_t>(h) * (w / 2 + 1));
  {
    // FFTW planning is not thread-safe.
    static std::mutex plan_mutex;
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_plan plan = fftw_plan_dft_r2c_2d(h, w, f.data(), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  SpectrumProfile prof;
  prof.log_magnitude = ImageD(w, h, 1);
  const int n_bins = std::min(w, h) / 2 + 1;
  std::vector<double> power(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(n_bins), 0);
  double total = 0.0, high = 0.0;
  const double half_nyq = std::min(w, h) / 4.0;

  auto spectrum_at = [&](int fx, int fy) {
    // Hermitian symmetry: only fx in [0, w/2] is stored.
    int sx = fx, sy = fy;
    if (sx < 0) {
      sx = -sx;
      sy = -sy;
    }
    sy = ((sy % h) + h) % h;
    const auto& c = out[static_cast<std::size_t>(sy) * (w / 2 + 1) + sx];
    return c[0] * c[0] + c[1] * c[1];
  };

  for (int fy = -h / 2; fy < (h + 1) / 2; ++fy) {
    for (int fx = -w / 2; fx < (w + 1) / 2; ++fx) {
      const double p = spectrum_at(fx, fy);
      const double r = std::sqrt(double(fx) * fx + double(fy) * fy);
      const int bin = int(std::lround(r));
      if (bin < n_bins) {
        power[static_cast<std::size_t>(bin)] += p;
        ++counts[static_cast<std::size_t>(bin)];
      }
      if (bin > 0) {
        total += p;
        if (r > half_nyq) high += p;
      }
      // Centered log-magnitude for inspection.
      const int px = fx + w / 2, py = fy + h / 2;
      if (px >= 0 && px < w && py >= 0 && py < h)
        prof.log_magnitude.at(px, py, 0) = std::log1p(std::sqrt(p));
    }
  }

  prof.radial.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b)
    prof.radial[static_cast<std::size_t>(b)] =
        counts[static_cast<std::size_t>(b)] > 0
            ? power[static_cast<std::size_t>(b)] / counts[static_cast<std::size_t>(b)]
            : 0.0;
  prof.hf_ratio = total > 0 ? high / total : 0.0;
  return prof;
}

}  // namespace gsblur
