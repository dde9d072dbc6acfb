#pragma once

#include <vector>

#include "gsblur/image.hpp"

namespace gsblur {

struct SpectrumProfile {
  ImageD log_magnitude;          // centered 2D log-magnitude
  std::vector<double> radial;    // radially averaged power, 1-pixel bins
  double hf_ratio = 0.0;         // energy above half-Nyquist / total (DC excluded)
};

// Luma conversion (0.299/0.587/0.114), mean subtraction, Hann window, FFT.
// The high-frequency ratio excludes the DC bin so it measures structure, not
// brightness.
SpectrumProfile radial_spectrum(const Image& img);

}  // namespace gsblur
