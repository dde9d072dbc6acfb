#pragma once

// Deterministic multi-scale feature extractor standing behind the perceptual
// loss interface: 3-level Gaussian pyramid, each level carrying its color
// channels plus a Sobel gradient-magnitude channel, normalized with fixed
// constants (never per-image statistics).

#include <vector>

#include "gsblur/image.hpp"

namespace gsblur {

struct FeatureLevel {
  int level = 0;
  ImageD planes;  // H x W x 4: [r, g, b, grad-magnitude], normalized
};

struct FeatureMap {
  std::vector<FeatureLevel> levels;
  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.planes.size();
    return n;
  }
};

FeatureMap extract_features(const Image& img);

// Squared feature distance sum over levels, divided by the total element
// count. Symmetric in value; the adjoint flows only into `a` (`b_fixed` is a
// stop-gradient target by construction of the interface).
struct PerceptualLoss {
  double value = 0.0;
  ImageD adjoint;  // dL/da
};

PerceptualLoss perceptual_loss(const Image& a, const Image& b_fixed);

double feature_distance(const FeatureMap& fa, const FeatureMap& fb);

}  // namespace gsblur
