#pragma once

// Exposure-trajectory blur synthesis and the photometric loss on blurry
// observations.

#include <vector>

#include "gsblur/lie.hpp"
#include "gsblur/rasterizer.hpp"

namespace gsblur {

enum class SampleSpacing {
  kInclusive,  // u_i = i/(n-1), endpoints observable (default)
  kOpen,       // u_i = (i+0.5)/n
};

// One blurry frame's latent trajectory.
struct ExposureSegment {
  PoseSE3 t_start;
  PoseSE3 t_end;
  int n = 10;  // virtual sample count
  SampleSpacing spacing = SampleSpacing::kInclusive;
  InterpMode interp = InterpMode::kCoupled;
};

std::vector<double> virtual_sample_times(const ExposureSegment& seg);
std::vector<PoseSE3> virtual_poses(const ExposureSegment& seg);

struct BlurRender {
  Image color;       // mean of the n renders
  Image mean_depth;  // diagnostics
};

BlurRender synthesize_blur(const GaussianScene& scene,
                           const ExposureSegment& seg,
                           const CameraIntrinsics& intr,
                           const RenderOptions& opts = {});

// Gradients of a scalar loss through the blur synthesis. The adjoint on the
// blur image is distributed as adjoint/n to each virtual render; per-sample
// pose gradients are pulled back to the segment endpoints through the
// geodesic-interpolation Jacobians.
struct BlurGradients {
  std::vector<GaussianGrad> gaussians;
  TangentSE3 d_start;
  TangentSE3 d_end;
};

BlurGradients synthesize_blur_backward(const GaussianScene& scene,
                                       const ExposureSegment& seg,
                                       const CameraIntrinsics& intr,
                                       const ImageD& dL_dblur,
                                       const RenderOptions& opts = {});

struct BlurLossWeights {
  double l1 = 0.8;
  double ssim = 0.2;
};

struct BlurLoss {
  double value = 0.0;
  double l1 = 0.0;
  double ssim_value = 0.0;  // SSIM itself, not the loss term
  ImageD adjoint;           // dL/dpred
};

// lambda1 * mean|pred-target| + lambda_ssim * (1 - SSIM(pred, target)).
BlurLoss blurry_loss(const Image& pred, const Image& target,
                     const BlurLossWeights& w);

}  // namespace gsblur
