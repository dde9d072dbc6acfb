#pragma once

// Forward rasterization of a GaussianScene to color/depth/alpha images and
// exact analytic gradients with respect to all Gaussian parameters and the
// camera pose tangent.
//
// Determinism contract: identical inputs produce bit-identical images and
// gradients regardless of thread count. Blending within a pixel is strictly
// sequential front-to-back; parallel work is tiled with a fixed-order
// reduction. All internal arithmetic is double; the scalar template
// parameter selects the output image precision (float for rendering, double
// for the gradient-check suites).

#include <Eigen/Core>
#include <vector>

#include "gsblur/camera.hpp"
#include "gsblur/image.hpp"
#include "gsblur/scene.hpp"

namespace gsblur {

struct RenderOptions {
  double alpha_clamp = 0.999;
  double alpha_skip = 1.0 / 255.0;
  double cov2d_floor = 0.3;           // pixels^2, anti-alias floor
  double transmittance_stop = 1e-4;
  bool pose_full_jacobian = true;     // pose gradient through W and J
};

struct ProjectedGaussian {
  Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Zero();  // includes the floor
  double depth = 0.0;                               // camera-space z
  bool valid = false;
};

// Sigma' = J W Sigma W^T J^T + floor*I; valid=false outside the frustum or
// behind the near plane (culling is a result, not an error).
ProjectedGaussian project(const Gaussian& g, const PoseSE3& pose,
                          const CameraIntrinsics& intr,
                          const RenderOptions& opts = {});

struct RenderStats {
  int culled = 0;               // outside frustum
  int skipped_degenerate = 0;   // non-invertible cov2d after floor
};

template <typename S>
struct RenderOutputT {
  ImageT<S> color;  // H x W x 3, in [0,1]
  ImageT<S> depth;  // expected depth, unnormalized
  ImageT<S> alpha;  // 1 - final transmittance
  RenderStats stats;
};

using RenderOutput = RenderOutputT<float>;
using RenderOutputD = RenderOutputT<double>;

struct GaussianGrad {
  Vec3 d_mu = Vec3::Zero();
  Vec3 d_log_scale = Vec3::Zero();
  Vec3 d_rot = Vec3::Zero();  // left tangent of the primitive rotation
  double d_opacity_logit = 0.0;
  Eigen::Matrix<double, 3, kShCoeffsMax> d_sh =
      Eigen::Matrix<double, 3, kShCoeffsMax>::Zero();
};

struct RenderGradients {
  std::vector<GaussianGrad> gaussians;
  TangentSE3 pose;  // left-multiplied tangent at the current pose
};

template <typename S>
RenderOutputT<S> render_t(const GaussianScene& scene, const PoseSE3& pose,
                          const CameraIntrinsics& intr,
                          const RenderOptions& opts = {});

inline RenderOutput render(const GaussianScene& scene, const PoseSE3& pose,
                           const CameraIntrinsics& intr,
                           const RenderOptions& opts = {}) {
  return render_t<float>(scene, pose, intr, opts);
}

// Adjoint images shaped like the forward output; dL_ddepth may be null.
RenderGradients render_backward(const GaussianScene& scene, const PoseSE3& pose,
                                const CameraIntrinsics& intr,
                                const ImageD& dL_dcolor,
                                const ImageD* dL_ddepth = nullptr,
                                const RenderOptions& opts = {});

extern template RenderOutputT<float> render_t<float>(const GaussianScene&,
                                                     const PoseSE3&,
                                                     const CameraIntrinsics&,
                                                     const RenderOptions&);
extern template RenderOutputT<double> render_t<double>(const GaussianScene&,
                                                       const PoseSE3&,
                                                       const CameraIntrinsics&,
                                                       const RenderOptions&);

}  // namespace gsblur
