#include "gsblur/blur.hpp"

#include <cmath>
#include <stdexcept>

#include "gsblur/metrics.hpp"

namespace gsblur {

std::vector<double> virtual_sample_times(const ExposureSegment& seg) {
  if (seg.n < 1) throw std::invalid_argument("virtual_poses: n must be >= 1");
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(seg.n));
  if (seg.n == 1) {
    u.push_back(0.5);  // midpoint convention
    return u;
  }
  if (seg.spacing == SampleSpacing::kInclusive) {
    for (int i = 0; i < seg.n; ++i) u.push_back(double(i) / (seg.n - 1));
  } else {
    for (int i = 0; i < seg.n; ++i) u.push_back((i + 0.5) / seg.n);
  }
  return u;
}

std::vector<PoseSE3> virtual_poses(const ExposureSegment& seg) {
  std::vector<PoseSE3> poses;
  for (double u : virtual_sample_times(seg))
    poses.push_back(
        interpolate_pose(seg.t_start, seg.t_end, u, nullptr, seg.interp));
  return poses;
}

BlurRender synthesize_blur(const GaussianScene& scene,
                           const ExposureSegment& seg,
                           const CameraIntrinsics& intr,
                           const RenderOptions& opts) {
  const auto poses = virtual_poses(seg);
  std::vector<RenderOutput> renders(poses.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < int(poses.size()); ++i)
    renders[static_cast<std::size_t>(i)] =
        render(scene, poses[static_cast<std::size_t>(i)], intr, opts);

  BlurRender out;
  out.color = Image(intr.width, intr.height, 3);
  out.mean_depth = Image(intr.width, intr.height, 1);
  // Order-fixed mean reduction in double.
  const double inv_n = 1.0 / double(poses.size());
  std::vector<double> acc_c(out.color.size(), 0.0), acc_d(out.mean_depth.size(), 0.0);
  for (const auto& r : renders) {
    for (std::size_t k = 0; k < acc_c.size(); ++k) acc_c[k] += r.color.data[k];
    for (std::size_t k = 0; k < acc_d.size(); ++k) acc_d[k] += r.depth.data[k];
  }
  for (std::size_t k = 0; k < acc_c.size(); ++k)
    out.color.data[k] = float(acc_c[k] * inv_n);
  for (std::size_t k = 0; k < acc_d.size(); ++k)
    out.mean_depth.data[k] = float(acc_d[k] * inv_n);
  return out;
}

BlurGradients synthesize_blur_backward(const GaussianScene& scene,
                                       const ExposureSegment& seg,
                                       const CameraIntrinsics& intr,
                                       const ImageD& dL_dblur,
                                       const RenderOptions& opts) {
  const auto times = virtual_sample_times(seg);
  const auto poses = virtual_poses(seg);
  const double inv_n = 1.0 / double(poses.size());
  ImageD sample_adj = dL_dblur;
  for (auto& v : sample_adj.data) v *= inv_n;

  std::vector<RenderGradients> grads(poses.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < int(poses.size()); ++i)
    grads[static_cast<std::size_t>(i)] = render_backward(
        scene, poses[static_cast<std::size_t>(i)], intr, sample_adj, nullptr, opts);

  BlurGradients out;
  out.gaussians.assign(scene.gaussians.size(), {});
  Vec6 d_start = Vec6::Zero(), d_end = Vec6::Zero();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& g = grads[i];
    for (std::size_t k = 0; k < out.gaussians.size(); ++k) {
      out.gaussians[k].d_mu += g.gaussians[k].d_mu;
      out.gaussians[k].d_log_scale += g.gaussians[k].d_log_scale;
      out.gaussians[k].d_rot += g.gaussians[k].d_rot;
      out.gaussians[k].d_opacity_logit += g.gaussians[k].d_opacity_logit;
      out.gaussians[k].d_sh += g.gaussians[k].d_sh;
    }
    const InterpJacobians jac = interpolate_pose_jacobians(
        seg.t_start, seg.t_end, times[i], seg.interp);
    d_start += jac.d_start.transpose() * g.pose.vec();
    d_end += jac.d_end.transpose() * g.pose.vec();
  }
  out.d_start = TangentSE3(d_start);
  out.d_end = TangentSE3(d_end);
  return out;
}

BlurLoss blurry_loss(const Image& pred, const Image& target,
                     const BlurLossWeights& w) {
  require_same_shape(pred, target, "blurry_loss");
  if (w.l1 < 0 || w.ssim < 0)
    throw std::invalid_argument("blurry_loss: weights must be >= 0");
  BlurLoss out;
  out.adjoint = ImageD(pred.width, pred.height, pred.channels);

  out.l1 = l1_mean(pred, target);
  const double inv_n = 1.0 / double(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = double(pred.data[i]) - double(target.data[i]);
    out.adjoint.data[i] = w.l1 * inv_n * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
  }

  if (w.ssim > 0) {
    out.ssim_value = ssim(pred, target).value;
    const ImageD sg = ssim_gradient(pred, target);
    for (std::size_t i = 0; i < sg.data.size(); ++i)
      out.adjoint.data[i] -= w.ssim * sg.data[i];  // L_SSIM = 1 - SSIM
  } else {
    out.ssim_value = 0.0;
  }
  out.value = w.l1 * out.l1 + w.ssim * (1.0 - out.ssim_value);
  if (w.ssim == 0) out.value = w.l1 * out.l1;
  return out;
}

}  // namespace gsblur
