#include "gsblur/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gsblur {

namespace {

constexpr int kTile = 16;

struct Prep {
  bool valid = false;
  Eigen::Vector2d m2;
  Eigen::Matrix2d cov2d;
  Eigen::Matrix2d conic;  // cov2d^-1
  double z = 0;
  Eigen::Matrix<double, 2, 3> J;
  Vec3 xc;
  Vec3 color_pre, color;
  double opacity = 0;
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // clipped pixel bbox, half-open
  Vec3 dir;
  double dist = 0;
  Eigen::Matrix<double, kShCoeffsMax, 1> basis;
};

struct Frame {
  Mat3 W;        // world-to-camera rotation
  Vec3 cam_pos;  // camera center in world
  std::vector<Prep> prep;
  std::vector<int> order;                  // depth-sorted valid indices
  std::vector<std::vector<int>> tiles;     // per tile, in sorted order
  int tiles_x = 0, tiles_y = 0;
  RenderStats stats;
};

Vec3 skew_inner(const Mat3& x) {
  return Vec3(x(2, 1) - x(1, 2), x(0, 2) - x(2, 0), x(1, 0) - x(0, 1));
}

Frame preprocess(const GaussianScene& scene, const PoseSE3& pose,
                 const CameraIntrinsics& intr, const RenderOptions& opts) {
  intr.validate();
  Frame f;
  f.W = pose.rotation.matrix().transpose();
  f.cam_pos = pose.translation;
  const int n = static_cast<int>(scene.gaussians.size());
  f.prep.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const Gaussian& g = scene.gaussians[static_cast<std::size_t>(i)];
    Prep& p = f.prep[static_cast<std::size_t>(i)];
    p.xc = f.W * (g.mu - pose.translation);
    p.z = p.xc.z();
    if (!(p.z > intr.near_clip && p.z < intr.far_clip)) {
      ++f.stats.culled;
      continue;
    }
    const double iz = 1.0 / p.z;
    p.m2 = Eigen::Vector2d(intr.fx * p.xc.x() * iz + intr.cx,
                           intr.fy * p.xc.y() * iz + intr.cy);
    p.J.setZero();
    p.J(0, 0) = intr.fx * iz;
    p.J(1, 1) = intr.fy * iz;
    p.J(0, 2) = -intr.fx * p.xc.x() * iz * iz;
    p.J(1, 2) = -intr.fy * p.xc.y() * iz * iz;

    const Mat3 sigma_cam = f.W * covariance(g) * f.W.transpose();
    p.cov2d = p.J * sigma_cam * p.J.transpose();
    p.cov2d(0, 0) += opts.cov2d_floor;
    p.cov2d(1, 1) += opts.cov2d_floor;
    const double det = p.cov2d.determinant();
    if (!(det > 1e-12) || !p.cov2d.allFinite()) {
      ++f.stats.skipped_degenerate;
      continue;
    }
    p.conic << p.cov2d(1, 1) / det, -p.cov2d(0, 1) / det,
        -p.cov2d(1, 0) / det, p.cov2d(0, 0) / det;

    // 3-sigma screen-space extent.
    const double mid = 0.5 * (p.cov2d(0, 0) + p.cov2d(1, 1));
    const double lam_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = std::ceil(3.0 * std::sqrt(lam_max));
    p.x0 = std::max(0, int(std::floor(p.m2.x() - radius)));
    p.x1 = std::min(intr.width, int(std::ceil(p.m2.x() + radius)) + 1);
    p.y0 = std::max(0, int(std::floor(p.m2.y() - radius)));
    p.y1 = std::min(intr.height, int(std::ceil(p.m2.y() + radius)) + 1);
    if (p.x0 >= p.x1 || p.y0 >= p.y1) {
      ++f.stats.culled;
      continue;
    }

    const Vec3 rel = g.mu - pose.translation;
    p.dist = rel.norm();
    p.dir = p.dist > 1e-12 ? Vec3(rel / p.dist) : Vec3(0, 0, 1);
    p.basis = sh_basis(p.dir, scene.sh_degree);
    p.color_pre = g.sh * p.basis;
    p.color = p.color_pre.cwiseMax(0.0).cwiseMin(1.0);
    p.opacity = g.opacity();
    p.valid = true;
  }

  // Global front-to-back order; stable tie-break on scene index.
  f.order.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (f.prep[static_cast<std::size_t>(i)].valid) f.order.push_back(i);
  std::sort(f.order.begin(), f.order.end(), [&](int a, int b) {
    const double za = f.prep[static_cast<std::size_t>(a)].z;
    const double zb = f.prep[static_cast<std::size_t>(b)].z;
    return za < zb || (za == zb && a < b);
  });

  f.tiles_x = (intr.width + kTile - 1) / kTile;
  f.tiles_y = (intr.height + kTile - 1) / kTile;
  f.tiles.assign(static_cast<std::size_t>(f.tiles_x) * f.tiles_y, {});
  for (int idx : f.order) {
    const Prep& p = f.prep[static_cast<std::size_t>(idx)];
    const int tx0 = p.x0 / kTile, tx1 = (p.x1 - 1) / kTile;
    const int ty0 = p.y0 / kTile, ty1 = (p.y1 - 1) / kTile;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        f.tiles[static_cast<std::size_t>(ty) * f.tiles_x + tx].push_back(idx);
  }
  return f;
}

struct Contribution {
  int idx;        // scene index
  double alpha;
  double trans;   // T before this primitive
  bool clamped;   // alpha hit the clamp
};

// Front-to-back blend for one pixel; returns contributions when `out` given.
template <bool kRecord>
void blend_pixel(const Frame& f, const std::vector<int>& list, double px,
                 double py, const RenderOptions& opts, Vec3& color,
                 double& depth, double& trans,
                 std::vector<Contribution>* out) {
  color.setZero();
  depth = 0;
  trans = 1.0;
  for (int idx : list) {
    const Prep& p = f.prep[static_cast<std::size_t>(idx)];
    if (px < p.x0 || px >= p.x1 || py < p.y0 || py >= p.y1) continue;
    const Eigen::Vector2d d(px + 0.5 - p.m2.x(), py + 0.5 - p.m2.y());
    const double power = -0.5 * d.dot(p.conic * d);
    if (power < -15.0) continue;
    double alpha = p.opacity * std::exp(power);
    if (alpha < opts.alpha_skip) continue;
    const bool clamped = alpha > opts.alpha_clamp;
    if (clamped) alpha = opts.alpha_clamp;
    color += trans * alpha * p.color;
    depth += trans * alpha * p.z;
    if constexpr (kRecord) out->push_back({idx, alpha, trans, clamped});
    trans *= 1.0 - alpha;
    if (trans < opts.transmittance_stop) break;
  }
}

}  // namespace

ProjectedGaussian project(const Gaussian& g, const PoseSE3& pose,
                          const CameraIntrinsics& intr,
                          const RenderOptions& opts) {
  GaussianScene one;
  one.gaussians.push_back(g);
  one.sh_degree = 0;
  const Frame f = preprocess(one, pose, intr, opts);
  const Prep& p = f.prep[0];
  ProjectedGaussian out;
  out.valid = p.valid;
  if (p.valid || p.z > intr.near_clip) {
    out.mean2d = p.m2;
    out.cov2d = p.cov2d;
    out.depth = p.z;
  }
  return out;
}

template <typename S>
RenderOutputT<S> render_t(const GaussianScene& scene, const PoseSE3& pose,
                          const CameraIntrinsics& intr,
                          const RenderOptions& opts) {
  const Frame f = preprocess(scene, pose, intr, opts);
  RenderOutputT<S> out;
  out.color = ImageT<S>(intr.width, intr.height, 3);
  out.depth = ImageT<S>(intr.width, intr.height, 1);
  out.alpha = ImageT<S>(intr.width, intr.height, 1);
  out.stats = f.stats;

  const int n_tiles = f.tiles_x * f.tiles_y;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < n_tiles; ++t) {
    const int tx = t % f.tiles_x, ty = t / f.tiles_x;
    const auto& list = f.tiles[static_cast<std::size_t>(t)];
    const int px0 = tx * kTile, px1 = std::min(intr.width, px0 + kTile);
    const int py0 = ty * kTile, py1 = std::min(intr.height, py0 + kTile);
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        Vec3 c;
        double depth, trans;
        blend_pixel<false>(f, list, x, y, opts, c, depth, trans, nullptr);
        out.color.at(x, y, 0) = S(c.x());
        out.color.at(x, y, 1) = S(c.y());
        out.color.at(x, y, 2) = S(c.z());
        out.depth.at(x, y, 0) = S(depth);
        out.alpha.at(x, y, 0) = S(1.0 - trans);
      }
    }
  }
  return out;
}

template RenderOutputT<float> render_t<float>(const GaussianScene&,
                                              const PoseSE3&,
                                              const CameraIntrinsics&,
                                              const RenderOptions&);
template RenderOutputT<double> render_t<double>(const GaussianScene&,
                                                const PoseSE3&,
                                                const CameraIntrinsics&,
                                                const RenderOptions&);

namespace {

// Screen-space gradient accumulator for one gaussian.
struct ScreenGrad {
  Eigen::Vector2d m2 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d c2 = Eigen::Matrix2d::Zero();
  Vec3 color = Vec3::Zero();
  double o_logit = 0;
  double zdep = 0;  // through the expected-depth output
  bool touched = false;
};

}  // namespace

RenderGradients render_backward(const GaussianScene& scene, const PoseSE3& pose,
                                const CameraIntrinsics& intr,
                                const ImageD& dL_dcolor,
                                const ImageD* dL_ddepth,
                                const RenderOptions& opts) {
  if (dL_dcolor.width != intr.width || dL_dcolor.height != intr.height ||
      dL_dcolor.channels != 3)
    throw std::invalid_argument("render_backward: color adjoint shape mismatch");
  if (dL_ddepth && (dL_ddepth->width != intr.width ||
                    dL_ddepth->height != intr.height || dL_ddepth->channels != 1))
    throw std::invalid_argument("render_backward: depth adjoint shape mismatch");

  const Frame f = preprocess(scene, pose, intr, opts);
  const int n = static_cast<int>(scene.gaussians.size());
  RenderGradients out;
  out.gaussians.assign(static_cast<std::size_t>(n), {});

  // Phase 1: per-tile screen-space accumulation (parallel, tile-local).
  const int n_tiles = f.tiles_x * f.tiles_y;
  std::vector<std::vector<std::pair<int, ScreenGrad>>> tile_accum(
      static_cast<std::size_t>(n_tiles));

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < n_tiles; ++t) {
    const int tx = t % f.tiles_x, ty = t / f.tiles_x;
    const auto& list = f.tiles[static_cast<std::size_t>(t)];
    if (list.empty()) continue;
    // Local accumulators indexed by position in the tile list.
    std::vector<ScreenGrad> local(list.size());
    std::vector<int> local_of_idx;  // scene idx -> local slot via map
    // list is small; linear probe map
    auto slot = [&](int idx) {
      for (std::size_t k = 0; k < list.size(); ++k)
        if (list[k] == idx) return k;
      return list.size();
    };

    std::vector<Contribution> contribs;
    contribs.reserve(64);
    const int px0 = tx * kTile, px1 = std::min(intr.width, px0 + kTile);
    const int py0 = ty * kTile, py1 = std::min(intr.height, py0 + kTile);
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        contribs.clear();
        Vec3 c;
        double depth, trans;
        blend_pixel<true>(f, list, x, y, opts, c, depth, trans, &contribs);
        if (contribs.empty()) continue;
        const Vec3 wc(dL_dcolor.at(x, y, 0), dL_dcolor.at(x, y, 1),
                      dL_dcolor.at(x, y, 2));
        const double wd = dL_ddepth ? dL_ddepth->at(x, y, 0) : 0.0;
        if (wc.isZero(0.0) && wd == 0.0) continue;

        // Back-to-front: suffix accumulator S = sum_{j>i} T_j a_j (c_j.wc + z_j wd)
        double suffix = 0.0;
        for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
          const Prep& p = f.prep[static_cast<std::size_t>(it->idx)];
          const double contrib_val = p.color.dot(wc) + p.z * wd;
          const double dL_dalpha =
              it->trans * contrib_val - suffix / (1.0 - it->alpha);
          suffix += it->trans * it->alpha * contrib_val;

          const std::size_t k = slot(it->idx);
          ScreenGrad& acc = local[k];
          acc.touched = true;
          const double rho = it->trans * it->alpha;
          acc.color += rho * wc;
          acc.zdep += rho * wd;
          if (!it->clamped) {
            // alpha = o * G; G = exp(-0.5 d^T conic d)
            const double G = it->alpha / p.opacity;
            const Eigen::Vector2d d(x + 0.5 - p.m2.x(), y + 0.5 - p.m2.y());
            const Eigen::Vector2d cd = p.conic * d;
            const double dL_dG = dL_dalpha * p.opacity;
            acc.m2 += dL_dG * G * cd;
            acc.c2 += (0.5 * dL_dG * G) * (cd * cd.transpose());
            acc.o_logit += dL_dalpha * G * p.opacity * (1.0 - p.opacity);
          }
        }
      }
    }
    auto& sink = tile_accum[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < list.size(); ++k)
      if (local[k].touched) sink.emplace_back(list[k], local[k]);
  }

  // Phase 2: deterministic tile-order reduction into per-gaussian buffers.
  std::vector<ScreenGrad> accum(static_cast<std::size_t>(n));
  for (int t = 0; t < n_tiles; ++t) {
    for (const auto& [idx, g] : tile_accum[static_cast<std::size_t>(t)]) {
      ScreenGrad& a = accum[static_cast<std::size_t>(idx)];
      a.m2 += g.m2;
      a.c2 += g.c2;
      a.color += g.color;
      a.o_logit += g.o_logit;
      a.zdep += g.zdep;
      a.touched = true;
    }
  }

  // Phase 3: per-gaussian projection chain rule (parallel, independent).
  const Mat3 R = pose.rotation.matrix();
  const auto jbasis = sh_basis_jacobian(scene.sh_degree);
  std::vector<Vec6> pose_contrib(static_cast<std::size_t>(n), Vec6::Zero());

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const ScreenGrad& a = accum[static_cast<std::size_t>(i)];
    const Prep& p = f.prep[static_cast<std::size_t>(i)];
    if (!a.touched || !p.valid) continue;
    const Gaussian& g = scene.gaussians[static_cast<std::size_t>(i)];
    GaussianGrad& gg = out.gaussians[static_cast<std::size_t>(i)];

    // Color clamp mask, then SH and view-direction chain.
    Vec3 col_grad = a.color;
    for (int ch = 0; ch < 3; ++ch)
      if (p.color_pre[ch] <= 0.0 || p.color_pre[ch] >= 1.0) col_grad[ch] = 0.0;
    gg.d_sh = col_grad * p.basis.transpose();
    const Vec3 dL_ddir = (col_grad.transpose() * g.sh * jbasis).transpose();

    // Screen-space covariance to camera-space covariance and Jacobian.
    const Mat3 sigma = covariance(g);
    const Mat3 sigma_cam = f.W * sigma * f.W.transpose();
    const Mat3 dL_dM = p.J.transpose() * a.c2 * p.J;
    const Eigen::Matrix<double, 2, 3> dL_dJ = 2.0 * a.c2 * p.J * sigma_cam;

    // Camera-space point gradient, split into the mean/depth path and the
    // path through J's dependence on the point.
    const double iz = 1.0 / p.z;
    Vec3 dxc_mean = p.J.transpose() * a.m2;
    dxc_mean.z() += a.zdep;
    Vec3 dxc_cov = Vec3::Zero();
    dxc_cov.x() = dL_dJ(0, 2) * (-intr.fx * iz * iz);
    dxc_cov.y() = dL_dJ(1, 2) * (-intr.fy * iz * iz);
    dxc_cov.z() = dL_dJ(0, 0) * (-intr.fx * iz * iz) +
                  dL_dJ(1, 1) * (-intr.fy * iz * iz) +
                  dL_dJ(0, 2) * (2.0 * intr.fx * p.xc.x() * iz * iz * iz) +
                  dL_dJ(1, 2) * (2.0 * intr.fy * p.xc.y() * iz * iz * iz);
    const Vec3 dxc = dxc_mean + dxc_cov;

    // World covariance gradient -> log-scale and rotation tangent.
    const Mat3 dL_dSigma = f.W.transpose() * dL_dM * f.W;
    const Mat3 Rg = g.rot.matrix();
    const Mat3 B = Rg.transpose() * dL_dSigma * Rg;
    const Vec3 s2 = (2.0 * g.log_scale).array().exp();
    for (int k = 0; k < 3; ++k) gg.d_log_scale[k] = B(k, k) * 2.0 * s2[k];
    gg.d_rot = -skew_inner(sigma * dL_dSigma - dL_dSigma * sigma);

    // Position gradient: through X_c and through the SH view direction.
    const Mat3 dir_proj =
        (Mat3::Identity() - p.dir * p.dir.transpose()) / std::max(p.dist, 1e-12);
    const Vec3 dL_drel = dir_proj * dL_ddir;  // rel = mu - cam_pos
    gg.d_mu = R * dxc + dL_drel;
    gg.d_opacity_logit = a.o_logit;

    // Pose gradient, left tangent [omega; nu] at the current pose.
    Vec6 pg = Vec6::Zero();
    const Vec3 dxc_pose = opts.pose_full_jacobian ? dxc : dxc_mean;
    const Vec3 r_dxc = R * dxc_pose;
    pg.tail<3>() = -r_dxc - dL_drel;                       // nu
    pg.head<3>() = -skew(g.mu) * r_dxc - skew(pose.translation) * dL_drel;
    if (opts.pose_full_jacobian) {
      const Mat3 dL_dW = 2.0 * dL_dM * f.W * sigma;
      pg.head<3>() -= skew_inner(R * dL_dW);
    }
    pose_contrib[static_cast<std::size_t>(i)] = pg;
  }

  Vec6 pg_total = Vec6::Zero();
  for (const auto& pg : pose_contrib) pg_total += pg;
  out.pose = TangentSE3(pg_total);
  return out;
}

}  // namespace gsblur
