#include "gsblur/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gsblur/adam.hpp"
#include "gsblur/features.hpp"
#include "gsblur/metrics.hpp"
#include "gsblur/rng.hpp"

namespace gsblur {

DepthReg depth_reg_loss(const Image& depth) {
  DepthReg out;
  out.adjoint = ImageD(depth.width, depth.height, depth.channels);
  const int w = depth.width, h = depth.height;
  const double inv_n = 1.0 / (double(w) * h);
  double sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double d = double(depth.at(x + 1, y, 0)) - double(depth.at(x, y, 0));
        sum += std::abs(d);
        const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        out.adjoint.at(x + 1, y, 0) += inv_n * s;
        out.adjoint.at(x, y, 0) -= inv_n * s;
      }
      if (y + 1 < h) {
        const double d = double(depth.at(x, y + 1, 0)) - double(depth.at(x, y, 0));
        sum += std::abs(d);
        const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        out.adjoint.at(x, y + 1, 0) += inv_n * s;
        out.adjoint.at(x, y, 0) -= inv_n * s;
      }
    }
  out.value = sum * inv_n;
  return out;
}

double total_loss(const LossComponents& c, const TrainConfig& cfg) {
  double total = c.blurry + cfg.lambda_pr * c.pr;
  if (!c.buffer_empty)
    total += cfg.lambda_geo * c.geo + cfg.lambda_reg * c.reg;
  return total;
}

namespace {

struct GaussianOptimizer {
  AdamState pos, scale, rot, opacity, sh;

  void init(std::size_t n) {
    pos.resize(Eigen::Index(n) * 3);
    scale.resize(Eigen::Index(n) * 3);
    rot.resize(Eigen::Index(n) * 3);
    opacity.resize(Eigen::Index(n));
    sh.resize(Eigen::Index(n) * 3 * kShCoeffsMax);
  }

  void step(GaussianScene& scene, const std::vector<GaussianGrad>& grads,
            const TrainConfig& cfg, double extent, int* skipped) {
    const std::size_t n = scene.gaussians.size();
    Eigen::VectorXd g_pos(Eigen::Index(n) * 3), g_scale(Eigen::Index(n) * 3),
        g_rot(Eigen::Index(n) * 3), g_op((Eigen::Index(n))),
        g_sh(Eigen::Index(n) * 3 * kShCoeffsMax);
    for (std::size_t i = 0; i < n; ++i) {
      g_pos.segment<3>(Eigen::Index(i) * 3) = grads[i].d_mu;
      g_scale.segment<3>(Eigen::Index(i) * 3) = grads[i].d_log_scale;
      g_rot.segment<3>(Eigen::Index(i) * 3) = grads[i].d_rot;
      g_op[Eigen::Index(i)] = grads[i].d_opacity_logit;
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kShCoeffsMax; ++k)
          g_sh[Eigen::Index(i) * 3 * kShCoeffsMax + c * kShCoeffsMax + k] =
              grads[i].d_sh(c, k);
    }
    const long before = pos.skipped_count() + scale.skipped_count() +
                        rot.skipped_count() + opacity.skipped_count() +
                        sh.skipped_count();
    const Eigen::VectorXd u_pos = pos.step(g_pos, cfg.lr_position * extent);
    const Eigen::VectorXd u_scale = scale.step(g_scale, cfg.lr_scale);
    const Eigen::VectorXd u_rot = rot.step(g_rot, cfg.lr_rotation);
    const Eigen::VectorXd u_op = opacity.step(g_op, cfg.lr_opacity);
    const Eigen::VectorXd u_sh = sh.step(g_sh, cfg.lr_sh);
    const long after = pos.skipped_count() + scale.skipped_count() +
                       rot.skipped_count() + opacity.skipped_count() +
                       sh.skipped_count();
    if (skipped) *skipped += int(after - before);
    for (std::size_t i = 0; i < n; ++i) {
      Gaussian& g = scene.gaussians[i];
      g.mu += u_pos.segment<3>(Eigen::Index(i) * 3);
      g.log_scale += u_scale.segment<3>(Eigen::Index(i) * 3);
      g.rot = so3_exp(u_rot.segment<3>(Eigen::Index(i) * 3)) * g.rot;
      g.opacity_logit += u_op[Eigen::Index(i)];
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < kShCoeffsMax; ++k)
          g.sh(c, k) +=
              u_sh[Eigen::Index(i) * 3 * kShCoeffsMax + c * kShCoeffsMax + k];
    }
  }

  void prune(const std::vector<int>& keep) {
    pos.keep_indices(keep, 3);
    scale.keep_indices(keep, 3);
    rot.keep_indices(keep, 3);
    opacity.keep_indices(keep, 1);
    sh.keep_indices(keep, 3 * kShCoeffsMax);
  }
};

struct GeneratedView {
  PoseSE3 pose;
  Image fixed;
};

void accumulate(std::vector<GaussianGrad>& acc,
                const std::vector<GaussianGrad>& g, double w) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i].d_mu += w * g[i].d_mu;
    acc[i].d_log_scale += w * g[i].d_log_scale;
    acc[i].d_rot += w * g[i].d_rot;
    acc[i].d_opacity_logit += w * g[i].d_opacity_logit;
    acc[i].d_sh += w * g[i].d_sh;
  }
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  PriorProvider* provider) {
  const std::size_t frames = data.blurry.size();
  if (frames == 0) throw std::invalid_argument("train: empty dataset");
  if (data.init_mid.size() != frames)
    throw std::invalid_argument("train: pose count != frame count");
  if (data.init_scene.gaussians.empty())
    throw std::invalid_argument("train: empty initial scene");
  const bool need_provider = cfg.enable_pr || cfg.enable_explore;
  if (need_provider && !provider)
    throw std::invalid_argument("train: config requires a prior provider");

  TrainResult result;
  result.scene = data.init_scene;
  GaussianScene& scene = result.scene;
  const double extent = std::max(scene.extent(), 1e-6);

  // Zero-motion initialization: both endpoints at the (possibly corrupted)
  // midpoint estimate.
  result.segments.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    result.segments[f].t_start = data.init_mid[f];
    result.segments[f].t_end = data.init_mid[f];
    result.segments[f].n = cfg.n_virtual;
    result.segments[f].spacing = cfg.spacing;
    result.segments[f].interp = cfg.interp;
  }

  // Deblurred targets are cached once and never change (fatal on failure:
  // the perceptual loss needs them from iteration 1).
  std::vector<Image> deblur_targets(frames);
  if (cfg.enable_pr || cfg.enable_explore) {
    if (!provider->capabilities().deblur)
      throw std::runtime_error("train: provider lacks deblur capability");
    for (std::size_t f = 0; f < frames; ++f)
      deblur_targets[f] = provider->deblur(data.blurry[f], data.init_mid[f]);
  }

  GaussianOptimizer gopt;
  gopt.init(scene.gaussians.size());
  AdamState popt;  // [xi_start; xi_end] per frame
  popt.resize(Eigen::Index(frames) * 12);

  Rng rng(cfg.seed ^ 0x7261696e5f726e67ULL);
  std::vector<int> order(frames);
  for (std::size_t f = 0; f < frames; ++f) order[f] = int(f);

  std::vector<PoseSE3> explore_buffer;
  std::vector<GeneratedView> gen_views;

  auto evaluate = [&](double* out_psnr, double* out_ssim) {
    if (data.test_sharp.empty()) {
      *out_psnr = 0;
      *out_ssim = 0;
      return;
    }
    double ps = 0, ss = 0;
    for (std::size_t t = 0; t < data.test_sharp.size(); ++t) {
      const Image r =
          render(scene, data.test_poses[t], data.intr, cfg.render).color;
      ps += psnr(r, data.test_sharp[t]);
      ss += ssim(r, data.test_sharp[t]).value;
    }
    *out_psnr = ps / double(data.test_sharp.size());
    *out_ssim = ss / double(data.test_sharp.size());
  };

  for (int iter = 1; iter <= cfg.total_iters; ++iter) {
    // Seeded shuffle at each epoch boundary.
    const std::size_t slot = std::size_t(iter - 1) % frames;
    if (slot == 0) {
      for (std::size_t i = frames; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    const int f = order[slot];
    ExposureSegment& seg = result.segments[std::size_t(f)];

    std::vector<GaussianGrad> ggrads(scene.gaussians.size());
    Vec6 d_start = Vec6::Zero(), d_end = Vec6::Zero();
    LossComponents losses;
    losses.buffer_empty = gen_views.empty();

    // Photometric loss on the sampled blurry frame.
    {
      const BlurRender blur = synthesize_blur(scene, seg, data.intr, cfg.render);
      const BlurLoss bl = blurry_loss(blur.color, data.blurry[std::size_t(f)],
                                      {cfg.lambda_l1, cfg.lambda_ssim});
      losses.blurry = bl.value;
      const BlurGradients bg =
          synthesize_blur_backward(scene, seg, data.intr, bl.adjoint, cfg.render);
      accumulate(ggrads, bg.gaussians, 1.0);
      d_start += bg.d_start.vec();
      d_end += bg.d_end.vec();
    }

    // Perceptual loss at the segment midpoint against the cached deblurred
    // target (stop-gradient target by construction).
    if (cfg.enable_pr && cfg.lambda_pr > 0) {
      const PoseSE3 mid =
          interpolate_pose(seg.t_start, seg.t_end, 0.5, nullptr, cfg.interp);
      const RenderOutput ro = render(scene, mid, data.intr, cfg.render);
      const PerceptualLoss pl =
          perceptual_loss(ro.color, deblur_targets[std::size_t(f)]);
      losses.pr = pl.value;
      ImageD adj = pl.adjoint;
      for (auto& v : adj.data) v *= cfg.lambda_pr;
      const RenderGradients rg =
          render_backward(scene, mid, data.intr, adj, nullptr, cfg.render);
      accumulate(ggrads, rg.gaussians, 1.0);
      const InterpJacobians jac =
          interpolate_pose_jacobians(seg.t_start, seg.t_end, 0.5, cfg.interp);
      d_start += jac.d_start.transpose() * rg.pose.vec();
      d_end += jac.d_end.transpose() * rg.pose.vec();
    }

    // Exploration round: interpolate/extrapolate candidate poses, band-pass
    // accept, feed the generated-view buffer.
    if (cfg.enable_explore && iter > cfg.warmup_iters &&
        (iter - cfg.warmup_iters) % cfg.gen_interval == 0) {
      if (explore_buffer.empty()) {
        for (const auto& s : result.segments)
          explore_buffer.push_back(
              interpolate_pose(s.t_start, s.t_end, 0.5, nullptr, cfg.interp));
      }
      std::vector<PoseImage> refs;
      for (std::size_t i = 0; i < frames; ++i)
        refs.push_back({data.init_mid[i], deblur_targets[i]});
      const ExplorationRound round =
          explore(scene, data.intr, *provider, explore_buffer, refs,
                  cfg.explore, cfg.render);
      if (!round.skipped) {
        ++result.report.explored_rounds;
        for (const auto& sc : round.accepted) {
          gen_views.push_back({sc.pose, sc.fixed});
          ++result.report.accepted_views;
        }
      }
    }

    // One buffered generated view: geometric guidance + depth smoothness.
    if (!gen_views.empty() && (cfg.lambda_geo > 0 || cfg.enable_reg)) {
      const GeneratedView& gv =
          gen_views[rng.uniform_index(gen_views.size())];
      const RenderOutput ro = render(scene, gv.pose, data.intr, cfg.render);
      ImageD color_adj(ro.color.width, ro.color.height, 3);
      ImageD depth_adj(ro.depth.width, ro.depth.height, 1);
      bool have_adj = false;
      if (cfg.lambda_geo > 0) {
        const PerceptualLoss pl = perceptual_loss(ro.color, gv.fixed);
        losses.geo = pl.value;
        for (std::size_t k = 0; k < color_adj.data.size(); ++k)
          color_adj.data[k] = cfg.lambda_geo * pl.adjoint.data[k];
        have_adj = true;
      }
      if (cfg.enable_reg && cfg.lambda_reg > 0) {
        const DepthReg dr = depth_reg_loss(ro.depth);
        losses.reg = dr.value;
        for (std::size_t k = 0; k < depth_adj.data.size(); ++k)
          depth_adj.data[k] = cfg.lambda_reg * dr.adjoint.data[k];
        have_adj = true;
      }
      if (have_adj) {
        const RenderGradients rg = render_backward(
            scene, gv.pose, data.intr, color_adj, &depth_adj, cfg.render);
        accumulate(ggrads, rg.gaussians, 1.0);
        // Generated-view poses are fixed; no pose gradient.
      }
    }

    // Parameter updates.
    if (cfg.optimize_gaussians)
      gopt.step(scene, ggrads, cfg, extent, &result.report.skipped_steps);
    if (cfg.optimize_poses && iter > cfg.pose_start_iter) {
      Eigen::VectorXd pg = Eigen::VectorXd::Zero(Eigen::Index(frames) * 12);
      pg.segment<6>(Eigen::Index(f) * 12) = d_start;
      pg.segment<6>(Eigen::Index(f) * 12 + 6) = d_end;
      const double lr =
          exp_decay_lr(cfg.pose_lr_start, cfg.pose_lr_end, iter, cfg.total_iters);
      const long before = popt.skipped_count();
      const Eigen::VectorXd up = popt.step(pg, lr);
      result.report.skipped_steps += int(popt.skipped_count() - before);
      for (std::size_t i = 0; i < frames; ++i) {
        const TangentSE3 us(Vec6(up.segment<6>(Eigen::Index(i) * 12)));
        const TangentSE3 ue(Vec6(up.segment<6>(Eigen::Index(i) * 12 + 6)));
        result.segments[i].t_start = se3_exp(us) * result.segments[i].t_start;
        result.segments[i].t_end = se3_exp(ue) * result.segments[i].t_end;
      }
    }

    // Opacity-floor pruning (keeps every Gaussian at or above the floor).
    if (cfg.optimize_gaussians && cfg.prune_interval > 0 &&
        iter % cfg.prune_interval == 0) {
      std::vector<int> keep;
      for (std::size_t i = 0; i < scene.gaussians.size(); ++i)
        if (scene.gaussians[i].opacity() >= cfg.prune_opacity)
          keep.push_back(int(i));
      if (!keep.empty() && keep.size() < scene.gaussians.size()) {
        std::vector<Gaussian> survivors;
        survivors.reserve(keep.size());
        for (int k : keep) survivors.push_back(scene.gaussians[std::size_t(k)]);
        result.report.pruned_total += int(scene.gaussians.size() - keep.size());
        scene.gaussians = std::move(survivors);
        gopt.prune(keep);
      }
    }

    MetricsRow row;
    row.iter = iter;
    row.l_blurry = losses.blurry;
    row.l_pr = losses.pr;
    row.l_geo = losses.geo;
    row.l_reg = losses.reg;
    if ((cfg.eval_interval > 0 && iter % cfg.eval_interval == 0) ||
        iter == cfg.total_iters) {
      row.evaluated = true;
      evaluate(&row.heldout_psnr, &row.heldout_ssim);
      result.report.final_psnr = row.heldout_psnr;
      result.report.final_ssim = row.heldout_ssim;
    }
    result.report.rows.push_back(row);
  }
  return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "iter,L_blurry,L_pr,L_geo,L_reg,heldout_psnr,heldout_ssim\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g", r.iter,
                  r.l_blurry, r.l_pr, r.l_geo, r.l_reg);
    out += buf;
    if (r.evaluated) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", r.heldout_psnr,
                    r.heldout_ssim);
      out += buf;
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << metrics_csv(rows);
}

}  // namespace gsblur
