#include "gsblur/explore.hpp"

#include <limits>

#include "gsblur/metrics.hpp"

namespace gsblur {

namespace {

const Image* nearest_reference(const std::vector<PoseImage>& refs,
                               const PoseSE3& pose) {
  const Image* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& r : refs) {
    const double d = pose_distance(r.pose, pose);
    if (d < best_d) {
      best_d = d;
      best = &r.image;
    }
  }
  return best;
}

}  // namespace

std::optional<double> baseline_score(const GaussianScene& scene,
                                     const CameraIntrinsics& intr,
                                     PriorProvider& provider,
                                     const std::vector<PoseSE3>& training_poses,
                                     const std::vector<PoseImage>& references,
                                     int t0, const RenderOptions& opts) {
  if (training_poses.empty())
    throw std::invalid_argument("baseline_score: no training poses");
  double sum = 0.0;
  for (const auto& pose : training_poses) {
    const Image rendered = render(scene, pose, intr, opts).color;
    RepairRequest req;
    req.rendered = rendered;
    req.pose = pose;
    req.t0 = t0;
    const Image* ref = nearest_reference(references, pose);
    req.reference = ref ? *ref : rendered;
    Image fixed;
    try {
      fixed = provider.repair(req);
    } catch (const std::exception&) {
      return std::nullopt;  // soft failure: exploration skipped this round
    }
    sum += psnr(fixed, rendered);
  }
  return sum / double(training_poses.size());
}

ScoredCandidate score_candidate(const GaussianScene& scene,
                                const CameraIntrinsics& intr,
                                PriorProvider& provider, const PoseSE3& pose,
                                const std::vector<PoseImage>& references,
                                double baseline, const ExplorationConfig& cfg,
                                const RenderOptions& opts) {
  ScoredCandidate out;
  out.pose = pose;
  out.rendered = render(scene, pose, intr, opts).color;
  RepairRequest req;
  req.rendered = out.rendered;
  req.pose = pose;
  req.t0 = cfg.t0;
  const Image* ref = nearest_reference(references, pose);
  req.reference = ref ? *ref : out.rendered;
  try {
    out.fixed = provider.repair(req);
  } catch (const std::exception&) {
    out.scored = false;
    out.accepted = false;
    return out;
  }
  out.scored = true;
  out.s = psnr(out.fixed, out.rendered);
  out.s_tilde = cfg.literal_sign ? out.s - baseline : baseline - out.s;
  out.accepted = (out.s_tilde >= cfg.s_min && out.s_tilde <= cfg.s_max);
  return out;
}

std::vector<PoseSE3> generate_candidates(const std::vector<PoseSE3>& buffer,
                                         const ExplorationConfig& cfg) {
  std::vector<PoseSE3> out;
  if (buffer.size() < 2) return out;
  const double m = cfg.extrapolation_margin;
  auto is_dup = [&](const PoseSE3& p) {
    for (const auto& b : buffer)
      if (pose_distance(b, p) < 1e-6) return true;
    for (const auto& c : out)
      if (pose_distance(c, p) < 1e-6) return true;
    return false;
  };
  for (std::size_t i = 0; i + 1 < buffer.size(); ++i) {
    const PoseSE3& a = buffer[i];
    const PoseSE3& b = buffer[i + 1];
    std::vector<double> us;
    for (int j = 1; j <= cfg.candidates_per_pair; ++j)
      us.push_back(double(j) / double(cfg.candidates_per_pair + 1));
    us.push_back(-m);
    us.push_back(1.0 + m);
    for (double u : us) {
      const PoseSE3 cand = interpolate_pose(a, b, u);
      if (!is_dup(cand)) out.push_back(cand);
    }
  }
  return out;
}

ExplorationRound explore(const GaussianScene& scene,
                         const CameraIntrinsics& intr, PriorProvider& provider,
                         std::vector<PoseSE3>& buffer,
                         const std::vector<PoseImage>& references,
                         const ExplorationConfig& cfg,
                         const RenderOptions& opts) {
  ExplorationRound round;
  const auto baseline =
      baseline_score(scene, intr, provider, buffer, references, cfg.t0, opts);
  if (!baseline) {
    round.skipped = true;
    return round;
  }
  round.baseline = *baseline;
  const std::vector<PoseSE3> cands = generate_candidates(buffer, cfg);
  for (const auto& pose : cands) {
    ScoredCandidate sc = score_candidate(scene, intr, provider, pose,
                                         references, *baseline, cfg, opts);
    if (sc.accepted) round.accepted.push_back(sc);
    round.candidates.push_back(std::move(sc));
  }
  // Buffer append only after the whole round scored: round-order independent.
  for (const auto& sc : round.accepted) buffer.push_back(sc.pose);
  return round;
}

}  // namespace gsblur
