#pragma once

// Consistency-guided camera exploration: a per-scene baseline score over the
// training views, candidate poses generated by interpolating (and slightly
// extrapolating) between buffered poses, and band-pass acceptance of
// candidates whose normalized score deviation falls inside [s_min, s_max].

#include <optional>
#include <vector>

#include "gsblur/camera.hpp"
#include "gsblur/image.hpp"
#include "gsblur/lie.hpp"
#include "gsblur/priors.hpp"
#include "gsblur/rasterizer.hpp"
#include "gsblur/scene.hpp"

namespace gsblur {

struct ExplorationConfig {
  // Band thresholds in dB; defaults are the synthetic profile. Outdoor
  // profile: {4.5, 14.5}.
  double s_min = 2.5;
  double s_max = 8.5;
  int candidates_per_pair = 3;
  double extrapolation_margin = 0.1;  // in [0, 0.2]
  // Normalized score. Default: s~ = s_bar - s (PSNR drop below baseline),
  // which makes the positive published thresholds meaningful. The literal
  // variant uses s~ = s - s_bar.
  bool literal_sign = false;
  int t0 = 199;  // noise timestep forwarded to repair
};

struct ScoredCandidate {
  PoseSE3 pose;
  Image rendered;
  Image fixed;
  double s = 0.0;        // raw PSNR(fixed, rendered), dB
  double s_tilde = 0.0;  // normalized deviation, dB
  bool accepted = false;
  bool scored = false;   // false => provider failure, candidate rejected
};

// A (pose, image) pair usable as a repair reference; the reference chosen
// for a request is the nearest by geodesic pose distance.
struct PoseImage {
  PoseSE3 pose;
  Image image;
};

// Mean over training poses of PSNR(repair(render(T_i)), render(T_i)).
// Returns nullopt if the provider fails on any view (exploration skipped,
// soft error).
std::optional<double> baseline_score(const GaussianScene& scene,
                                     const CameraIntrinsics& intr,
                                     PriorProvider& provider,
                                     const std::vector<PoseSE3>& training_poses,
                                     const std::vector<PoseImage>& references,
                                     int t0 = 199,
                                     const RenderOptions& opts = {});

ScoredCandidate score_candidate(const GaussianScene& scene,
                                const CameraIntrinsics& intr,
                                PriorProvider& provider, const PoseSE3& pose,
                                const std::vector<PoseImage>& references,
                                double baseline, const ExplorationConfig& cfg,
                                const RenderOptions& opts = {});

// For each adjacent pair (insertion order): candidates_per_pair interpolants
// at uniformly spaced u in (0,1) plus two extrapolants at u = -m and 1+m,
// deduplicated (geodesic distance < 1e-6) against the buffer and each other.
std::vector<PoseSE3> generate_candidates(const std::vector<PoseSE3>& buffer,
                                         const ExplorationConfig& cfg);

struct ExplorationRound {
  bool skipped = false;   // provider failure during the baseline
  double baseline = 0.0;  // s_bar
  std::vector<ScoredCandidate> candidates;  // full trace, scoring order
  std::vector<ScoredCandidate> accepted;
};

// Scores one full round, then appends accepted poses to the buffer (so later
// rounds interpolate between them too). Buffer mutation happens only after
// all scoring completes; acceptance is order-independent within a round.
ExplorationRound explore(const GaussianScene& scene,
                         const CameraIntrinsics& intr, PriorProvider& provider,
                         std::vector<PoseSE3>& buffer,
                         const std::vector<PoseImage>& references,
                         const ExplorationConfig& cfg,
                         const RenderOptions& opts = {});

}  // namespace gsblur
