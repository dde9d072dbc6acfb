#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gsblur/lie.hpp"

namespace gsblur {

// Maximum SH coefficient count per channel (degree 1 => 1 + 3).
inline constexpr int kShCoeffsMax = 4;

// One scene atom. Scale is stored as log-scale and opacity as a logit so
// unconstrained gradient steps keep the primitive valid by construction.
struct Gaussian {
  Vec3 mu = Vec3::Zero();          // position, scene units
  Vec3 log_scale = Vec3::Zero();   // log of per-axis stddev
  Rotation rot;
  double opacity_logit = 0.0;
  // Per-channel SH coefficients, row = channel, col = basis index.
  Eigen::Matrix<double, 3, kShCoeffsMax> sh =
      Eigen::Matrix<double, 3, kShCoeffsMax>::Zero();

  Vec3 scale() const { return log_scale.array().exp(); }
  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
};

struct GaussianScene {
  std::vector<Gaussian> gaussians;
  int sh_degree = 1;  // 0 or 1

  Aabb bounding_box() const;
  double extent() const { return bounding_box().diagonal(); }
};

enum class SceneLayout { kBox, kTexturedWall, kClusterField };
enum class ColorScheme { kChecker, kRainbow, kMono };

SceneLayout layout_from_string(const std::string& s);
std::string layout_to_string(SceneLayout l);
ColorScheme color_scheme_from_string(const std::string& s);
std::string color_scheme_to_string(ColorScheme c);

// Same recipe => bit-identical scene (pinned PRNG, no platform-dependent
// math in generation).
struct SceneRecipe {
  std::uint64_t seed = 1;
  int count = 500;
  SceneLayout layout = SceneLayout::kTexturedWall;
  ColorScheme colors = ColorScheme::kChecker;
  int sh_degree = 1;
};

// Sigma = R S S^T R^T; symmetric positive definite since scales > 0.
Mat3 covariance(const Gaussian& g);

// Real SH basis values for degree 0/1, 3DGS coefficient ordering
// [DC, Y1(-1)~y, Y1(0)~z, Y1(1)~x].
Eigen::Matrix<double, kShCoeffsMax, 1> sh_basis(const Vec3& unit_dir,
                                                int degree);
// d basis / d dir (rows = basis index, cols = dir component).
Eigen::Matrix<double, kShCoeffsMax, 3> sh_basis_jacobian(int degree);

// Unclamped RGB; render-time clamping to [0,1] happens in the rasterizer.
Vec3 sh_eval(const Gaussian& g, int degree, const Vec3& unit_dir);

GaussianScene generate_scene(const SceneRecipe& recipe);

void save_scene(const std::string& path, const GaussianScene& scene);
GaussianScene load_scene(const std::string& path);

std::string scene_to_json(const GaussianScene& scene);
GaussianScene scene_from_json(const std::string& text);

}  // namespace gsblur
