#include "gsblur/scene.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gsblur/rng.hpp"

namespace gsblur {

using nlohmann::json;

namespace {
constexpr double kY00 = 0.28209479177387814;
constexpr double kY1 = 0.4886025119029199;
}  // namespace

Aabb GaussianScene::bounding_box() const {
  Aabb box;
  if (gaussians.empty()) return box;
  box.min = box.max = gaussians.front().mu;
  for (const auto& g : gaussians) {
    box.min = box.min.cwiseMin(g.mu);
    box.max = box.max.cwiseMax(g.mu);
  }
  return box;
}

SceneLayout layout_from_string(const std::string& s) {
  if (s == "box") return SceneLayout::kBox;
  if (s == "textured-wall") return SceneLayout::kTexturedWall;
  if (s == "cluster-field") return SceneLayout::kClusterField;
  throw std::invalid_argument("unknown scene layout: " + s);
}

std::string layout_to_string(SceneLayout l) {
  switch (l) {
    case SceneLayout::kBox: return "box";
    case SceneLayout::kTexturedWall: return "textured-wall";
    case SceneLayout::kClusterField: return "cluster-field";
  }
  return "?";
}

ColorScheme color_scheme_from_string(const std::string& s) {
  if (s == "checker") return ColorScheme::kChecker;
  if (s == "rainbow") return ColorScheme::kRainbow;
  if (s == "mono") return ColorScheme::kMono;
  throw std::invalid_argument("unknown color scheme: " + s);
}

std::string color_scheme_to_string(ColorScheme c) {
  switch (c) {
    case ColorScheme::kChecker: return "checker";
    case ColorScheme::kRainbow: return "rainbow";
    case ColorScheme::kMono: return "mono";
  }
  return "?";
}

Mat3 covariance(const Gaussian& g) {
  const Mat3 r = g.rot.matrix();
  const Vec3 s2 = (2.0 * g.log_scale).array().exp();
  return r * s2.asDiagonal() * r.transpose();
}

Eigen::Matrix<double, kShCoeffsMax, 1> sh_basis(const Vec3& dir, int degree) {
  if (degree != 0 && degree != 1)
    throw std::invalid_argument("sh_basis: degree must be 0 or 1");
  if (std::abs(dir.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("sh_basis: direction must be unit length");
  Eigen::Matrix<double, kShCoeffsMax, 1> b =
      Eigen::Matrix<double, kShCoeffsMax, 1>::Zero();
  b[0] = kY00;
  if (degree >= 1) {
    b[1] = -kY1 * dir.y();
    b[2] = kY1 * dir.z();
    b[3] = -kY1 * dir.x();
  }
  return b;
}

Eigen::Matrix<double, kShCoeffsMax, 3> sh_basis_jacobian(int degree) {
  Eigen::Matrix<double, kShCoeffsMax, 3> j =
      Eigen::Matrix<double, kShCoeffsMax, 3>::Zero();
  if (degree >= 1) {
    j(1, 1) = -kY1;
    j(2, 2) = kY1;
    j(3, 0) = -kY1;
  }
  return j;
}

Vec3 sh_eval(const Gaussian& g, int degree, const Vec3& unit_dir) {
  return g.sh * sh_basis(unit_dir, degree);
}

namespace {

Vec3 scheme_color(ColorScheme scheme, int cell_parity, const Vec3& pos,
                  Rng& rng) {
  switch (scheme) {
    case ColorScheme::kChecker: {
      const Vec3 a(0.92, 0.84, 0.18), b(0.12, 0.22, 0.82);
      Vec3 c = cell_parity ? a : b;
      for (int k = 0; k < 3; ++k) c[k] += rng.uniform(-0.05, 0.05);
      return c;
    }
    case ColorScheme::kRainbow: {
      Vec3 c(0.5 + 0.4 * std::sin(6.0 * pos.x()),
             0.5 + 0.4 * std::sin(6.0 * pos.y() + 2.1),
             0.5 + 0.4 * std::sin(6.0 * pos.z() + 4.2));
      return c;
    }
    case ColorScheme::kMono: {
      const double v = 0.65 + rng.uniform(-0.1, 0.1);
      return Vec3(v, v, v);
    }
  }
  return Vec3(0.5, 0.5, 0.5);
}

Gaussian make_gaussian(const Vec3& mu, const Vec3& scale, const Vec3& color,
                       int degree, Rng& rng, double opacity_logit) {
  Gaussian g;
  g.mu = mu;
  g.log_scale = scale.array().log();
  g.opacity_logit = opacity_logit;
  // Random orientation so anisotropy is exercised.
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  if (axis.norm() > 1e-9)
    g.rot = so3_exp(axis.normalized() * rng.uniform(0.0, kPi));
  // Keep DC inside (0,1) with margin so render-time clamping stays inactive
  // for the dominant term.
  for (int ch = 0; ch < 3; ++ch)
    g.sh(ch, 0) = std::clamp(color[ch], 0.05, 0.95) / kY00;
  if (degree >= 1)
    for (int ch = 0; ch < 3; ++ch)
      for (int m = 1; m < 4; ++m) g.sh(ch, m) = rng.uniform(-0.08, 0.08);
  return g;
}

}  // namespace

GaussianScene generate_scene(const SceneRecipe& recipe) {
  if (recipe.count < 1)
    throw std::invalid_argument("generate_scene: count must be >= 1");
  GaussianScene scene;
  scene.sh_degree = recipe.sh_degree;
  scene.gaussians.reserve(static_cast<std::size_t>(recipe.count));
  Rng rng(recipe.seed);

  switch (recipe.layout) {
    case SceneLayout::kBox: {
      if (recipe.count == 1) {
        Gaussian g = make_gaussian(Vec3::Zero(), Vec3(0.3, 0.3, 0.3),
                                   scheme_color(recipe.colors, 0, Vec3::Zero(), rng),
                                   recipe.sh_degree, rng, 2.0);
        g.rot = Rotation();
        scene.gaussians.push_back(g);
        break;
      }
      for (int i = 0; i < recipe.count; ++i) {
        const Vec3 mu(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                      rng.uniform(-0.6, 0.6));
        const double s = rng.uniform(0.04, 0.12);
        const Vec3 scale(s, s * rng.uniform(0.4, 1.0), s * rng.uniform(0.4, 1.0));
        const int parity = (int(std::floor(mu.x() * 4)) + int(std::floor(mu.y() * 4))) & 1;
        scene.gaussians.push_back(
            make_gaussian(mu, scale, scheme_color(recipe.colors, parity, mu, rng),
                          recipe.sh_degree, rng, rng.uniform(1.0, 3.0)));
      }
      break;
    }
    case SceneLayout::kTexturedWall: {
      // Grid of thin primitives on a gently corrugated wall; cell-parity
      // colors give high-frequency structure so blur is observable.
      const int side = std::max(1, int(std::ceil(std::sqrt(double(recipe.count)))));
      const double spacing = 2.0 / side;
      int made = 0;
      for (int iy = 0; iy < side && made < recipe.count; ++iy) {
        for (int ix = 0; ix < side && made < recipe.count; ++ix, ++made) {
          const Vec3 mu(-1.0 + (ix + 0.5) * spacing + rng.uniform(-0.1, 0.1) * spacing,
                        -1.0 + (iy + 0.5) * spacing + rng.uniform(-0.1, 0.1) * spacing,
                        0.12 * std::sin(3.0 * ix * spacing) + rng.uniform(-0.03, 0.03));
          const Vec3 scale(spacing * 0.38, spacing * 0.38, 0.02);
          Gaussian g = make_gaussian(
              mu, scale, scheme_color(recipe.colors, (ix + iy) & 1, mu, rng),
              recipe.sh_degree, rng, rng.uniform(2.0, 4.0));
          // Wall-aligned, small in-plane twist only.
          g.rot = so3_exp(Vec3(0, 0, rng.uniform(-0.3, 0.3)));
          scene.gaussians.push_back(g);
        }
      }
      break;
    }
    case SceneLayout::kClusterField: {
      const int n_clusters = std::max(1, std::min(8, recipe.count / 8 + 1));
      std::vector<Vec3> centers;
      for (int c = 0; c < n_clusters; ++c)
        centers.emplace_back(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9),
                             rng.uniform(-0.5, 0.5));
      for (int i = 0; i < recipe.count; ++i) {
        const Vec3& c = centers[static_cast<std::size_t>(i) % centers.size()];
        const Vec3 mu = c + 0.15 * Vec3(rng.normal(), rng.normal(), rng.normal());
        const double s = rng.uniform(0.02, 0.08);
        const Vec3 scale(s, s, s * rng.uniform(0.3, 1.0));
        const int parity = i & 1;
        scene.gaussians.push_back(
            make_gaussian(mu, scale, scheme_color(recipe.colors, parity, mu, rng),
                          recipe.sh_degree, rng, rng.uniform(1.5, 3.5)));
      }
      break;
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Persistence (scene.json, version 1)
// ---------------------------------------------------------------------------

namespace {

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("scene: " + path + ": expected 3-array");
  for (const auto& e : j)
    if (!e.is_number())
      throw std::runtime_error("scene: " + path + ": expected number");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

std::string scene_to_json(const GaussianScene& scene) {
  json out;
  out["version"] = 1;
  out["sh_degree"] = scene.sh_degree;
  const Aabb box = scene.bounding_box();
  out["bbox"] = {{"min", vec3_to_json(box.min)}, {"max", vec3_to_json(box.max)}};
  json arr = json::array();
  for (const auto& g : scene.gaussians) {
    const auto q = g.rot.canonical();
    json jg;
    jg["mu"] = vec3_to_json(g.mu);
    jg["log_scale"] = vec3_to_json(g.log_scale);
    jg["q"] = {q.w(), q.x(), q.y(), q.z()};
    jg["opacity_logit"] = g.opacity_logit;
    json sh = json::array();
    for (int ch = 0; ch < 3; ++ch) {
      json row = json::array();
      for (int m = 0; m < kShCoeffsMax; ++m) row.push_back(g.sh(ch, m));
      sh.push_back(row);
    }
    jg["sh"] = sh;
    arr.push_back(std::move(jg));
  }
  out["gaussians"] = std::move(arr);
  return out.dump();
}

GaussianScene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scene: JSON parse error: ") + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw std::runtime_error("scene: version: missing or not an integer");
  if (j["version"].get<int>() != 1)
    throw std::runtime_error("scene: version: unsupported version " +
                             std::to_string(j["version"].get<int>()));
  GaussianScene scene;
  if (!j.contains("sh_degree") || !j["sh_degree"].is_number_integer())
    throw std::runtime_error("scene: sh_degree: missing or not an integer");
  scene.sh_degree = j["sh_degree"].get<int>();
  if (scene.sh_degree != 0 && scene.sh_degree != 1)
    throw std::runtime_error("scene: sh_degree: must be 0 or 1");
  if (!j.contains("gaussians") || !j["gaussians"].is_array())
    throw std::runtime_error("scene: gaussians: missing or not an array");
  std::size_t idx = 0;
  for (const auto& jg : j["gaussians"]) {
    const std::string base = "gaussians[" + std::to_string(idx) + "]";
    Gaussian g;
    if (!jg.is_object())
      throw std::runtime_error("scene: " + base + ": expected object");
    if (!jg.contains("mu"))
      throw std::runtime_error("scene: " + base + ".mu: missing");
    g.mu = vec3_from_json(jg["mu"], base + ".mu");
    if (!jg.contains("log_scale"))
      throw std::runtime_error("scene: " + base + ".log_scale: missing");
    g.log_scale = vec3_from_json(jg["log_scale"], base + ".log_scale");
    if (!jg.contains("q") || !jg["q"].is_array() || jg["q"].size() != 4)
      throw std::runtime_error("scene: " + base + ".q: expected 4-array");
    g.rot = Rotation(jg["q"][0].get<double>(), jg["q"][1].get<double>(),
                     jg["q"][2].get<double>(), jg["q"][3].get<double>());
    if (!jg.contains("opacity_logit") || !jg["opacity_logit"].is_number())
      throw std::runtime_error("scene: " + base + ".opacity_logit: expected number");
    g.opacity_logit = jg["opacity_logit"].get<double>();
    if (!jg.contains("sh") || !jg["sh"].is_array() || jg["sh"].size() != 3)
      throw std::runtime_error("scene: " + base + ".sh: expected 3 channel rows");
    for (int ch = 0; ch < 3; ++ch) {
      const auto& row = jg["sh"][static_cast<std::size_t>(ch)];
      if (!row.is_array() || row.size() != kShCoeffsMax)
        throw std::runtime_error("scene: " + base + ".sh[" + std::to_string(ch) +
                                 "]: expected " + std::to_string(kShCoeffsMax) +
                                 " coefficients");
      for (int m = 0; m < kShCoeffsMax; ++m)
        g.sh(ch, m) = row[static_cast<std::size_t>(m)].get<double>();
    }
    scene.gaussians.push_back(g);
    ++idx;
  }
  return scene;
}

void save_scene(const std::string& path, const GaussianScene& scene) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_scene: cannot open " + path);
  f << scene_to_json(scene);
}

GaussianScene load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_scene: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return scene_from_json(ss.str());
}

}  // namespace gsblur
