#pragma once

// SO(3)/SE(3) group operations and geodesic pose interpolation.
//
// Conventions:
//  * Rotations are stored as unit quaternions (scalar-first), renormalized
//    after every composition.
//  * Tangent vectors are ordered [omega; nu] (rotation first).
//  * Perturbations are left-multiplied: T(eps) = exp(eps) * T.
//  * Canonical log range is (-pi, pi]; rotations at exactly pi are valid but
//    the returned axis is one of the two equivalent choices, flagged through
//    the optional `degenerate` out-parameter.
//
// Small-angle branches for exp/log switch at 1e-6 with 4th-order Taylor
// expansions. The Jacobian formulas contain differences like
// 1 - theta*sin/(2(1-cos)) whose closed forms cancel catastrophically for
// small theta (error ~eps/theta^2), so their Taylor branches extend to
// theta < 1e-2, where the three-term series are still accurate to ~1e-17.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace gsblur {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kSmallAngle = 1e-6;
// Wider branch for the Jacobian coefficient formulas (see header comment).
inline constexpr double kJacobianSmallAngle = 1e-2;
inline constexpr double kPi = 3.14159265358979323846;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// ---------------------------------------------------------------------------
// Rotation
// ---------------------------------------------------------------------------

class Rotation {
 public:
  Rotation() : q_(1, 0, 0, 0) {}
  // w, x, y, z; normalized on construction.
  Rotation(double w, double x, double y, double z) : q_(w, x, y, z) {
    q_.normalize();
  }
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  explicit Rotation(const Mat3& m) : q_(m) { q_.normalize(); }

  const Eigen::Quaterniond& quat() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rotation operator*(const Rotation& rhs) const {
    return Rotation(q_ * rhs.q_);  // renormalizes
  }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  // Double-cover canonical form (w >= 0), used for serialization.
  Eigen::Quaterniond canonical() const {
    return q_.w() < 0 ? Eigen::Quaterniond(-q_.w(), -q_.x(), -q_.y(), -q_.z())
                      : q_;
  }

  bool approx_equal(const Rotation& o, double tol = 1e-9) const {
    return std::abs(std::abs(q_.dot(o.q_)) - 1.0) < tol;
  }

 private:
  Eigen::Quaterniond q_;
};

// ---------------------------------------------------------------------------
// SO(3) exp / log
// ---------------------------------------------------------------------------

inline Rotation so3_exp(const Vec3& omega) {
  if (!omega.allFinite()) throw std::invalid_argument("so3_exp: non-finite tangent");
  const double t2 = omega.squaredNorm();
  const double theta = std::sqrt(t2);
  double w, k;  // q = (w, k * omega)
  if (theta < kSmallAngle) {
    // cos(t/2), sin(t/2)/t to 4th order
    w = 1.0 - t2 / 8.0 + t2 * t2 / 384.0;
    k = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  return Rotation(w, k * omega.x(), k * omega.y(), k * omega.z());
}

inline Vec3 so3_log(const Rotation& r, bool* degenerate = nullptr) {
  Eigen::Quaterniond q = r.canonical();  // w >= 0 => principal branch
  const Vec3 v(q.x(), q.y(), q.z());
  const double s = v.norm();
  const double w = q.w();
  if (degenerate) *degenerate = (w < 1e-9);
  double f;
  if (s < kSmallAngle) {
    // 2*atan2(s, w)/s with w ~= 1
    f = (2.0 - 2.0 * s * s / (3.0 * w * w)) / w;
  } else {
    f = 2.0 * std::atan2(s, w) / s;
  }
  return f * v;
}

// SO(3) left Jacobian (= the V matrix coupling rotation into translation).
inline Mat3 so3_left_jacobian(const Vec3& omega) {
  const double t2 = omega.squaredNorm();
  const double theta = std::sqrt(t2);
  double a, b;  // V = I + a*skew + b*skew^2
  if (theta < kJacobianSmallAngle) {
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Mat3 s = skew(omega);
  return Mat3::Identity() + a * s + b * s * s;
}

inline Mat3 so3_left_jacobian_inv(const Vec3& omega) {
  const double t2 = omega.squaredNorm();
  const double theta = std::sqrt(t2);
  double b;  // V^-1 = I - skew/2 + b*skew^2
  if (theta < kJacobianSmallAngle) {
    b = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    b = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / t2;
  }
  const Mat3 s = skew(omega);
  return Mat3::Identity() - 0.5 * s + b * s * s;
}

// ---------------------------------------------------------------------------
// SE(3)
// ---------------------------------------------------------------------------

struct TangentSE3 {
  Vec3 omega = Vec3::Zero();  // rotation, radians
  Vec3 nu = Vec3::Zero();     // translation, scene units

  TangentSE3() = default;
  TangentSE3(const Vec3& w, const Vec3& v) : omega(w), nu(v) {}
  explicit TangentSE3(const Vec6& x) : omega(x.head<3>()), nu(x.tail<3>()) {}

  Vec6 vec() const {
    Vec6 x;
    x << omega, nu;
    return x;
  }
  double norm() const { return vec().norm(); }
};

struct PoseSE3 {
  Rotation rotation;              // camera-to-world
  Vec3 translation = Vec3::Zero();

  PoseSE3() = default;
  PoseSE3(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static PoseSE3 identity() { return PoseSE3(); }

  PoseSE3 operator*(const PoseSE3& rhs) const {
    return PoseSE3(rotation * rhs.rotation,
                   rotation * rhs.translation + translation);
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  PoseSE3 inverse() const {
    const Rotation rinv = rotation.inverse();
    return PoseSE3(rinv, -(rinv * translation));
  }

  // Adjoint for [omega; nu] ordering: Adj = [[R, 0], [skew(t)R, R]].
  Mat6 adjoint() const {
    const Mat3 r = rotation.matrix();
    Mat6 a = Mat6::Zero();
    a.topLeftCorner<3, 3>() = r;
    a.bottomRightCorner<3, 3>() = r;
    a.bottomLeftCorner<3, 3>() = skew(translation) * r;
    return a;
  }
};

inline PoseSE3 se3_exp(const TangentSE3& xi) {
  return PoseSE3(so3_exp(xi.omega), so3_left_jacobian(xi.omega) * xi.nu);
}

inline TangentSE3 se3_log(const PoseSE3& t, bool* degenerate = nullptr) {
  const Vec3 omega = so3_log(t.rotation, degenerate);
  return TangentSE3(omega, so3_left_jacobian_inv(omega) * t.translation);
}

// SE(3) left Jacobian: [[J, 0], [Q, J]] with Barfoot's Q matrix.
inline Mat6 se3_left_jacobian(const TangentSE3& xi) {
  const double t2 = xi.omega.squaredNorm();
  const double theta = std::sqrt(t2);
  double c1, c2, c3;
  if (theta < kJacobianSmallAngle) {
    c1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double st = std::sin(theta), ct = std::cos(theta);
    c1 = (theta - st) / (t2 * theta);
    c2 = (t2 + 2.0 * ct - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * st + theta * ct) / (2.0 * t2 * t2 * theta);
  }
  const Mat3 w = skew(xi.omega);
  const Mat3 p = skew(xi.nu);
  const Mat3 q = 0.5 * p + c1 * (w * p + p * w + w * p * w) +
                 c2 * (w * w * p + p * w * w - 3.0 * w * p * w) +
                 c3 * (w * p * w * w + w * w * p * w);
  const Mat3 j = so3_left_jacobian(xi.omega);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = j;
  out.bottomRightCorner<3, 3>() = j;
  out.bottomLeftCorner<3, 3>() = q;
  return out;
}

inline Mat6 se3_left_jacobian_inv(const TangentSE3& xi) {
  const Mat6 jl = se3_left_jacobian(xi);
  const Mat3 jinv = so3_left_jacobian_inv(xi.omega);
  const Mat3 q = jl.bottomLeftCorner<3, 3>();
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.bottomLeftCorner<3, 3>() = -jinv * q * jinv;
  return out;
}

// ---------------------------------------------------------------------------
// Geodesic interpolation
// ---------------------------------------------------------------------------

enum class InterpMode {
  kCoupled,    // full SE(3) exp/log (default)
  kDecoupled,  // SO(3) geodesic + linear translation
};

// T_start * exp(u * log(T_start^-1 * T_end)); u in [0,1], minor
// extrapolation up to [-0.2, 1.2] allowed for exploration.
inline PoseSE3 interpolate_pose(const PoseSE3& t_start, const PoseSE3& t_end,
                                double u, bool* degenerate = nullptr,
                                InterpMode mode = InterpMode::kCoupled) {
  const PoseSE3 rel = t_start.inverse() * t_end;
  if (mode == InterpMode::kCoupled) {
    const TangentSE3 delta = se3_log(rel, degenerate);
    return t_start * se3_exp(TangentSE3(u * delta.omega, u * delta.nu));
  }
  const Vec3 omega = so3_log(rel.rotation, degenerate);
  const Rotation r = t_start.rotation * so3_exp(u * omega);
  const Vec3 t = (1.0 - u) * t_start.translation + u * t_end.translation;
  return PoseSE3(r, t);
}

// Jacobians of the left tangent at the interpolated pose with respect to
// left perturbations of the endpoints:
//   d interp / d eps_end   = Adj(T_s) * u * Jl(u*Delta) * Jl(Delta)^-1 * Adj(T_s)^-1
//   d interp / d eps_start = I - (the above)
// For the decoupled mode the map is evaluated by central differences on the
// interpolation itself (poses only, no renders involved).
struct InterpJacobians {
  Mat6 d_start;
  Mat6 d_end;
};

inline InterpJacobians interpolate_pose_jacobians(
    const PoseSE3& t_start, const PoseSE3& t_end, double u,
    InterpMode mode = InterpMode::kCoupled) {
  InterpJacobians out;
  if (mode == InterpMode::kCoupled) {
    const TangentSE3 delta = se3_log(t_start.inverse() * t_end);
    const TangentSE3 udelta(u * delta.omega, u * delta.nu);
    const Mat6 adj = t_start.adjoint();
    const Mat6 adj_inv = t_start.inverse().adjoint();
    out.d_end = adj * (u * se3_left_jacobian(udelta)) *
                se3_left_jacobian_inv(delta) * adj_inv;
    out.d_start = Mat6::Identity() - out.d_end;
    return out;
  }
  // Numeric fallback for the decoupled variant.
  const double h = 1e-6;
  const PoseSE3 base = interpolate_pose(t_start, t_end, u, nullptr, mode);
  const PoseSE3 base_inv = base.inverse();
  for (int k = 0; k < 6; ++k) {
    Vec6 e = Vec6::Zero();
    e[k] = h;
    const PoseSE3 dp = se3_exp(TangentSE3(e));
    const PoseSE3 dm = se3_exp(TangentSE3(Vec6(-e)));
    auto col = [&](const PoseSE3& a, const PoseSE3& b) {
      const Vec6 lp = se3_log(interpolate_pose(a, b, u, nullptr, mode) * base_inv).vec();
      return lp;
    };
    out.d_start.col(k) =
        (col(dp * t_start, t_end) - col(dm * t_start, t_end)) / (2.0 * h);
    out.d_end.col(k) =
        (col(t_start, dp * t_end) - col(t_start, dm * t_end)) / (2.0 * h);
  }
  return out;
}

// Geodesic distance used for candidate de-duplication and nearest-reference
// lookup: norm of the relative log, with translation in scene units.
inline double pose_distance(const PoseSE3& a, const PoseSE3& b) {
  return se3_log(a.inverse() * b).norm();
}

}  // namespace gsblur
