#pragma once

#include <json.hpp>

#include "gsblur/camera.hpp"
#include "gsblur/lie.hpp"

namespace gsblur {

// Pose wire format: {"q": [w,x,y,z], "t": [x,y,z]}, quaternion canonicalized
// to w >= 0.
inline nlohmann::json pose_to_json(const PoseSE3& p) {
  const auto q = p.rotation.canonical();
  return nlohmann::json{
      {"q", {q.w(), q.x(), q.y(), q.z()}},
      {"t", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

inline PoseSE3 pose_from_json(const nlohmann::json& j) {
  const auto& q = j.at("q");
  const auto& t = j.at("t");
  if (!q.is_array() || q.size() != 4)
    throw std::invalid_argument("pose: field 'q' must be a 4-array");
  if (!t.is_array() || t.size() != 3)
    throw std::invalid_argument("pose: field 't' must be a 3-array");
  return PoseSE3(
      Rotation(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
               q[3].get<double>()),
      Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

inline nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return nlohmann::json{{"fx", k.fx},       {"fy", k.fy},
                        {"cx", k.cx},       {"cy", k.cy},
                        {"width", k.width}, {"height", k.height},
                        {"near", k.near_clip}, {"far", k.far_clip}};
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.near_clip = j.at("near").get<double>();
  k.far_clip = j.at("far").get<double>();
  k.validate();
  return k;
}

}  // namespace gsblur
