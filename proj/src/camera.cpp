// Copyright 2026 The Dropfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dropfield/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace dropfield {

void Intrinsics::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("intrinsics: image size must be >= 1");
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be > 0");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw std::invalid_argument("intrinsics: principal point outside the image");
  }
}

Intrinsics Intrinsics::from_fov(int width, int height, double horizontal_fov_degrees) {
  const double half = 0.5 * horizontal_fov_degrees * std::numbers::pi / 180.0;
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fx = 0.5 * width / std::tan(half);
  k.fy = k.fx;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.validate();
  return k;
}

void Pose::validate(double tolerance) const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance) throw std::invalid_argument("pose rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tolerance) {
    throw std::invalid_argument("pose rotation has determinant != +1");
  }
  if (!translation.allFinite()) throw std::invalid_argument("pose translation is not finite");
}

Ray pixel_to_ray(const Intrinsics& intr, const Pose& pose, int u, int v, double t_near,
                 double t_far) {
  if (u < 0 || u >= intr.width || v < 0 || v >= intr.height) {
    throw std::invalid_argument("pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                ") outside the image");
  }
  if (!(t_near >= 0.0 && t_near < t_far)) throw std::invalid_argument("ray bounds need 0 <= t_n < t_f");
  const Vec3 camera_dir((u + 0.5 - intr.cx) / intr.fx, -(v + 0.5 - intr.cy) / intr.fy, -1.0);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = (pose.rotation * camera_dir).normalized();
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 to_target = target - eye;
  if (to_target.norm() < 1e-12) throw std::invalid_argument("look_at: eye equals target");
  const Vec3 forward = to_target.normalized();
  const Vec3 side = forward.cross(up);
  if (side.norm() < 1e-9 * std::max(1.0, up.norm())) {
    throw std::invalid_argument("look_at: up is parallel to the viewing direction");
  }
  const Vec3 right = side.normalized();
  const Vec3 true_up = right.cross(forward);
  Pose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = true_up;
  pose.rotation.col(2) = -forward;
  pose.translation = eye;
  return pose;
}

bool project(const Intrinsics& intr, const Pose& pose, const Vec3& world, double& px, double& py,
             double& depth) {
  const Vec3 local = pose.rotation.transpose() * (world - pose.translation);
  depth = -local.z();
  if (depth <= 1e-9) return false;
  px = intr.cx + intr.fx * local.x() / depth;
  py = intr.cy - intr.fy * local.y() / depth;
  return true;
}

}  // namespace dropfield
