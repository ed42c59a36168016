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

#pragma once

// Pinhole camera. Convention: right-handed camera frame with x right, y up,
// looking down -z; image rows grow downward; pixel (u, v) is sampled at its
// center (u + 0.5, v + 0.5). Poses are camera-to-world.

#include <Eigen/Core>

namespace dropfield {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Intrinsics {
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  // Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  // Square pixels, principal point at the image center.
  static Intrinsics from_fov(int width, int height, double horizontal_fov_degrees);

  bool operator==(const Intrinsics&) const = default;
};

struct Pose {
  Mat3 rotation = Mat3::Identity();  // camera-to-world
  Vec3 translation = Vec3::Zero();   // camera center in world coordinates

  void validate(double tolerance = 1e-9) const;
  Vec3 forward() const { return -rotation.col(2); }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3(0.0, 0.0, -1.0);
  double t_near = 0.0;
  double t_far = 1.0;

  Vec3 at(double t) const { return origin + t * direction; }
};

Ray pixel_to_ray(const Intrinsics& intr, const Pose& pose, int u, int v, double t_near,
                 double t_far);

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

// Projects a world point; returns false when it is not in front of the camera.
bool project(const Intrinsics& intr, const Pose& pose, const Vec3& world, double& px, double& py,
             double& depth);

}  // namespace dropfield
