/*
 * Copyright 2026 The Semistatic Mapping Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_set>
#include <vector>

namespace semistatic {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Wraps a heading to (-pi/2, pi/2]. Headings from a principal axis are only
/// defined modulo pi.
inline double wrap_heading(double a) {
  a = std::fmod(a, kPi);
  if (a <= -kPi / 2.0) a += kPi;
  if (a > kPi / 2.0) a -= kPi;
  return a;
}

/// Rigid transform stored as translation + unit quaternion. For 4-DoF object
/// poses the quaternion is a pure yaw rotation.
struct Pose {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();

  static Pose from_yaw(const Eigen::Vector3d& translation, double yaw) {
    Pose out;
    out.p = translation;
    out.q = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    return out;
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return q * v + p; }

  Pose inverse() const {
    Pose out;
    out.q = q.conjugate();
    out.p = -(out.q * p);
    return out;
  }

  double yaw() const {
    const Eigen::Matrix3d r = q.toRotationMatrix();
    return std::atan2(r(1, 0), r(0, 0));
  }

  Eigen::Isometry3d matrix() const {
    Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
    m.linear() = q.toRotationMatrix();
    m.translation() = p;
    return m;
  }
};

/// Pinhole camera with a hard range cut-off.
struct CameraModel {
  double fx = 160.0, fy = 160.0, cx = 160.0, cy = 90.0;
  int width = 320, height = 180;
  double max_range = 8.0;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && max_range > 0;
  }

  /// True if a camera-frame point projects inside the image with
  /// 0 < depth <= max_range.
  bool in_frustum(const Eigen::Vector3d& p_cam) const {
    if (p_cam.z() <= 0.0 || p_cam.z() > max_range) return false;
    const double u = fx * p_cam.x() / p_cam.z() + cx;
    const double v = fy * p_cam.y() / p_cam.z() + cy;
    return u >= 0.0 && u < width && v >= 0.0 && v < height;
  }

  /// Unit ray through the center of pixel (u, v), camera frame (z forward).
  Eigen::Vector3d pixel_ray(int u, int v) const {
    Eigen::Vector3d d((u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0);
    return d.normalized();
  }
};

/// Point cloud with one semantic label per point.
struct LabeledCloud {
  std::vector<Eigen::Vector3d> pts;
  std::vector<int> labels;

  std::size_t size() const { return pts.size(); }
  bool empty() const { return pts.empty(); }

  void reserve(std::size_t n) {
    pts.reserve(n);
    labels.reserve(n);
  }

  void push_back(const Eigen::Vector3d& p, int label) {
    pts.push_back(p);
    labels.push_back(label);
  }

  void append(const LabeledCloud& other) {
    pts.insert(pts.end(), other.pts.begin(), other.pts.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  }

  LabeledCloud transformed(const Pose& t) const {
    LabeledCloud out;
    out.reserve(size());
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back(t * pts[i], labels[i]);
    return out;
  }

  Eigen::Vector3d centroid() const {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : pts) c += p;
    return pts.empty() ? c : Eigen::Vector3d(c / static_cast<double>(pts.size()));
  }
};

/// z-axis aligned cuboid: full widths along its own axes, yaw heading about z.
struct BoundingBox4DoF {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d extents = Eigen::Vector3d::Ones();
  double heading = 0.0;

  bool contains(const Eigen::Vector3d& p, double eps = 0.0) const {
    const Eigen::Vector3d d = p - center;
    const double c = std::cos(heading), s = std::sin(heading);
    const double lx = c * d.x() + s * d.y();
    const double ly = -s * d.x() + c * d.y();
    return std::abs(lx) <= extents.x() / 2.0 + eps &&
           std::abs(ly) <= extents.y() / 2.0 + eps &&
           std::abs(d.z()) <= extents.z() / 2.0 + eps;
  }

  /// xy corners in world coordinates, counter-clockwise.
  std::array<Eigen::Vector2d, 4> corners_xy() const {
    const double c = std::cos(heading), s = std::sin(heading);
    const double hx = extents.x() / 2.0, hy = extents.y() / 2.0;
    std::array<Eigen::Vector2d, 4> out;
    const std::array<Eigen::Vector2d, 4> local = {
        Eigen::Vector2d(hx, hy), Eigen::Vector2d(-hx, hy),
        Eigen::Vector2d(-hx, -hy), Eigen::Vector2d(hx, -hy)};
    for (int i = 0; i < 4; ++i) {
      out[i] = Eigen::Vector2d(center.x() + c * local[i].x() - s * local[i].y(),
                               center.y() + s * local[i].x() + c * local[i].y());
    }
    return out;
  }

  bool overlaps(const BoundingBox4DoF& other) const {
    const double za0 = center.z() - extents.z() / 2.0, za1 = center.z() + extents.z() / 2.0;
    const double zb0 = other.center.z() - other.extents.z() / 2.0;
    const double zb1 = other.center.z() + other.extents.z() / 2.0;
    if (za1 < zb0 || zb1 < za0) return false;
    // Separating axis test over both rectangles' edge normals.
    const auto ca = corners_xy();
    const auto cb = other.corners_xy();
    const auto separated_on = [&](const Eigen::Vector2d& axis) {
      double amin = std::numeric_limits<double>::infinity(), amax = -amin;
      double bmin = amin, bmax = amax;
      for (const auto& p : ca) {
        const double d = axis.dot(p);
        amin = std::min(amin, d);
        amax = std::max(amax, d);
      }
      for (const auto& p : cb) {
        const double d = axis.dot(p);
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
      }
      return amax < bmin || bmax < amin;
    };
    for (const auto& boxes : {ca, cb}) {
      for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d e = boxes[(i + 1) % 4] - boxes[i];
        if (separated_on(Eigen::Vector2d(-e.y(), e.x()))) return false;
      }
    }
    return true;
  }
};

struct VoxelKey {
  std::int32_t i = 0, j = 0, k = 0;
  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& v) const {
    std::size_t h = static_cast<std::size_t>(static_cast<std::uint32_t>(v.i)) * 73856093u;
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v.j)) * 19349663u;
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v.k)) * 83492791u;
    return h;
  }
};

using VoxelSet = std::unordered_set<VoxelKey, VoxelKeyHash>;

inline VoxelKey point_to_voxel(const Eigen::Vector3d& p, double voxel_size,
                               const Eigen::Vector3d& origin = Eigen::Vector3d::Zero()) {
  return VoxelKey{static_cast<std::int32_t>(std::floor((p.x() - origin.x()) / voxel_size)),
                  static_cast<std::int32_t>(std::floor((p.y() - origin.y()) / voxel_size)),
                  static_cast<std::int32_t>(std::floor((p.z() - origin.z()) / voxel_size))};
}

inline Eigen::Vector3d voxel_center(const VoxelKey& k, double voxel_size,
                                    const Eigen::Vector3d& origin = Eigen::Vector3d::Zero()) {
  return origin + voxel_size * Eigen::Vector3d(k.i + 0.5, k.j + 0.5, k.k + 0.5);
}

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d max = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());

  bool valid() const { return (min.array() <= max.array()).all(); }

  void expand(const Eigen::Vector3d& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void inflate(double pad) {
    min.array() -= pad;
    max.array() += pad;
  }
};

}  // namespace semistatic
