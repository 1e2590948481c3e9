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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "semistatic/types.hpp"

namespace semistatic {

struct TsdfCell {
  double value = 0.0;   // clamped signed distance, free side positive
  double weight = 0.0;
  int label = -1;
  double label_weight = 0.0;
};

struct TsdfParams {
  double voxel_size = 0.05;
  double truncation = 0.2;

  bool valid() const { return voxel_size > 0.0 && truncation >= voxel_size; }
};

// Sparse truncated signed distance volume. Cells exist only once integrated,
// so every stored cell has weight > 0 and |value| <= truncation.
class TsdfGrid {
 public:
  using CellMap = std::unordered_map<VoxelKey, TsdfCell, VoxelKeyHash>;

  TsdfGrid(double voxel_size, double truncation,
           const Eigen::Vector3d& origin = Eigen::Vector3d::Zero())
      : origin_(origin), voxel_size_(voxel_size), truncation_(truncation) {
    if (!TsdfParams{voxel_size, truncation}.valid()) {
      throw std::invalid_argument("TsdfGrid: need voxel_size > 0 and truncation >= voxel_size");
    }
  }

  explicit TsdfGrid(const TsdfParams& params,
                    const Eigen::Vector3d& origin = Eigen::Vector3d::Zero())
      : TsdfGrid(params.voxel_size, params.truncation, origin) {}

  double voxel_size() const { return voxel_size_; }
  double truncation() const { return truncation_; }
  const Eigen::Vector3d& origin() const { return origin_; }
  const CellMap& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  VoxelKey voxel_of(const Eigen::Vector3d& p) const {
    return point_to_voxel(p, voxel_size_, origin_);
  }

  Eigen::Vector3d center_of(const VoxelKey& k) const {
    return voxel_center(k, voxel_size_, origin_);
  }

  const TsdfCell* find(const VoxelKey& k) const {
    const auto it = cells_.find(k);
    return it == cells_.end() ? nullptr : &it->second;
  }

  /// Projective integration of a labeled cloud seen from `camera_origin`.
  /// Each point updates the voxels its viewing ray traverses within
  /// +-truncation of the hit; an empty cloud is a no-op. Touched voxel
  /// indices are accumulated into `touched` when given.
  void integrate_cloud(const LabeledCloud& cloud, const Eigen::Vector3d& camera_origin,
                       VoxelSet* touched = nullptr) {
    for (std::size_t n = 0; n < cloud.size(); ++n) {
      integrate_ray(camera_origin, cloud.pts[n], cloud.labels[n], touched);
    }
  }

  void clear_voxels(const VoxelSet& footprint) {
    for (const auto& k : footprint) cells_.erase(k);
  }

  /// Surface voxels: weight strictly above `min_weight` and |value| within
  /// `surface_band`.
  VoxelSet export_occupied(double surface_band, double min_weight = 0.0) const {
    if (surface_band <= 0.0) throw std::invalid_argument("export_occupied: surface_band must be > 0");
    VoxelSet out;
    for (const auto& [k, c] : cells_) {
      if (c.weight > min_weight && std::abs(c.value) <= surface_band) out.insert(k);
    }
    return out;
  }

  std::vector<VoxelKey> sorted_keys() const {
    std::vector<VoxelKey> keys;
    keys.reserve(cells_.size());
    for (const auto& [k, c] : cells_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

 private:
  void integrate_ray(const Eigen::Vector3d& o, const Eigen::Vector3d& p, int label,
                     VoxelSet* touched) {
    const Eigen::Vector3d delta = p - o;
    const double depth = delta.norm();
    if (depth < 1e-9) return;
    const Eigen::Vector3d dir = delta / depth;
    const double t0 = std::max(depth - truncation_, 1e-9);
    const double t1 = depth + truncation_;
    walk_segment(o + t0 * dir, o + t1 * dir, [&](const VoxelKey& k) {
      const double sdf = std::clamp(depth - (center_of(k) - o).norm(), -truncation_, truncation_);
      TsdfCell& c = cells_[k];
      c.value = (c.value * c.weight + sdf) / (c.weight + 1.0);
      c.weight += 1.0;
      if (label == c.label) {
        c.label_weight += 1.0;
      } else {
        c.label_weight -= 1.0;
        if (c.label_weight < 0.0) {
          c.label = label;
          c.label_weight = 1.0;
        }
      }
      if (touched) touched->insert(k);
    });
  }

  // Amanatides-Woo traversal from a to b, visiting every voxel the segment
  // passes through (including both endpoints' voxels).
  template <typename Visit>
  void walk_segment(const Eigen::Vector3d& a, const Eigen::Vector3d& b, Visit&& visit) const {
    VoxelKey cur = voxel_of(a);
    const VoxelKey end = voxel_of(b);
    const Eigen::Vector3d d = b - a;
    const double len = d.norm();
    if (len < 1e-12) {
      visit(cur);
      return;
    }
    const Eigen::Vector3d dir = d / len;

    std::int32_t* cur_ijk[3] = {&cur.i, &cur.j, &cur.k};
    int step[3];
    double t_max[3], t_delta[3];
    for (int ax = 0; ax < 3; ++ax) {
      if (dir[ax] > 1e-15) {
        step[ax] = 1;
        const double boundary = origin_[ax] + (static_cast<double>(*cur_ijk[ax]) + 1.0) * voxel_size_;
        t_max[ax] = (boundary - a[ax]) / dir[ax];
        t_delta[ax] = voxel_size_ / dir[ax];
      } else if (dir[ax] < -1e-15) {
        step[ax] = -1;
        const double boundary = origin_[ax] + static_cast<double>(*cur_ijk[ax]) * voxel_size_;
        t_max[ax] = (boundary - a[ax]) / dir[ax];
        t_delta[ax] = -voxel_size_ / dir[ax];
      } else {
        step[ax] = 0;
        t_max[ax] = std::numeric_limits<double>::infinity();
        t_delta[ax] = std::numeric_limits<double>::infinity();
      }
    }

    const int max_steps = 4 + 3 * (static_cast<int>(len / voxel_size_) + 2);
    for (int n = 0; n < max_steps; ++n) {
      visit(cur);
      if (cur == end) return;
      int ax = 0;
      if (t_max[1] < t_max[ax]) ax = 1;
      if (t_max[2] < t_max[ax]) ax = 2;
      if (t_max[ax] > len) return;  // segment exhausted
      *cur_ijk[ax] += step[ax];
      t_max[ax] += t_delta[ax];
    }
  }

  Eigen::Vector3d origin_;
  double voxel_size_;
  double truncation_;
  CellMap cells_;
};

/// Builds a TSDF around a camera-frame cloud by ray tracing from the optical
/// center at the origin. Throws on an empty cloud.
inline TsdfGrid build_local_tsdf(const LabeledCloud& cloud_cam, const TsdfParams& params) {
  if (cloud_cam.empty()) throw std::invalid_argument("build_local_tsdf: empty observation");
  TsdfGrid grid(params);
  grid.integrate_cloud(cloud_cam, Eigen::Vector3d::Zero());
  return grid;
}

/// Mean absolute TSDF difference over the voxels both grids carry, scaled by
/// lambda_diff and signed by the camera-frame z offset of the aligned pair.
/// Empty overlap means the grids share no evidence: nullopt.
inline std::optional<double> tsdf_change(const TsdfGrid& tsdf_obs, const TsdfGrid& tsdf_obj,
                                         double p_z_camera, double lambda_diff) {
  if (tsdf_obs.voxel_size() != tsdf_obj.voxel_size() ||
      tsdf_obs.truncation() != tsdf_obj.truncation() ||
      tsdf_obs.origin() != tsdf_obj.origin()) {
    throw std::invalid_argument("tsdf_change: grids must share voxel_size, truncation and frame");
  }
  const TsdfGrid& small = tsdf_obs.size() <= tsdf_obj.size() ? tsdf_obs : tsdf_obj;
  const TsdfGrid& large = tsdf_obs.size() <= tsdf_obj.size() ? tsdf_obj : tsdf_obs;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [k, c] : small.cells()) {
    const TsdfCell* other = large.find(k);
    if (!other) continue;
    sum += std::abs(c.value - other->value);
    ++count;
  }
  if (count == 0) return std::nullopt;
  const double sign = p_z_camera >= 0.0 ? 1.0 : -1.0;
  return sign * lambda_diff * sum / static_cast<double>(count);
}

/// One line per surface voxel: "i j k x y z" (indices, then world center).
inline void write_occupancy_text(const TsdfGrid& grid, const VoxelSet& occupied,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<VoxelKey> keys(occupied.begin(), occupied.end());
  std::sort(keys.begin(), keys.end());
  char line[160];
  for (const auto& k : keys) {
    const Eigen::Vector3d c = grid.center_of(k);
    std::snprintf(line, sizeof(line), "%d %d %d %.6f %.6f %.6f\n", k.i, k.j, k.k, c.x(), c.y(),
                  c.z());
    out << line;
  }
}

/// ASCII PLY point export of surface voxel centers, for visual inspection.
inline void write_ply(const TsdfGrid& grid, const VoxelSet& occupied, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<VoxelKey> keys(occupied.begin(), occupied.end());
  std::sort(keys.begin(), keys.end());
  out << "ply\nformat ascii 1.0\nelement vertex " << keys.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char line[96];
  for (const auto& k : keys) {
    const Eigen::Vector3d c = grid.center_of(k);
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", c.x(), c.y(), c.z());
    out << line;
  }
}

}  // namespace semistatic
