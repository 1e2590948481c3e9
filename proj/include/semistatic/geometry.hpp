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

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "semistatic/kdtree.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

struct ClassInfo {
  std::string name;
  int stationarity = 1;  // 0 dynamic, 1 static
  double v_class = 0.9;  // initial stationarity expectation
};

using ClassTable = std::map<int, ClassInfo>;

inline ClassTable default_class_table() {
  return ClassTable{{0, {"ground", 1, 0.9}},
                    {1, {"box", 1, 0.9}},
                    {2, {"fence", 1, 0.9}},
                    {3, {"shelf", 1, 0.9}},
                    {4, {"robot", 0, 0.45}}};
}

inline int stationarity_class(int semantic_class, const ClassTable& table) {
  const auto it = table.find(semantic_class);
  if (it == table.end()) {
    throw std::out_of_range("unknown semantic class " + std::to_string(semantic_class));
  }
  return it->second.stationarity;
}

inline double class_v_prior(int semantic_class, const ClassTable& table) {
  const auto it = table.find(semantic_class);
  if (it == table.end()) {
    throw std::out_of_range("unknown semantic class " + std::to_string(semantic_class));
  }
  return it->second.v_class;
}

struct GeometryConfig {
  double ground_band = 0.08;       // half-thickness of the removed ground slab
  bool ransac_ground = false;      // fit the ground instead of assuming z = 0
  int outlier_knn = 10;
  double outlier_stddev_mult = 2.0;
  double plane_inlier_dist = 0.04;
  int min_plane_points = 120;
  int max_planes = 8;
  int ransac_iters = 120;
  unsigned ransac_seed = 7;        // fixed so replays are reproducible
  double cluster_radius = 0.25;
  int cluster_min_points = 60;
};

/// Grid downsampling to one centroid per `leaf` cell; cell label by majority
/// vote, ties to the lowest class id.
inline LabeledCloud voxel_downsample(const LabeledCloud& cloud, double leaf) {
  struct Accum {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int count = 0;
    std::map<int, int> label_counts;
  };
  std::map<VoxelKey, Accum> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Accum& a = cells[point_to_voxel(cloud.pts[i], leaf)];
    a.sum += cloud.pts[i];
    a.count += 1;
    a.label_counts[cloud.labels[i]] += 1;
  }
  LabeledCloud out;
  out.reserve(cells.size());
  for (const auto& [key, a] : cells) {
    int best_label = a.label_counts.begin()->first;
    int best_count = a.label_counts.begin()->second;
    for (const auto& [label, count] : a.label_counts) {
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    }
    out.push_back(a.sum / static_cast<double>(a.count), best_label);
  }
  return out;
}

namespace detail {

struct PlaneFit {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double d = 0.0;  // plane: normal . p + d = 0
  std::vector<int> inliers;
};

/// RANSAC plane over the subset `active` of the cloud.
inline PlaneFit ransac_plane(const std::vector<Eigen::Vector3d>& pts,
                             const std::vector<int>& active, double inlier_dist, int iters,
                             std::mt19937& rng) {
  PlaneFit best;
  if (active.size() < 3) return best;
  std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
  for (int it = 0; it < iters; ++it) {
    const int i0 = active[pick(rng)], i1 = active[pick(rng)], i2 = active[pick(rng)];
    if (i0 == i1 || i1 == i2 || i0 == i2) continue;
    const Eigen::Vector3d n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]);
    if (n.norm() < 1e-12) continue;
    const Eigen::Vector3d normal = n.normalized();
    const double d = -normal.dot(pts[i0]);
    std::vector<int> inliers;
    for (int idx : active) {
      if (std::abs(normal.dot(pts[idx]) + d) <= inlier_dist) inliers.push_back(idx);
    }
    if (inliers.size() > best.inliers.size()) {
      best.normal = normal;
      best.d = d;
      best.inliers = std::move(inliers);
    }
  }
  return best;
}

inline int modal_label(const std::vector<int>& labels, const std::vector<int>& subset) {
  std::map<int, int> counts;
  for (int idx : subset) counts[labels[idx]] += 1;
  int best = counts.begin()->first, best_count = counts.begin()->second;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {  // ties keep the lowest id
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace detail

/// Drops points in the ground slab and statistical outliers (k-NN mean
/// distance test). The ground plane is z = 0 unless ransac_ground is set, in
/// which case a near-horizontal dominant plane is fitted first.
inline LabeledCloud remove_ground_and_outliers(const LabeledCloud& cloud,
                                               const GeometryConfig& cfg) {
  LabeledCloud kept;
  kept.reserve(cloud.size());
  if (cfg.ransac_ground && cloud.size() >= 3) {
    std::vector<int> active(cloud.size());
    std::iota(active.begin(), active.end(), 0);
    std::mt19937 rng(cfg.ransac_seed);
    const auto plane = detail::ransac_plane(cloud.pts, active, cfg.ground_band,
                                            cfg.ransac_iters, rng);
    if (std::abs(plane.normal.z()) > 0.9 &&
        plane.inliers.size() >= static_cast<std::size_t>(cfg.min_plane_points)) {
      std::vector<char> is_ground(cloud.size(), 0);
      for (int idx : plane.inliers) is_ground[idx] = 1;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!is_ground[i]) kept.push_back(cloud.pts[i], cloud.labels[i]);
      }
    } else {
      kept = cloud;
    }
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (std::abs(cloud.pts[i].z()) > cfg.ground_band) {
        kept.push_back(cloud.pts[i], cloud.labels[i]);
      }
    }
  }

  if (kept.size() <= static_cast<std::size_t>(cfg.outlier_knn) + 1) return kept;

  const KdTree3 tree(kept.pts);
  std::vector<double> mean_dist(kept.size(), 0.0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto nbrs = tree.knn(kept.pts[i], cfg.outlier_knn + 1);  // includes self
    double sum = 0.0;
    int n = 0;
    for (int idx : nbrs) {
      if (static_cast<std::size_t>(idx) == i) continue;
      sum += (kept.pts[idx] - kept.pts[i]).norm();
      ++n;
    }
    mean_dist[i] = n > 0 ? sum / n : 0.0;
  }
  const double mean = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / kept.size();
  double var = 0.0;
  for (double d : mean_dist) var += (d - mean) * (d - mean);
  var /= kept.size();
  const double cutoff = mean + cfg.outlier_stddev_mult * std::sqrt(var);

  LabeledCloud out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (mean_dist[i] <= cutoff) out.push_back(kept.pts[i], kept.labels[i]);
  }
  return out;
}

/// Extracts planes one by one and replaces every label inside a plane's
/// inlier set with the modal label there. Non-planar points keep their
/// labels. Ties go to the lowest class id.
inline LabeledCloud enforce_plane_semantics(const LabeledCloud& cloud,
                                            const GeometryConfig& cfg) {
  LabeledCloud out = cloud;
  if (cloud.size() < static_cast<std::size_t>(cfg.min_plane_points)) return out;
  std::vector<int> active(cloud.size());
  std::iota(active.begin(), active.end(), 0);
  std::mt19937 rng(cfg.ransac_seed);
  for (int round = 0; round < cfg.max_planes; ++round) {
    if (active.size() < static_cast<std::size_t>(cfg.min_plane_points)) break;
    const auto plane =
        detail::ransac_plane(out.pts, active, cfg.plane_inlier_dist, cfg.ransac_iters, rng);
    if (plane.inliers.size() < static_cast<std::size_t>(cfg.min_plane_points)) break;
    const int label = detail::modal_label(out.labels, plane.inliers);
    std::vector<char> used(out.size(), 0);
    for (int idx : plane.inliers) {
      out.labels[idx] = label;
      used[idx] = 1;
    }
    std::vector<int> remaining;
    remaining.reserve(active.size() - plane.inliers.size());
    for (int idx : active) {
      if (!used[idx]) remaining.push_back(idx);
    }
    active = std::move(remaining);
  }
  return out;
}

/// Connected components of the radius-neighbor graph restricted to same-label
/// edges. Components below min_points are dropped; surviving clusters keep
/// the input point order and are emitted by their first point index.
inline std::vector<LabeledCloud> euclidean_cluster(const LabeledCloud& cloud,
                                                   const GeometryConfig& cfg) {
  std::vector<LabeledCloud> clusters;
  if (cloud.empty()) return clusters;
  if (cfg.cluster_radius <= 0.0) throw std::invalid_argument("cluster_radius must be > 0");

  const double cell = cfg.cluster_radius;
  std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> grid;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    grid[point_to_voxel(cloud.pts[i], cell)].push_back(static_cast<int>(i));
  }

  std::vector<int> parent(cloud.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const auto merge = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  const double r_sq = cfg.cluster_radius * cfg.cluster_radius;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const VoxelKey base = point_to_voxel(cloud.pts[i], cell);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk) {
          const auto it = grid.find(VoxelKey{base.i + di, base.j + dj, base.k + dk});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j <= static_cast<int>(i)) continue;
            if (cloud.labels[i] != cloud.labels[j]) continue;
            if ((cloud.pts[i] - cloud.pts[j]).squaredNorm() <= r_sq) merge(static_cast<int>(i), j);
          }
        }
      }
    }
  }

  std::map<int, std::vector<int>> components;  // root -> member indices (sorted)
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    components[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  }
  for (const auto& [root, members] : components) {
    if (members.size() < static_cast<std::size_t>(cfg.cluster_min_points)) continue;
    LabeledCloud c;
    c.reserve(members.size());
    for (int idx : members) c.push_back(cloud.pts[idx], cloud.labels[idx]);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

/// PCA box fit on the z-flattened cluster. Heading is the first principal
/// axis wrapped to (-pi/2, pi/2]; a collinear cluster falls back to an
/// axis-aligned box with zero heading.
inline BoundingBox4DoF fit_bbox_pca(const LabeledCloud& cluster) {
  if (cluster.empty()) throw std::invalid_argument("fit_bbox_pca: empty cluster");
  const std::size_t n = cluster.size();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : cluster.pts) mean += p.head<2>();
  mean /= static_cast<double>(n);

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : cluster.pts) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  double heading = 0.0;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double l_small = eig.eigenvalues()(0), l_large = eig.eigenvalues()(1);
  const bool degenerate = n < 3 || l_small <= 1e-10 * std::max(l_large, 1e-12);
  if (!degenerate) {
    const Eigen::Vector2d major = eig.eigenvectors().col(1);
    heading = wrap_heading(std::atan2(major.y(), major.x()));
  }

  const double c = std::cos(heading), s = std::sin(heading);
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  double min_z = min_x, max_z = -min_x;
  for (const auto& p : cluster.pts) {
    const double lx = c * p.x() + s * p.y();
    const double ly = -s * p.x() + c * p.y();
    min_x = std::min(min_x, lx);
    max_x = std::max(max_x, lx);
    min_y = std::min(min_y, ly);
    max_y = std::max(max_y, ly);
    min_z = std::min(min_z, p.z());
    max_z = std::max(max_z, p.z());
  }

  BoundingBox4DoF box;
  box.heading = heading;
  box.extents = Eigen::Vector3d(std::max(max_x - min_x, 1e-6), std::max(max_y - min_y, 1e-6),
                                std::max(max_z - min_z, 1e-6));
  const double mx = (min_x + max_x) / 2.0, my = (min_y + max_y) / 2.0;
  box.center = Eigen::Vector3d(c * mx - s * my, s * mx + c * my, (min_z + max_z) / 2.0);
  return box;
}

/// Per-frame cluster lifted to an observation: box, 4-DoF pose at the box
/// centroid, class, and stationarity class.
struct Observation {
  Pose pose;
  LabeledCloud cloud;
  BoundingBox4DoF bbox;
  int semantic_class = 0;
  int stationarity = 1;
};

inline Observation make_observation(LabeledCloud cluster, const ClassTable& table) {
  Observation obs;
  obs.bbox = fit_bbox_pca(cluster);
  std::vector<int> all(cluster.size());
  std::iota(all.begin(), all.end(), 0);
  obs.semantic_class = detail::modal_label(cluster.labels, all);
  obs.stationarity = stationarity_class(obs.semantic_class, table);
  obs.pose = Pose::from_yaw(obs.bbox.center, obs.bbox.heading);
  obs.cloud = std::move(cluster);
  return obs;
}

/// Merges the transitive closure of box-overlapping observations: clouds are
/// concatenated, the box refit, and the label re-voted.
inline std::vector<Observation> merge_overlapping(std::vector<Observation> observations,
                                                  const ClassTable& table) {
  const std::size_t n = observations.size();
  if (n <= 1) return observations;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (observations[i].bbox.overlaps(observations[j].bbox)) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::map<int, LabeledCloud> merged;
  for (std::size_t i = 0; i < n; ++i) {
    merged[find(static_cast<int>(i))].append(observations[i].cloud);
  }
  std::vector<Observation> out;
  out.reserve(merged.size());
  for (auto& [root, cloud] : merged) {
    out.push_back(make_observation(std::move(cloud), table));
  }
  return out;
}

}  // namespace semistatic
