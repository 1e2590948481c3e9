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

#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "semistatic/geometry.hpp"
#include "semistatic/hungarian.hpp"
#include "semistatic/icp.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

struct AssociationConfig {
  double theta_dist = 3.0;    // candidate gate on centroid distance (m)
  double theta_sim = 0.4;     // gate on ICP dissimilarity
  double theta_cutoff = 6.0;  // gate on the pair cost
  double theta_vis = 0.5;     // frustum fraction for the unobserved status
  double lambda1 = 1.0;       // 1/m
  double lambda2 = 0.5;       // 1/rad
  double lambda3 = 5.0;       // class mismatch penalty
};

/// Weighted sum of relative pose change and semantic consistency:
///   lambda1 ||p_ij|| + lambda2 |phi_ij| + lambda3 (1 - [c_i == c_j])
inline double pair_cost(const Eigen::Vector3d& p_ij, double phi_ij, int c_i, int c_j,
                        const AssociationConfig& cfg) {
  return cfg.lambda1 * p_ij.norm() + cfg.lambda2 * std::abs(wrap_angle(phi_ij)) +
         cfg.lambda3 * (c_i == c_j ? 0.0 : 1.0);
}

/// What the association stage needs to know about a tracked object.
struct ObjectView {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  int semantic_class = 0;
};

/// Cost matrix rows = objects, cols = observations. Pairs outside the
/// centroid gate, whose ICP never ran, with dissimilarity above theta_sim, or
/// with a cost above theta_cutoff get an infinite sentinel.
inline Eigen::MatrixXd build_cost_matrix(const std::vector<ObjectView>& objects,
                                         const std::vector<Observation>& observations,
                                         const std::map<std::pair<int, int>, IcpResult>& icp,
                                         const AssociationConfig& cfg) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd cost(objects.size(), observations.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = 0; j < observations.size(); ++j) {
      cost(i, j) = inf;
      const double dist = (objects[i].centroid - observations[j].bbox.center).norm();
      if (dist > cfg.theta_dist) continue;
      const auto it = icp.find({static_cast<int>(i), static_cast<int>(j)});
      if (it == icp.end()) continue;
      const IcpResult& r = it->second;
      if (r.dissimilarity > cfg.theta_sim) continue;
      const double c = pair_cost(r.translation(), r.yaw(), objects[i].semantic_class,
                                 observations[j].semantic_class, cfg);
      if (c > cfg.theta_cutoff) continue;
      cost(i, j) = c;
    }
  }
  return cost;
}

/// Fraction of points projecting inside the image with 0 < depth <= max_range.
inline double frustum_visibility(const LabeledCloud& cloud, const Pose& camera_pose,
                                 const CameraModel& camera) {
  if (cloud.empty()) return 0.0;
  const Pose world_to_cam = camera_pose.inverse();
  std::size_t inside = 0;
  for (const auto& p : cloud.pts) {
    if (camera.in_frustum(world_to_cam * p)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(cloud.size());
}

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (object index, observation index)
  std::vector<int> new_observations;         // unmatched observation indices
  std::vector<int> unobserved_objects;       // unmatched, sufficiently visible objects
};

/// Status marking: matched objects become update-pending, unmatched
/// observations are new, and unmatched objects whose clouds are sufficiently
/// inside the frustum are unobserved. Everything else is left untouched.
inline AssociationResult classify_statuses(int n_objects, int n_observations,
                                           const std::vector<std::pair<int, int>>& matching,
                                           const std::vector<double>& visibilities,
                                           const AssociationConfig& cfg) {
  AssociationResult result;
  result.matches = matching;
  std::vector<char> object_matched(n_objects, 0), obs_matched(n_observations, 0);
  for (const auto& [i, j] : matching) {
    object_matched[i] = 1;
    obs_matched[j] = 1;
  }
  for (int j = 0; j < n_observations; ++j) {
    if (!obs_matched[j]) result.new_observations.push_back(j);
  }
  for (int i = 0; i < n_objects; ++i) {
    if (!object_matched[i] && visibilities[i] >= cfg.theta_vis) {
      result.unobserved_objects.push_back(i);
    }
  }
  return result;
}

}  // namespace semistatic
