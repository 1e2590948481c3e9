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
#include <Eigen/Geometry>

#include <cmath>
#include <vector>

#include "semistatic/kdtree.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

struct IcpConfig {
  int max_iter = 50;
  double corr_dist = 0.3;
  double tol = 1e-6;
  int normal_knn = 10;
};

struct IcpResult {
  Eigen::Isometry3d transform = Eigen::Isometry3d::Identity();  // source -> target
  double dissimilarity = 1.0;  // fraction of source points left unexplained
  double p_z_camera = 0.0;     // translation z component in the camera optical frame
  bool converged = false;

  Eigen::Vector3d translation() const { return transform.translation(); }
  double yaw() const {
    const Eigen::Matrix3d r = transform.linear();
    return std::atan2(r(1, 0), r(0, 0));
  }
};

/// Per-point normals from a k-NN plane fit, oriented toward `viewpoint`.
inline std::vector<Eigen::Vector3d> estimate_normals(const std::vector<Eigen::Vector3d>& pts,
                                                     int knn, const Eigen::Vector3d& viewpoint) {
  std::vector<Eigen::Vector3d> normals(pts.size(), Eigen::Vector3d::UnitZ());
  if (pts.size() < 3) return normals;
  const KdTree3 tree(pts);
  const int k = std::min<int>(knn, static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nbrs = tree.knn(pts[i], k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int idx : nbrs) mean += pts[idx];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int idx : nbrs) {
      const Eigen::Vector3d d = pts[idx] - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d n = eig.eigenvectors().col(0);  // smallest eigenvalue
    if (n.dot(viewpoint - pts[i]) < 0.0) n = -n;
    normals[i] = n;
  }
  return normals;
}

/// Point-to-plane ICP aligning `source` onto `target`. Iteratively minimizes
/// sum(((R s + t - m) . n_m)^2) with a small-angle linearization. The
/// dissimilarity is the fraction of source points whose nearest target point
/// lies beyond corr_dist after the final iterate; non-convergence reports
/// dissimilarity 1. The camera pose is only used to express the recovered
/// translation along the optical axis.
inline IcpResult icp_point_to_plane(const LabeledCloud& source, const LabeledCloud& target,
                                    const Eigen::Isometry3d& init, const IcpConfig& cfg,
                                    const Pose& camera_pose = Pose{}) {
  IcpResult result;
  result.transform = init;
  if (source.size() < 10 || target.size() < 10) {
    result.converged = false;
    result.dissimilarity = 1.0;
    return result;
  }

  const KdTree3 tree(target.pts);
  const std::vector<Eigen::Vector3d> normals =
      estimate_normals(target.pts, cfg.normal_knn, camera_pose.p);
  const double corr_sq = cfg.corr_dist * cfg.corr_dist;

  Eigen::Isometry3d t_cur = init;
  bool converged = false;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
    int n_corr = 0;
    for (const auto& s : source.pts) {
      const Eigen::Vector3d p = t_cur * s;
      double d_sq = 0.0;
      const int j = tree.nearest(p, &d_sq);
      if (j < 0 || d_sq > corr_sq) continue;
      const Eigen::Vector3d& q = target.pts[j];
      const Eigen::Vector3d& n = normals[j];
      Eigen::Matrix<double, 6, 1> a;
      a.head<3>() = p.cross(n);
      a.tail<3>() = n;
      const double r = (p - q).dot(n);
      ata.noalias() += a * a.transpose();
      atb.noalias() -= a * r;
      ++n_corr;
    }
    if (n_corr < 6) {
      converged = false;
      break;
    }
    const Eigen::Matrix<double, 6, 1> x = ata.ldlt().solve(atb);
    if (!x.allFinite()) {
      converged = false;
      break;
    }
    const Eigen::Vector3d omega = x.head<3>();
    const Eigen::Vector3d t_delta = x.tail<3>();
    Eigen::Isometry3d update = Eigen::Isometry3d::Identity();
    const double angle = omega.norm();
    if (angle > 1e-12) update.linear() = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
    update.translation() = t_delta;
    t_cur = update * t_cur;
    if (x.norm() < cfg.tol) {
      converged = true;
      break;
    }
  }

  result.transform = t_cur;
  result.converged = converged;
  if (!converged) {
    result.dissimilarity = 1.0;
  } else {
    int outliers = 0;
    for (const auto& s : source.pts) {
      double d_sq = 0.0;
      tree.nearest(t_cur * s, &d_sq);
      if (d_sq > corr_sq) ++outliers;
    }
    result.dissimilarity = static_cast<double>(outliers) / static_cast<double>(source.size());
  }
  result.p_z_camera = (camera_pose.q.conjugate() * t_cur.translation()).z();
  return result;
}

}  // namespace semistatic
