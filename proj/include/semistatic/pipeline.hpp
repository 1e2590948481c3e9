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

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/association.hpp"
#include "semistatic/config.hpp"
#include "semistatic/filter.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/icp.hpp"
#include "semistatic/tsdf.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

struct PipelineConfig {
  TsdfParams tsdf{0.05, -1.0};       // truncation < 0 resolves to 4 * voxel_size
  double lambda_diff = -1.0;         // < 0 resolves to 1 / voxel_size
  GeometryConfig geometry;
  IcpConfig icp;
  AssociationConfig assoc;
  LikelihoodConfig likelihood;
  ClassTable classes = default_class_table();
  CameraModel camera;                // frustum checks; comes from the dataset
  double input_leaf = -1.0;          // < 0 resolves to voxel_size
  double export_band = -1.0;         // < 0 resolves to 0.55 * voxel_size
  double export_min_weight = 2.0;
  bool report_timing = true;

  void finalize() {
    if (tsdf.truncation < 0.0) tsdf.truncation = 4.0 * tsdf.voxel_size;
    if (lambda_diff < 0.0) lambda_diff = 1.0 / tsdf.voxel_size;
    if (input_leaf < 0.0) input_leaf = tsdf.voxel_size;
    if (export_band < 0.0) export_band = 0.55 * tsdf.voxel_size;
    if (!tsdf.valid()) throw std::runtime_error("config: invalid voxel_size/truncation");
    if (!likelihood.valid()) throw std::runtime_error("config: invalid likelihood parameters");
    if (classes.empty()) throw std::runtime_error("config: empty class table");
  }
};

inline PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  cfg.finalize();
  return cfg;
}

/// Loads the flat key = value run configuration. Unknown keys are rejected so
/// typos surface instead of silently using defaults.
inline PipelineConfig load_pipeline_config(const std::string& path) {
  const ParsedConfig parsed = load_config_file(path);
  PipelineConfig cfg;
  const ConfigSection& g = parsed.globals;

  static const std::vector<std::string> known = {
      "voxel_size", "truncation", "lambda_diff", "tau", "delta_max", "k_static", "k_dynamic",
      "sigma_meas", "v_max", "theta_stat", "sigma0_sq", "theta_dist", "theta_sim", "theta_cutoff",
      "theta_vis", "lambda1", "lambda2", "lambda3", "ground_band", "ransac_ground", "outlier_knn",
      "outlier_stddev", "plane_inlier_dist", "min_plane_points", "cluster_radius",
      "cluster_min_points", "icp_max_iter", "icp_corr_dist", "icp_tol", "input_leaf",
      "export_band", "export_min_weight", "report_timing"};
  for (const auto& [key, value] : g.entries) {
    if (key.rfind("class.", 0) == 0) continue;
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) throw std::runtime_error(path + ": unknown config key '" + key + "'");
  }

  cfg.tsdf.voxel_size = g.get_double("voxel_size", cfg.tsdf.voxel_size);
  cfg.tsdf.truncation = g.get_double("truncation", -1.0);
  cfg.lambda_diff = g.get_double("lambda_diff", -1.0);

  cfg.likelihood.tau = g.get_double("tau", cfg.likelihood.tau);
  cfg.likelihood.delta_max = g.get_double("delta_max", cfg.likelihood.delta_max);
  cfg.likelihood.k_static = g.get_double("k_static", cfg.likelihood.k_static);
  cfg.likelihood.k_dynamic = g.get_double("k_dynamic", cfg.likelihood.k_dynamic);
  cfg.likelihood.sigma_meas = g.get_double("sigma_meas", cfg.likelihood.tau);
  cfg.likelihood.v_max = g.get_double("v_max", cfg.likelihood.v_max);
  cfg.likelihood.theta_stat = g.get_double("theta_stat", cfg.likelihood.theta_stat);
  cfg.likelihood.sigma0_sq = g.get_double("sigma0_sq", cfg.likelihood.sigma0_sq);

  cfg.assoc.theta_dist = g.get_double("theta_dist", cfg.assoc.theta_dist);
  cfg.assoc.theta_sim = g.get_double("theta_sim", cfg.assoc.theta_sim);
  cfg.assoc.theta_cutoff = g.get_double("theta_cutoff", cfg.assoc.theta_cutoff);
  cfg.assoc.theta_vis = g.get_double("theta_vis", cfg.assoc.theta_vis);
  cfg.assoc.lambda1 = g.get_double("lambda1", cfg.assoc.lambda1);
  cfg.assoc.lambda2 = g.get_double("lambda2", cfg.assoc.lambda2);
  cfg.assoc.lambda3 = g.get_double("lambda3", cfg.assoc.lambda3);

  cfg.geometry.ground_band = g.get_double("ground_band", cfg.geometry.ground_band);
  cfg.geometry.ransac_ground = g.get_bool("ransac_ground", cfg.geometry.ransac_ground);
  cfg.geometry.outlier_knn = g.get_int("outlier_knn", cfg.geometry.outlier_knn);
  cfg.geometry.outlier_stddev_mult = g.get_double("outlier_stddev", cfg.geometry.outlier_stddev_mult);
  cfg.geometry.plane_inlier_dist = g.get_double("plane_inlier_dist", cfg.geometry.plane_inlier_dist);
  cfg.geometry.min_plane_points = g.get_int("min_plane_points", cfg.geometry.min_plane_points);
  cfg.geometry.cluster_radius = g.get_double("cluster_radius", cfg.geometry.cluster_radius);
  cfg.geometry.cluster_min_points = g.get_int("cluster_min_points", cfg.geometry.cluster_min_points);

  cfg.icp.max_iter = g.get_int("icp_max_iter", cfg.icp.max_iter);
  cfg.icp.corr_dist = g.get_double("icp_corr_dist", cfg.icp.corr_dist);
  cfg.icp.tol = g.get_double("icp_tol", cfg.icp.tol);

  cfg.input_leaf = g.get_double("input_leaf", -1.0);
  cfg.export_band = g.get_double("export_band", -1.0);
  cfg.export_min_weight = g.get_double("export_min_weight", cfg.export_min_weight);
  cfg.report_timing = g.get_bool("report_timing", cfg.report_timing);

  // class.<id>.name / .stationarity / .v_class override or extend the table.
  ClassTable table = default_class_table();
  bool any_class_key = false;
  for (const auto& [key, value] : g.entries) {
    if (key.rfind("class.", 0) != 0) continue;
    any_class_key = true;
  }
  if (any_class_key) {
    table.clear();
    for (const auto& [key, value] : g.entries) {
      if (key.rfind("class.", 0) != 0) continue;
      const std::size_t dot = key.find('.', 6);
      if (dot == std::string::npos) throw std::runtime_error(path + ": malformed key '" + key + "'");
      const int id = std::stoi(key.substr(6, dot - 6));
      const std::string field = key.substr(dot + 1);
      ClassInfo& info = table[id];
      if (field == "name") {
        info.name = value;
      } else if (field == "stationarity") {
        info.stationarity = std::stoi(value);
      } else if (field == "v_class") {
        info.v_class = std::stod(value);
      } else {
        throw std::runtime_error(path + ": unknown class field '" + field + "'");
      }
    }
  }
  cfg.classes = std::move(table);
  cfg.finalize();
  return cfg;
}

struct ObjectRecord {
  enum class Status { kStable, kNew, kUpdatePending, kUnobserved };

  int id = -1;
  Pose pose;                   // 4-DoF: translation at the box centroid + yaw
  LabeledCloud cloud;          // accumulated, voxel-downsampled
  TsdfGrid tsdf;               // the object's own reconstruction, world frame
  BoundingBox4DoF bbox;
  int semantic_class = 0;
  GaussianBetaState state;
  Status status = Status::kStable;
  VoxelSet footprint;          // global-map cells this object has touched
  int spawned_frame = 0;

  explicit ObjectRecord(const TsdfParams& params) : tsdf(params) {}
};

struct TraceRow {
  int frame = 0;
  int object_id = -1;
  GaussianBetaState state;
  double delta = 0.0;
  int s = 1;
  std::string event;  // spawned | updated | clamped | unobserved | pruned
};

struct FrameResult {
  std::vector<int> spawned;
  std::vector<int> updated;
  std::vector<int> pruned;
  std::vector<int> discarded_observations;            // observation indices
  std::map<int, std::pair<double, bool>> object_delta;  // id -> (delta, verified)
  int n_observations = 0;
  double t_cluster_associate_ms = 0.0;
  double t_state_integrate_ms = 0.0;
  double t_maintenance_ms = 0.0;
};

// Owns the object library and the global TSDF; one frame in, one result out.
// All mutation happens on the calling thread in object-id order.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), global_map_(cfg_.tsdf) {
    cfg_.finalize();
  }

  const PipelineConfig& config() const { return cfg_; }
  const std::map<int, ObjectRecord>& library() const { return library_; }
  const TsdfGrid& global_map() const { return global_map_; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  FrameResult process_frame(const LabeledCloud& cloud_cam, const Pose& camera_pose,
                            int frame_index) {
    using clock = std::chrono::steady_clock;
    FrameResult result;
    const auto t0 = clock::now();

    for (auto& [id, obj] : library_) obj.status = ObjectRecord::Status::kStable;

    // Observation extraction.
    LabeledCloud world = cloud_cam.transformed(camera_pose);
    world = voxel_downsample(world, cfg_.input_leaf);
    world = remove_ground_and_outliers(world, cfg_.geometry);
    world = enforce_plane_semantics(world, cfg_.geometry);
    std::vector<Observation> observations;
    for (auto& cluster : euclidean_cluster(world, cfg_.geometry)) {
      observations.push_back(make_observation(std::move(cluster), cfg_.classes));
    }
    observations = merge_overlapping(std::move(observations), cfg_.classes);
    result.n_observations = static_cast<int>(observations.size());

    // Candidate ICP and assignment.
    std::vector<int> object_ids;
    std::vector<ObjectView> views;
    for (const auto& [id, obj] : library_) {
      object_ids.push_back(id);
      views.push_back(ObjectView{obj.bbox.center, obj.semantic_class});
    }
    std::map<std::pair<int, int>, IcpResult> icp_results;
    for (std::size_t i = 0; i < views.size(); ++i) {
      const ObjectRecord& obj = library_.at(object_ids[i]);
      for (std::size_t j = 0; j < observations.size(); ++j) {
        const double dist = (views[i].centroid - observations[j].bbox.center).norm();
        if (dist > cfg_.assoc.theta_dist) continue;
        icp_results[{static_cast<int>(i), static_cast<int>(j)}] =
            run_pair_icp(obj, observations[j], camera_pose);
      }
    }
    const Eigen::MatrixXd cost = build_cost_matrix(views, observations, icp_results, cfg_.assoc);
    const auto matching = solve_assignment(cost);
    std::vector<double> visibilities(views.size(), 0.0);
    for (std::size_t i = 0; i < views.size(); ++i) {
      visibilities[i] =
          frustum_visibility(library_.at(object_ids[i]).cloud, camera_pose, cfg_.camera);
    }
    const AssociationResult assoc =
        classify_statuses(static_cast<int>(views.size()), static_cast<int>(observations.size()),
                          matching, visibilities, cfg_.assoc);
    const auto t1 = clock::now();

    // State updates and model integration, in object-id order.
    for (const auto& [i, j] : assoc.matches) {
      library_.at(object_ids[i]).status = ObjectRecord::Status::kUpdatePending;
    }
    for (int i : assoc.unobserved_objects) {
      library_.at(object_ids[i]).status = ObjectRecord::Status::kUnobserved;
    }
    for (const auto& [i, j] : assoc.matches) {
      ObjectRecord& obj = library_.at(object_ids[i]);
      const bool verified = update_object(obj, observations[j], icp_results.at({i, j}),
                                          camera_pose, frame_index, &result);
      if (!verified) result.discarded_observations.push_back(j);
      result.updated.push_back(obj.id);
    }
    for (int i : assoc.unobserved_objects) {
      penalize_unobserved(library_.at(object_ids[i]), frame_index);
    }
    const auto t2 = clock::now();

    // Map maintenance, then spawns.
    result.pruned = maintain_map(frame_index);
    for (int j : assoc.new_observations) {
      result.spawned.push_back(spawn_object(observations[j], camera_pose, frame_index));
    }
    for (auto& [id, obj] : library_) obj.status = ObjectRecord::Status::kStable;
    const auto t3 = clock::now();

    const auto ms = [](auto a, auto b) {
      return std::chrono::duration<double, std::milli>(b - a).count();
    };
    result.t_cluster_associate_ms = ms(t0, t1);
    result.t_state_integrate_ms = ms(t1, t2);
    result.t_maintenance_ms = ms(t2, t3);
    return result;
  }

  /// Camera model used for frustum visibility; part of the run configuration
  /// that comes from the dataset rather than the config file.
  void set_camera(const CameraModel& camera) { cfg_.camera = camera; }

  /// Re-estimates the change measure for a matched pair and applies the
  /// clamped Bayesian update. Returns whether the observation passed
  /// geometric verification and was integrated.
  bool update_object(ObjectRecord& obj, const Observation& obs, const IcpResult& icp,
                     const Pose& camera_pose, int frame_index, FrameResult* result) {
    const Pose world_to_cam = camera_pose.inverse();
    const LabeledCloud obs_cam = obs.cloud.transformed(world_to_cam);
    const LabeledCloud obj_cam = obj.cloud.transformed(world_to_cam);

    double delta = 0.0;
    bool overlap_ok = false;
    {
      const TsdfGrid obs_tsdf = build_local_tsdf(obs_cam, cfg_.tsdf);
      const TsdfGrid obj_tsdf = build_local_tsdf(obj_cam, cfg_.tsdf);
      const auto change = tsdf_change(obs_tsdf, obj_tsdf, icp.p_z_camera, cfg_.lambda_diff);
      if (change) {
        overlap_ok = true;
        delta = std::clamp(*change, -cfg_.likelihood.delta_max, cfg_.likelihood.delta_max);
      } else {
        // No shared voxels: the pair carries no joint evidence, treat the
        // measurement as a pseudo-change at the support edge.
        delta = cfg_.likelihood.delta_max;
      }
    }

    const MeasurementFeature z{delta, obs.stationarity};
    const double k = adaptive_factor(z.s, z.delta, cfg_.likelihood);
    const auto updated = bayesian_update(obj.state, z, k, cfg_.likelihood);
    bool clamped = false;
    if (updated) {
      clamped = updated->expected_v() > cfg_.likelihood.v_max &&
                updated->expected_v() > obj.state.expected_v();
      obj.state = apply_clamp(obj.state, *updated, cfg_.likelihood);
    }
    const bool verified = overlap_ok && geometric_verification(delta, cfg_.likelihood);
    if (result) result->object_delta[obj.id] = {delta, verified};
    append_trace(frame_index, obj, delta, z.s, clamped ? "clamped" : "updated");

    if (verified) {
      obj.tsdf.integrate_cloud(obs.cloud, camera_pose.p);
      global_map_.integrate_cloud(obs.cloud, camera_pose.p, &obj.footprint);
      obj.cloud.append(obs.cloud);
      obj.cloud = voxel_downsample(obj.cloud, cfg_.tsdf.voxel_size);
      obj.bbox = fit_bbox_pca(obj.cloud);
      obj.pose = Pose::from_yaw(obj.bbox.center, obj.bbox.heading);
    }
    return verified;
  }

  /// A visible object with no matching observation receives a pseudo-change
  /// at the support edge. No semantic evidence exists for an object nobody
  /// saw, so the Bernoulli term is switched off (k = 0) and only the outlier
  /// count grows.
  void penalize_unobserved(ObjectRecord& obj, int frame_index) {
    const MeasurementFeature z{cfg_.likelihood.delta_max,
                               stationarity_class(obj.semantic_class, cfg_.classes)};
    const auto updated = bayesian_update(obj.state, z, 0.0, cfg_.likelihood);
    if (updated) obj.state = apply_clamp(obj.state, *updated, cfg_.likelihood);
    append_trace(frame_index, obj, z.delta, z.s, "unobserved");
  }

  /// Erases every object whose stationarity expectation fell below
  /// theta_stat and reinitializes its global-map voxels.
  std::vector<int> maintain_map(int frame_index) {
    std::vector<int> pruned;
    for (auto it = library_.begin(); it != library_.end();) {
      if (should_prune(it->second.state, cfg_.likelihood)) {
        global_map_.clear_voxels(it->second.footprint);
        append_trace(frame_index, it->second, 0.0,
                     stationarity_class(it->second.semantic_class, cfg_.classes), "pruned");
        pruned.push_back(it->first);
        it = library_.erase(it);
      } else {
        ++it;
      }
    }
    return pruned;
  }

 private:
  IcpResult run_pair_icp(const ObjectRecord& obj, const Observation& obs,
                         const Pose& camera_pose) const {
    // Source is the smaller cloud so partial views and model growth both
    // register as low dissimilarity; the reported z offset keeps the
    // "observation nearer the camera => positive" convention either way.
    const bool obs_is_source = obs.cloud.size() <= obj.cloud.size();
    const LabeledCloud& src = obs_is_source ? obs.cloud : obj.cloud;
    const LabeledCloud& tgt = obs_is_source ? obj.cloud : obs.cloud;
    IcpResult r = icp_point_to_plane(src, tgt, Eigen::Isometry3d::Identity(), cfg_.icp,
                                     camera_pose);
    if (!obs_is_source) r.p_z_camera = -r.p_z_camera;
    return r;
  }

  int spawn_object(const Observation& obs, const Pose& camera_pose, int frame_index) {
    ObjectRecord obj(cfg_.tsdf);
    obj.id = next_id_++;
    obj.pose = obs.pose;
    obj.cloud = obs.cloud;
    obj.bbox = obs.bbox;
    obj.semantic_class = obs.semantic_class;
    obj.spawned_frame = frame_index;
    const double v0 = class_v_prior(obs.semantic_class, cfg_.classes);
    obj.state.mu = 0.0;
    obj.state.sigma2 = cfg_.likelihood.sigma0_sq;
    obj.state.alpha = 2.0 * v0;
    obj.state.beta = 2.0 * (1.0 - v0);
    obj.tsdf.integrate_cloud(obs.cloud, camera_pose.p);
    global_map_.integrate_cloud(obs.cloud, camera_pose.p, &obj.footprint);
    append_trace(frame_index, obj, 0.0, obs.stationarity, "spawned");
    const int id = obj.id;
    library_.emplace(id, std::move(obj));
    return id;
  }

  void append_trace(int frame, const ObjectRecord& obj, double delta, int s,
                    const std::string& event) {
    trace_.push_back(TraceRow{frame, obj.id, obj.state, delta, s, event});
  }

  PipelineConfig cfg_;
  TsdfGrid global_map_;
  std::map<int, ObjectRecord> library_;
  std::vector<TraceRow> trace_;
  int next_id_ = 0;
};

}  // namespace semistatic
