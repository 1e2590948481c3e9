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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semistatic/config.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

/// Planar pose of a scene object: xy translation + yaw.
struct ObjectPose {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  double yaw = 0.0;
};

/// Vertical prism: a convex footprint polygon extruded from the ground plane
/// to `height`. Pose per traversal; an absent pose removes the object for
/// that traversal. An optional motion window translates it inside a
/// traversal.
struct SceneObject {
  int id = 0;
  int semantic_class = 1;
  double height = 1.0;
  std::vector<Eigen::Vector2d> footprint;  // counter-clockwise, object frame
  std::map<int, ObjectPose> pose_by_traversal;  // 1-based traversal index

  struct Motion {
    int traversal = 1;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // m/s
    double t_start = 0.0, t_end = 0.0;
  };
  std::vector<Motion> motions;
};

struct TrajectoryWaypoint {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double pitch = 0.0;  // positive looks down
};

struct Trajectory {
  int traversal = 1;
  std::vector<TrajectoryWaypoint> waypoints;  // strictly increasing t
};

struct SceneScript {
  int traversals = 1;
  double frame_rate = 5.0;
  CameraModel camera;
  double noise_std = 0.01;
  double label_flip_prob = 0.0;
  double gt_voxel_size = 0.1;
  std::uint64_t seed = 1;
  int ground_label = 0;
  std::vector<SceneObject> objects;
  std::vector<Trajectory> trajectories;
};

inline bool object_present(const SceneObject& obj, int traversal) {
  return obj.pose_by_traversal.count(traversal) > 0;
}

/// Pose at time t within a traversal; motion windows accumulate as straight
/// translations.
inline ObjectPose object_pose_at(const SceneObject& obj, int traversal, double t) {
  ObjectPose pose = obj.pose_by_traversal.at(traversal);
  for (const auto& m : obj.motions) {
    if (m.traversal != traversal) continue;
    const double active = std::clamp(t, m.t_start, m.t_end) - m.t_start;
    pose.xy += m.velocity * active;
  }
  return pose;
}

/// Camera pose on the optical frame convention: z forward, x right, y down.
inline Pose camera_pose_from(const Eigen::Vector3d& p, double yaw, double pitch) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const Eigen::Vector3d forward(cy * cp, sy * cp, -sp);
  const Eigen::Vector3d right(sy, -cy, 0.0);
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  Pose pose;
  pose.p = p;
  pose.q = Eigen::Quaterniond(r);
  pose.q.normalize();
  return pose;
}

/// Linear position interpolation and shortest-path angle interpolation
/// between waypoints; clamped outside the scripted span.
inline Pose trajectory_pose(const Trajectory& traj, double t) {
  const auto& wp = traj.waypoints;
  if (wp.empty()) throw std::runtime_error("trajectory has no waypoints");
  if (t <= wp.front().t) {
    return camera_pose_from(wp.front().p, wp.front().yaw, wp.front().pitch);
  }
  if (t >= wp.back().t) {
    return camera_pose_from(wp.back().p, wp.back().yaw, wp.back().pitch);
  }
  std::size_t hi = 1;
  while (wp[hi].t < t) ++hi;
  const auto& a = wp[hi - 1];
  const auto& b = wp[hi];
  const double u = (t - a.t) / (b.t - a.t);
  const Eigen::Vector3d p = a.p + u * (b.p - a.p);
  const double yaw = a.yaw + u * wrap_angle(b.yaw - a.yaw);
  const double pitch = a.pitch + u * (b.pitch - a.pitch);
  return camera_pose_from(p, yaw, pitch);
}

namespace detail {

/// Ray vs extruded convex polygon via half-plane slabs; returns the entry
/// distance if the ray hits in front of the origin.
inline std::optional<double> ray_prism(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                       const SceneObject& obj, const ObjectPose& pose) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  // World -> object frame.
  const Eigen::Vector2d ol(c * (o.x() - pose.xy.x()) + s * (o.y() - pose.xy.y()),
                           -s * (o.x() - pose.xy.x()) + c * (o.y() - pose.xy.y()));
  const Eigen::Vector2d dl(c * d.x() + s * d.y(), -s * d.x() + c * d.y());

  double t_min = 0.0, t_max = std::numeric_limits<double>::infinity();
  // z slab
  if (std::abs(d.z()) < 1e-12) {
    if (o.z() < 0.0 || o.z() > obj.height) return std::nullopt;
  } else {
    double t0 = (0.0 - o.z()) / d.z();
    double t1 = (obj.height - o.z()) / d.z();
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
  }
  const std::size_t n = obj.footprint.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d a = obj.footprint[i];
    const Eigen::Vector2d e = obj.footprint[(i + 1) % n] - a;
    const Eigen::Vector2d normal(e.y(), -e.x());  // outward for CCW footprints
    const double denom = normal.dot(dl);
    const double value = normal.dot(ol - a);
    if (std::abs(denom) < 1e-12) {
      if (value > 0.0) return std::nullopt;
      continue;
    }
    const double t = -value / denom;
    if (denom > 0.0) {
      t_max = std::min(t_max, t);
    } else {
      t_min = std::max(t_min, t);
    }
    if (t_min > t_max) return std::nullopt;
  }
  if (t_max < t_min) return std::nullopt;
  if (t_min <= 1e-9) return std::nullopt;  // origin inside or behind
  return t_min;
}

inline std::string frame_filename(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.txt", frame);
  return std::string(buf);
}

}  // namespace detail

/// Per-pixel ray cast against every present object and the ground plane.
/// Points come back in the camera optical frame with the hit object's label;
/// misses and hits beyond max_range are omitted. Gaussian depth noise is
/// applied along the ray.
inline LabeledCloud render_frame(const SceneScript& scene, int traversal, double t,
                                 const Pose& camera_pose, double noise_std,
                                 std::mt19937_64& rng) {
  const CameraModel& cam = scene.camera;
  LabeledCloud cloud;
  cloud.reserve(static_cast<std::size_t>(cam.width) * cam.height / 4);

  std::vector<std::pair<const SceneObject*, ObjectPose>> present;
  std::set<int> label_set{scene.ground_label};
  for (const auto& obj : scene.objects) {
    label_set.insert(obj.semantic_class);
    if (object_present(obj, traversal)) {
      present.emplace_back(&obj, object_pose_at(obj, traversal, t));
    }
  }
  const std::vector<int> labels(label_set.begin(), label_set.end());

  std::normal_distribution<double> depth_noise(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const Eigen::Matrix3d r_wc = camera_pose.q.toRotationMatrix();
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d dir_cam = cam.pixel_ray(u, v);
      const Eigen::Vector3d dir_world = r_wc * dir_cam;
      double best_t = std::numeric_limits<double>::infinity();
      int best_label = -1;
      for (const auto& [obj, pose] : present) {
        const auto hit = detail::ray_prism(camera_pose.p, dir_world, *obj, pose);
        if (hit && *hit < best_t) {
          best_t = *hit;
          best_label = obj->semantic_class;
        }
      }
      if (dir_world.z() < -1e-9) {
        const double t_ground = -camera_pose.p.z() / dir_world.z();
        if (t_ground > 1e-9 && t_ground < best_t) {
          best_t = t_ground;
          best_label = scene.ground_label;
        }
      }
      if (!std::isfinite(best_t) || best_t > cam.max_range) continue;
      double depth = best_t;
      if (noise_std > 0.0) depth = std::max(1e-3, depth + noise_std * depth_noise(rng));
      int label = best_label;
      if (scene.label_flip_prob > 0.0 && uniform(rng) < scene.label_flip_prob &&
          labels.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 2);
        std::size_t idx = pick(rng);
        if (labels[idx] == label) idx = labels.size() - 1;
        label = labels[idx];
      }
      cloud.push_back(depth * dir_cam, label);
    }
  }
  return cloud;
}

/// Surface voxels of the objects present in a traversal, taken at the pose
/// the object holds when the traversal ends. A voxel belongs to the set when
/// its center lies within 0.55 * voxel_size of a lateral face; top and
/// bottom faces are excluded since a ground robot never observes them.
inline void object_surface_voxels(const SceneObject& obj, const ObjectPose& pose,
                                  double voxel_size, VoxelSet* out) {
  const double band = 0.55 * voxel_size;
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const std::size_t n = obj.footprint.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Eigen::Vector2d a_local = obj.footprint[e];
    const Eigen::Vector2d b_local = obj.footprint[(e + 1) % n];
    const Eigen::Vector2d a(pose.xy.x() + c * a_local.x() - s * a_local.y(),
                            pose.xy.y() + s * a_local.x() + c * a_local.y());
    const Eigen::Vector2d b(pose.xy.x() + c * b_local.x() - s * b_local.y(),
                            pose.xy.y() + s * b_local.x() + c * b_local.y());
    const Eigen::Vector2d edge = b - a;
    const double len = edge.norm();
    if (len < 1e-12) continue;
    const Eigen::Vector2d u = edge / len;

    Aabb box;
    box.expand(Eigen::Vector3d(a.x(), a.y(), 0.0));
    box.expand(Eigen::Vector3d(b.x(), b.y(), 0.0));
    box.expand(Eigen::Vector3d(a.x(), a.y(), obj.height));
    box.expand(Eigen::Vector3d(b.x(), b.y(), obj.height));
    box.inflate(band);

    const VoxelKey lo = point_to_voxel(box.min, voxel_size);
    const VoxelKey hi = point_to_voxel(box.max, voxel_size);
    for (int i = lo.i; i <= hi.i; ++i) {
      for (int j = lo.j; j <= hi.j; ++j) {
        for (int k = lo.k; k <= hi.k; ++k) {
          const VoxelKey key{i, j, k};
          const Eigen::Vector3d p = voxel_center(key, voxel_size);
          const double along = std::clamp(u.dot(p.head<2>() - a), 0.0, len);
          const double z = std::clamp(p.z(), 0.0, obj.height);
          const Eigen::Vector2d foot = a + along * u;
          const Eigen::Vector3d closest(foot.x(), foot.y(), z);
          if ((p - closest).norm() <= band) out->insert(key);
        }
      }
    }
  }
}

inline VoxelSet ground_truth_voxels(const SceneScript& scene, int traversal, double voxel_size) {
  if (voxel_size <= 0.0) throw std::invalid_argument("ground_truth_voxels: voxel_size must be > 0");
  double t_end = 0.0;
  for (const auto& traj : scene.trajectories) {
    if (traj.traversal == traversal && !traj.waypoints.empty()) {
      t_end = traj.waypoints.back().t;
    }
  }
  VoxelSet out;
  for (const auto& obj : scene.objects) {
    if (!object_present(obj, traversal)) continue;
    object_surface_voxels(obj, object_pose_at(obj, traversal, t_end), voxel_size, &out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene script I/O
// ---------------------------------------------------------------------------

inline SceneScript parse_scene(const ParsedConfig& cfg) {
  SceneScript scene;
  const ConfigSection& g = cfg.globals;
  scene.traversals = g.get_int("traversals", 1);
  scene.frame_rate = g.get_double("frame_rate", 5.0);
  scene.noise_std = g.get_double("noise_std", 0.01);
  scene.label_flip_prob = g.get_double("label_flip_prob", 0.0);
  scene.gt_voxel_size = g.get_double("gt_voxel_size", 0.1);
  scene.seed = static_cast<std::uint64_t>(g.get_double("seed", 1));
  scene.ground_label = g.get_int("ground_label", 0);
  scene.camera.fx = g.get_double("camera.fx", scene.camera.fx);
  scene.camera.fy = g.get_double("camera.fy", scene.camera.fy);
  scene.camera.cx = g.get_double("camera.cx", scene.camera.cx);
  scene.camera.cy = g.get_double("camera.cy", scene.camera.cy);
  scene.camera.width = g.get_int("camera.width", scene.camera.width);
  scene.camera.height = g.get_int("camera.height", scene.camera.height);
  scene.camera.max_range = g.get_double("camera.max_range", scene.camera.max_range);
  if (!scene.camera.valid()) throw std::runtime_error("scene: invalid camera parameters");

  for (const ConfigSection* s : cfg.sections_named("object")) {
    SceneObject obj;
    obj.id = s->require_int("id");
    obj.semantic_class = s->require_int("class");
    obj.height = s->require_double("height");
    const auto fp = ConfigSection::parse_numbers(s->require("footprint"));
    if (fp.size() < 6 || fp.size() % 2 != 0) {
      throw std::runtime_error("object " + std::to_string(obj.id) +
                               ": footprint needs at least 3 xy pairs");
    }
    for (std::size_t i = 0; i + 1 < fp.size(); i += 2) {
      obj.footprint.emplace_back(fp[i], fp[i + 1]);
    }
    for (const auto& [key, value] : s->entries) {
      if (key.rfind("pose.", 0) == 0) {
        const int traversal = std::stoi(key.substr(5));
        const auto v = ConfigSection::parse_numbers(value);
        if (v.size() != 3) throw std::runtime_error("pose needs 'x y yaw'");
        obj.pose_by_traversal[traversal] = ObjectPose{{v[0], v[1]}, v[2]};
      } else if (key.rfind("motion.", 0) == 0) {
        const int traversal = std::stoi(key.substr(7));
        const auto v = ConfigSection::parse_numbers(value);
        if (v.size() != 4) throw std::runtime_error("motion needs 'vx vy t_start t_end'");
        obj.motions.push_back(SceneObject::Motion{traversal, {v[0], v[1]}, v[2], v[3]});
      }
    }
    scene.objects.push_back(std::move(obj));
  }

  for (const ConfigSection* s : cfg.sections_named("trajectory")) {
    Trajectory traj;
    traj.traversal = s->require_int("traversal");
    for (const std::string& line : s->all("waypoint")) {
      const auto v = ConfigSection::parse_numbers(line);
      if (v.size() != 5 && v.size() != 6) {
        throw std::runtime_error("waypoint needs 't x y z yaw [pitch]'");
      }
      TrajectoryWaypoint wp;
      wp.t = v[0];
      wp.p = Eigen::Vector3d(v[1], v[2], v[3]);
      wp.yaw = v[4];
      wp.pitch = v.size() == 6 ? v[5] : 0.0;
      if (!traj.waypoints.empty() && wp.t <= traj.waypoints.back().t) {
        throw std::runtime_error("waypoint timestamps must be strictly increasing");
      }
      traj.waypoints.push_back(wp);
    }
    if (traj.waypoints.empty()) throw std::runtime_error("trajectory without waypoints");
    scene.trajectories.push_back(std::move(traj));
  }
  return scene;
}

inline SceneScript load_scene(const std::string& path) {
  try {
    return parse_scene(load_config_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_scene(const SceneScript& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[256];
  out << "traversals = " << scene.traversals << "\n";
  std::snprintf(buf, sizeof(buf), "frame_rate = %.6f\n", scene.frame_rate);
  out << buf;
  std::snprintf(buf, sizeof(buf), "noise_std = %.6f\nlabel_flip_prob = %.6f\n", scene.noise_std,
                scene.label_flip_prob);
  out << buf;
  std::snprintf(buf, sizeof(buf), "gt_voxel_size = %.6f\n", scene.gt_voxel_size);
  out << buf;
  out << "seed = " << scene.seed << "\n";
  out << "ground_label = " << scene.ground_label << "\n";
  std::snprintf(buf, sizeof(buf),
                "camera.fx = %.6f\ncamera.fy = %.6f\ncamera.cx = %.6f\ncamera.cy = %.6f\n",
                scene.camera.fx, scene.camera.fy, scene.camera.cx, scene.camera.cy);
  out << buf;
  out << "camera.width = " << scene.camera.width << "\ncamera.height = " << scene.camera.height
      << "\n";
  std::snprintf(buf, sizeof(buf), "camera.max_range = %.6f\n", scene.camera.max_range);
  out << buf;

  for (const auto& obj : scene.objects) {
    out << "\n[[object]]\n";
    out << "id = " << obj.id << "\nclass = " << obj.semantic_class << "\n";
    std::snprintf(buf, sizeof(buf), "height = %.6f\n", obj.height);
    out << buf;
    out << "footprint =";
    for (const auto& p : obj.footprint) {
      std::snprintf(buf, sizeof(buf), " %.6f %.6f", p.x(), p.y());
      out << buf;
    }
    out << "\n";
    for (const auto& [traversal, pose] : obj.pose_by_traversal) {
      std::snprintf(buf, sizeof(buf), "pose.%d = %.6f %.6f %.6f\n", traversal, pose.xy.x(),
                    pose.xy.y(), pose.yaw);
      out << buf;
    }
    for (const auto& m : obj.motions) {
      std::snprintf(buf, sizeof(buf), "motion.%d = %.6f %.6f %.6f %.6f\n", m.traversal,
                    m.velocity.x(), m.velocity.y(), m.t_start, m.t_end);
      out << buf;
    }
  }
  for (const auto& traj : scene.trajectories) {
    out << "\n[[trajectory]]\n";
    out << "traversal = " << traj.traversal << "\n";
    for (const auto& wp : traj.waypoints) {
      std::snprintf(buf, sizeof(buf), "waypoint = %.6f %.6f %.6f %.6f %.6f %.6f\n", wp.t,
                    wp.p.x(), wp.p.y(), wp.p.z(), wp.yaw, wp.pitch);
      out << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// Dataset generation and loading
// ---------------------------------------------------------------------------

struct DatasetManifest {
  struct Range {
    int traversal = 1;
    int first = 0, last = 0;
  };
  std::vector<Range> ranges;

  int traversal_of(int frame) const {
    for (const auto& r : ranges) {
      if (frame >= r.first && frame <= r.last) return r.traversal;
    }
    throw std::out_of_range("frame " + std::to_string(frame) + " not in manifest");
  }

  int frame_count() const { return ranges.empty() ? 0 : ranges.back().last + 1; }
};

inline void write_voxel_set(const VoxelSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<VoxelKey> keys(set.begin(), set.end());
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) out << k.i << " " << k.j << " " << k.k << "\n";
}

inline VoxelSet load_voxel_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open voxel file: " + path);
  VoxelSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    VoxelKey k;
    if (ls >> k.i >> k.j >> k.k) out.insert(k);
  }
  return out;
}

/// Renders every traversal along its trajectory and writes the on-disk
/// dataset: manifest.txt, poses.csv, frames/, gt/ and a copy of the scene
/// script. Returns the dataset directory.
inline std::string generate_dataset(const SceneScript& scene, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir + "/frames", ec);
  fs::create_directories(out_dir + "/gt", ec);
  if (ec) throw std::runtime_error("cannot create dataset directory " + out_dir);

  std::map<int, const Trajectory*> traj_by_traversal;
  for (const auto& traj : scene.trajectories) traj_by_traversal[traj.traversal] = &traj;
  for (int k = 1; k <= scene.traversals; ++k) {
    if (!traj_by_traversal.count(k)) {
      throw std::runtime_error("scene: no trajectory for traversal " + std::to_string(k));
    }
  }

  std::ofstream manifest(out_dir + "/manifest.txt");
  std::ofstream poses(out_dir + "/poses.csv");
  if (!manifest || !poses) throw std::runtime_error("cannot write dataset files in " + out_dir);
  poses << "frame,t,px,py,pz,qx,qy,qz,qw\n";

  char buf[256];
  int frame = 0;
  double t_offset = 0.0;
  for (int k = 1; k <= scene.traversals; ++k) {
    const Trajectory& traj = *traj_by_traversal.at(k);
    const double duration = traj.waypoints.back().t;
    const int n_frames = static_cast<int>(duration * scene.frame_rate) + 1;
    const int first = frame;
    for (int f = 0; f < n_frames; ++f, ++frame) {
      const double t_local = static_cast<double>(f) / scene.frame_rate;
      const Pose cam = trajectory_pose(traj, t_local);
      std::mt19937_64 rng(scene.seed * 1000003ull + static_cast<std::uint64_t>(frame));
      const LabeledCloud cloud =
          render_frame(scene, k, t_local, cam, scene.noise_std, rng);

      std::ofstream fout(out_dir + "/frames/" + detail::frame_filename(frame));
      if (!fout) {
        throw std::runtime_error("cannot write frame file " + detail::frame_filename(frame));
      }
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d\n", cloud.pts[i].x(),
                      cloud.pts[i].y(), cloud.pts[i].z(), cloud.labels[i]);
        fout << buf;
      }

      std::snprintf(buf, sizeof(buf), "%d,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", frame,
                    t_offset + t_local, cam.p.x(), cam.p.y(), cam.p.z(), cam.q.x(), cam.q.y(),
                    cam.q.z(), cam.q.w());
      poses << buf;
    }
    manifest << "traversal " << k << " " << first << " " << (frame - 1) << "\n";
    t_offset += duration + 1.0 / scene.frame_rate;

    std::snprintf(buf, sizeof(buf), "%s/gt/traversal_%02d_voxels.txt", out_dir.c_str(), k);
    write_voxel_set(ground_truth_voxels(scene, k, scene.gt_voxel_size), buf);
  }
  {
    std::ofstream meta(out_dir + "/gt/voxel_size.txt");
    std::snprintf(buf, sizeof(buf), "%.6f\n", scene.gt_voxel_size);
    meta << buf;
  }
  save_scene(scene, out_dir + "/scene.toml");
  return out_dir;
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  DatasetManifest manifest;
  std::string word;
  while (in >> word) {
    if (word != "traversal") throw std::runtime_error(path + ": malformed manifest line");
    DatasetManifest::Range r;
    if (!(in >> r.traversal >> r.first >> r.last)) {
      throw std::runtime_error(path + ": malformed manifest line");
    }
    manifest.ranges.push_back(r);
  }
  if (manifest.ranges.empty()) throw std::runtime_error(path + ": empty manifest");
  return manifest;
}

inline std::vector<std::pair<double, Pose>> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open poses: " + path);
  std::vector<std::pair<double, Pose>> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    int frame = 0;
    double t = 0;
    double px, py, pz, qx, qy, qz, qw;
    if (!(ls >> frame >> t >> px >> py >> pz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error(path + ": malformed pose row '" + line + "'");
    }
    Pose pose;
    pose.p = Eigen::Vector3d(px, py, pz);
    pose.q = Eigen::Quaterniond(qw, qx, qy, qz);
    pose.q.normalize();
    out.emplace_back(t, pose);
  }
  return out;
}

inline LabeledCloud load_frame(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frame: " + path);
  LabeledCloud cloud;
  double x, y, z;
  int label;
  while (in >> x >> y >> z >> label) cloud.push_back(Eigen::Vector3d(x, y, z), label);
  return cloud;
}

inline std::string frame_path(const std::string& dataset_dir, int frame) {
  return dataset_dir + "/frames/" + detail::frame_filename(frame);
}

inline double load_gt_voxel_size(const std::string& dataset_dir) {
  std::ifstream in(dataset_dir + "/gt/voxel_size.txt");
  double v = 0.0;
  if (!(in >> v) || v <= 0.0) {
    throw std::runtime_error("cannot read gt voxel size in " + dataset_dir);
  }
  return v;
}

inline std::string gt_voxel_path(const std::string& dataset_dir, int traversal) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "/gt/traversal_%02d_voxels.txt", traversal);
  return dataset_dir + buf;
}

}  // namespace semistatic
