// Synthetic warehouse scenarios shared by the pipeline, evaluation and
// acceptance suites: box-wall arenas, orbit trajectories that keep every
// lateral face in frontal view, and matching pipeline configurations.

#pragma once

#include <cmath>
#include <vector>

#include "semistatic/pipeline.hpp"
#include "semistatic/simworld.hpp"

namespace semistatic::testing {

struct ArenaLayout {
  double wall_half_len = 1.5;
  double wall_half_thick = 0.15;
  double wall_height = 1.2;
  double spacing = 5.0;
  double camera_height = 1.0;
  double camera_pitch = 0.28;
  double orbit_clear = 1.2;
  double speed = 1.0;
};

inline SceneObject wall_object(int id, double cx, double cy, double yaw,
                               const ArenaLayout& a, int cls = 1) {
  SceneObject obj;
  obj.id = id;
  obj.semantic_class = cls;
  obj.height = a.wall_height;
  obj.footprint = {{a.wall_half_len, a.wall_half_thick},
                   {-a.wall_half_len, a.wall_half_thick},
                   {-a.wall_half_len, -a.wall_half_thick},
                   {a.wall_half_len, -a.wall_half_thick}};
  obj.pose_by_traversal[1] = ObjectPose{{cx, cy}, yaw};
  return obj;
}

inline CameraModel scenario_camera() {
  CameraModel cam;
  cam.fx = cam.fy = 160.0;
  cam.cx = 160.0;
  cam.cy = 90.0;
  cam.width = 320;
  cam.height = 180;
  cam.max_range = 2.5;
  return cam;
}

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(int traversal, const ArenaLayout& a) : arena_(a) {
    traj_.traversal = traversal;
  }

  void add(const Eigen::Vector2d& xy, double yaw) {
    double t = 0.0;
    if (!traj_.waypoints.empty()) {
      const auto& prev = traj_.waypoints.back();
      const double dist = (Eigen::Vector2d(prev.p.x(), prev.p.y()) - xy).norm();
      t = prev.t + std::max(dist / arena_.speed, 0.25);
    }
    traj_.waypoints.push_back(
        {t, {xy.x(), xy.y(), arena_.camera_height}, yaw, arena_.camera_pitch});
  }

  /// One counter-clockwise loop around a wall pose, camera facing the wall
  /// center the whole way.
  void orbit(const ObjectPose& pose) {
    const double ex = arena_.wall_half_len + arena_.orbit_clear;
    const double ey = arena_.wall_half_thick + arena_.orbit_clear;
    std::vector<Eigen::Vector2d> local;
    const auto edge = [&](const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
      const double len = (to - from).norm();
      const int n = std::max(2, static_cast<int>(len / 0.8));
      for (int i = 0; i < n; ++i) {
        local.push_back(from + (to - from) * (static_cast<double>(i) / n));
      }
    };
    edge({ex, -ey}, {ex, ey});
    edge({ex, ey}, {-ex, ey});
    edge({-ex, ey}, {-ex, -ey});
    edge({-ex, -ey}, {ex, -ey});
    local.push_back({ex, -ey});  // close the loop

    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    for (const auto& p : local) {
      const Eigen::Vector2d world(pose.xy.x() + c * p.x() - s * p.y(),
                                  pose.xy.y() + s * p.x() + c * p.y());
      const double yaw = std::atan2(pose.xy.y() - world.y(), pose.xy.x() - world.x());
      add(world, yaw);
    }
  }

  /// A straight approach leg toward a wall, used between orbits.
  void approach(const ObjectPose& next) {
    if (traj_.waypoints.empty()) return;
    const auto& prev = traj_.waypoints.back();
    const Eigen::Vector2d here(prev.p.x(), prev.p.y());
    const double yaw = std::atan2(next.xy.y() - here.y(), next.xy.x() - here.x());
    add(here, yaw);  // turn in place toward the next wall
  }

  Trajectory finish() const { return traj_; }

 private:
  ArenaLayout arena_;
  Trajectory traj_;
};

inline Trajectory orbit_tour(int traversal, const std::vector<ObjectPose>& stops,
                             const ArenaLayout& a) {
  TrajectoryBuilder builder(traversal, a);
  for (const auto& stop : stops) {
    builder.approach(stop);
    builder.orbit(stop);
  }
  return builder.finish();
}

/// Static regression scene: `n_walls` walls in two rows, identical
/// traversals.
inline SceneScript static_arena_scene(int n_walls, int traversals, double noise_std,
                                      const ArenaLayout& a = ArenaLayout{}) {
  SceneScript scene;
  scene.traversals = traversals;
  scene.frame_rate = 5.0;
  scene.camera = scenario_camera();
  scene.noise_std = noise_std;
  scene.gt_voxel_size = 0.1;
  scene.seed = 7;
  std::vector<ObjectPose> stops;
  for (int i = 0; i < n_walls; ++i) {
    const double cx = a.spacing * (i % 5);
    const double cy = a.spacing * (i / 5);
    const double yaw = (i % 3 == 1) ? 0.35 : 0.0;
    SceneObject wall = wall_object(i + 1, cx, cy, yaw, a);
    for (int k = 2; k <= traversals; ++k) {
      wall.pose_by_traversal[k] = wall.pose_by_traversal[1];
    }
    scene.objects.push_back(wall);
    stops.push_back(ObjectPose{{cx, cy}, yaw});
  }
  // serpentine order: row 0 left to right, row 1 right to left
  std::vector<ObjectPose> ordered;
  for (int i = 0; i < std::min(n_walls, 5); ++i) ordered.push_back(stops[i]);
  for (int i = n_walls - 1; i >= 5; --i) ordered.push_back(stops[i]);
  for (int k = 1; k <= traversals; ++k) {
    scene.trajectories.push_back(orbit_tour(k, ordered, a));
  }
  return scene;
}

struct ChangeScene {
  SceneScript scene;
  std::vector<int> moved_ids;
  std::vector<int> removed_ids;
  std::vector<int> added_ids;
  std::vector<ObjectPose> old_poses;  // traversal-1 poses of moved + removed walls
};

/// Semi-static change scene: traversal 2 moves three walls by >= 1 m,
/// removes one and adds one. The traversal-2 route first revisits the
/// vacated spots, then tours the current configuration.
inline ChangeScene change_arena_scene(double noise_std, const ArenaLayout& a = ArenaLayout{}) {
  ChangeScene out;
  SceneScript& scene = out.scene;
  scene = static_arena_scene(10, 1, noise_std, a);
  scene.traversals = 2;

  const auto pose1 = [&](int id) { return scene.objects[id - 1].pose_by_traversal.at(1); };

  // walls 2, 5, 8 move sideways by 1.4 m; wall 4 is removed; wall 11 appears
  out.moved_ids = {2, 5, 8};
  out.removed_ids = {4};
  for (auto& obj : scene.objects) obj.pose_by_traversal[2] = obj.pose_by_traversal.at(1);
  for (int id : out.moved_ids) {
    ObjectPose moved = pose1(id);
    moved.xy.y() += (id == 8) ? -1.4 : 1.4;
    scene.objects[id - 1].pose_by_traversal[2] = moved;
    out.old_poses.push_back(pose1(id));
  }
  for (int id : out.removed_ids) {
    scene.objects[id - 1].pose_by_traversal.erase(2);
    out.old_poses.push_back(pose1(id));
  }
  SceneObject added = wall_object(11, 25.0, 0.0, 0.2, a);
  added.pose_by_traversal.clear();
  added.pose_by_traversal[2] = ObjectPose{{25.0, 0.0}, 0.2};
  scene.objects.push_back(added);
  out.added_ids = {11};

  std::vector<ObjectPose> stops = out.old_poses;  // inspect vacated spots first
  for (const auto& obj : scene.objects) {
    if (obj.pose_by_traversal.count(2)) stops.push_back(obj.pose_by_traversal.at(2));
  }
  scene.trajectories.push_back(orbit_tour(2, stops, a));
  return out;
}

struct MoverScene {
  SceneScript scene;
  int mover_id = 0;
  ObjectPose mover_final;
  std::vector<ObjectPose> mover_path;  // sampled poses while it translates
};

/// Dynamics robustness scene: one robot-class prism translates along a lane
/// inside a single traversal while the camera tracks it, then the lane is
/// swept again and two static walls are mapped.
inline MoverScene mover_scene(double noise_std, const ArenaLayout& a = ArenaLayout{}) {
  MoverScene out;
  SceneScript& scene = out.scene;
  scene.traversals = 1;
  scene.frame_rate = 5.0;
  scene.camera = scenario_camera();
  scene.noise_std = noise_std;
  scene.gt_voxel_size = 0.1;
  scene.seed = 19;

  scene.objects.push_back(wall_object(1, 0.0, 5.0, 0.0, a));
  scene.objects.push_back(wall_object(2, 8.0, 5.0, 0.4, a));

  SceneObject mover;
  mover.id = 3;
  mover.semantic_class = 4;  // robot
  mover.height = 0.8;
  mover.footprint = {{0.3, 0.3}, {-0.3, 0.3}, {-0.3, -0.3}, {0.3, -0.3}};
  mover.pose_by_traversal[1] = ObjectPose{{1.0, 0.0}, 0.0};
  const double v = 0.8, t0 = 4.0, t1 = 10.0;
  mover.motions.push_back({1, {v, 0.0}, t0, t1});
  scene.objects.push_back(mover);
  out.mover_id = 3;
  out.mover_final = object_pose_at(mover, 1, t1);
  for (double t = t0; t < t1; t += 0.25) {
    out.mover_path.push_back(object_pose_at(mover, 1, t));
  }

  Trajectory traj;
  traj.traversal = 1;
  const double z = a.camera_height, pitch = a.camera_pitch;
  const double yaw_north = kPi / 2.0;
  // watch the parked mover, then track it down the lane
  traj.waypoints.push_back({0.0, {1.0, -1.8, z}, yaw_north, pitch});
  traj.waypoints.push_back({t0, {1.0, -1.8, z}, yaw_north, pitch});
  traj.waypoints.push_back({t1, {1.0 + v * (t1 - t0), -1.8, z}, yaw_north, pitch});
  // dwell on the parked mover
  traj.waypoints.push_back({t1 + 4.0, {1.0 + v * (t1 - t0), -1.8, z}, yaw_north, pitch});
  // sweep the lane back and forth to re-inspect the vacated stretch
  traj.waypoints.push_back({t1 + 11.0, {0.5, -1.8, z}, yaw_north, pitch});
  traj.waypoints.push_back({t1 + 18.0, {1.0 + v * (t1 - t0), -1.8, z}, yaw_north, pitch});
  Trajectory lane = traj;

  // then tour the two walls
  TrajectoryBuilder builder(1, a);
  builder.add({lane.waypoints.back().p.x(), lane.waypoints.back().p.y()}, yaw_north);
  builder.orbit(scene.objects[0].pose_by_traversal.at(1));
  builder.approach(scene.objects[1].pose_by_traversal.at(1));
  builder.orbit(scene.objects[1].pose_by_traversal.at(1));
  Trajectory tour = builder.finish();
  for (std::size_t i = 1; i < tour.waypoints.size(); ++i) {
    TrajectoryWaypoint wp = tour.waypoints[i];
    wp.t += lane.waypoints.back().t;
    lane.waypoints.push_back(wp);
  }
  scene.trajectories.push_back(lane);
  return out;
}

/// Pipeline configuration matched to the synthetic arenas: 0.1 m voxels on
/// the ground-truth lattice.
inline PipelineConfig scenario_config() {
  PipelineConfig cfg;
  cfg.tsdf.voxel_size = 0.1;
  cfg.tsdf.truncation = 0.2;  // below the wall thickness, so faces stay crisp
  cfg.camera = scenario_camera();
  cfg.geometry.cluster_min_points = 60;
  cfg.geometry.min_plane_points = 150;
  cfg.export_min_weight = 2.0;
  cfg.finalize();
  return cfg;
}

}  // namespace semistatic::testing
