#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "semistatic/tsdf.hpp"
#include "semistatic/types.hpp"
#include "support/clouds.hpp"

namespace semistatic {
namespace {

using testing::frontal_plane;

// Independent recomputation of the change measure: walk the dense index box
// covering both grids and accumulate from raw cell lookups.
double voxel_walk_change(const TsdfGrid& a, const TsdfGrid& b, double p_z, double lambda) {
  int lo[3] = {INT32_MAX, INT32_MAX, INT32_MAX};
  int hi[3] = {INT32_MIN, INT32_MIN, INT32_MIN};
  const auto grow = [&](const TsdfGrid& g) {
    for (const auto& [k, c] : g.cells()) {
      lo[0] = std::min(lo[0], k.i);
      lo[1] = std::min(lo[1], k.j);
      lo[2] = std::min(lo[2], k.k);
      hi[0] = std::max(hi[0], k.i);
      hi[1] = std::max(hi[1], k.j);
      hi[2] = std::max(hi[2], k.k);
    }
  };
  grow(a);
  grow(b);
  double sum = 0.0;
  long count = 0;
  for (int i = lo[0]; i <= hi[0]; ++i) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int k = lo[2]; k <= hi[2]; ++k) {
        const TsdfCell* ca = a.find(VoxelKey{i, j, k});
        const TsdfCell* cb = b.find(VoxelKey{i, j, k});
        if (!ca || !cb) continue;
        if (!(ca->weight > 0.0) || !(cb->weight > 0.0)) continue;
        sum += std::abs(ca->value - cb->value);
        ++count;
      }
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return (p_z >= 0.0 ? 1.0 : -1.0) * lambda * sum / count;
}

TEST(Integrate, SinglePointSignConvention) {
  TsdfGrid grid(0.05, 0.15);
  LabeledCloud cloud;
  cloud.push_back(Eigen::Vector3d(0, 0, 2.0), 1);
  grid.integrate_cloud(cloud, Eigen::Vector3d::Zero());

  const TsdfCell* at_surface = grid.find(grid.voxel_of(Eigen::Vector3d(0, 0, 2.0)));
  ASSERT_NE(at_surface, nullptr);
  EXPECT_NEAR(at_surface->value, 0.0, 0.05);

  const TsdfCell* nearer = grid.find(grid.voxel_of(Eigen::Vector3d(0, 0, 1.9)));
  ASSERT_NE(nearer, nullptr);
  EXPECT_NEAR(nearer->value, 0.10, 0.05);
  EXPECT_GT(nearer->value, 0.0);  // free side positive

  const TsdfCell* behind = grid.find(grid.voxel_of(Eigen::Vector3d(0, 0, 2.1)));
  ASSERT_NE(behind, nullptr);
  EXPECT_LT(behind->value, 0.0);
}

TEST(Integrate, TwiceDoublesWeightsKeepsValues) {
  TsdfGrid once(0.05, 0.2);
  TsdfGrid twice(0.05, 0.2);
  const LabeledCloud cloud = frontal_plane(1.5, 0.3, 0.3, 0.05);
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  once.integrate_cloud(cloud, origin);
  twice.integrate_cloud(cloud, origin);
  twice.integrate_cloud(cloud, origin);
  ASSERT_EQ(once.size(), twice.size());
  for (const auto& [k, c] : once.cells()) {
    const TsdfCell* c2 = twice.find(k);
    ASSERT_NE(c2, nullptr);
    EXPECT_NEAR(c2->value, c.value, 1e-12);
    EXPECT_NEAR(c2->weight, 2.0 * c.weight, 1e-12);
  }
}

TEST(Integrate, WeightsNeverDecreaseValuesClamped) {
  TsdfGrid grid(0.05, 0.2);
  const Eigen::Vector3d origin(0, 0, 0);
  std::map<VoxelKey, double> last_weight;
  for (double depth : {1.0, 1.1, 0.9, 1.3}) {
    grid.integrate_cloud(frontal_plane(depth, 0.2, 0.2, 0.05), origin);
    for (const auto& [k, c] : grid.cells()) {
      EXPECT_LE(std::abs(c.value), grid.truncation() + 1e-12);
      EXPECT_GT(c.weight, 0.0);
      auto it = last_weight.find(k);
      if (it != last_weight.end()) EXPECT_GE(c.weight, it->second);
      last_weight[k] = c.weight;
    }
  }
}

TEST(Integrate, PlaneSurfaceVoxelsNearZero) {
  // Plane at z = 3 rendered through a 640x360 pinhole: every voxel whose
  // center is crossed by the surface stays below one voxel of error.
  const CameraModel cam{380.0, 380.0, 320.0, 180.0, 640, 360, 8.0};
  LabeledCloud cloud;
  for (int v = 0; v < cam.height; v += 2) {
    for (int u = 0; u < cam.width; u += 2) {
      const Eigen::Vector3d dir = cam.pixel_ray(u, v);
      cloud.push_back(dir * (3.0 / dir.z()), 1);
    }
  }
  TsdfGrid grid(0.05, 0.2);
  grid.integrate_cloud(cloud, Eigen::Vector3d::Zero());
  // brute-force ray/plane oracle: voxels containing the plane surface
  int checked = 0;
  for (const auto& [k, c] : grid.cells()) {
    const Eigen::Vector3d center = grid.center_of(k);
    if (std::abs(center.z() - 3.0) < 0.5 * grid.voxel_size()) {
      EXPECT_LT(std::abs(c.value), grid.voxel_size()) << "voxel near surface";
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(BuildLocal, SinglePointBandOnAxis) {
  LabeledCloud cloud;
  cloud.push_back(Eigen::Vector3d(0, 0, 1.0), 2);
  const TsdfGrid grid = build_local_tsdf(cloud, TsdfParams{0.05, 0.2});
  ASSERT_GT(grid.size(), 0u);
  for (const auto& [k, c] : grid.cells()) {
    const Eigen::Vector3d center = grid.center_of(k);
    EXPECT_LT(std::hypot(center.x(), center.y()), 0.1) << "cells hug the +z axis";
    EXPECT_GE(center.z(), 1.0 - 0.2 - 0.1);
    EXPECT_LE(center.z(), 1.0 + 0.2 + 0.1);
    EXPECT_GT(c.weight, 0.0);
    EXPECT_EQ(c.label, 2);
  }
}

TEST(BuildLocal, DeterministicAndThrowsOnEmpty) {
  const LabeledCloud cloud = frontal_plane(2.0, 0.4, 0.4, 0.05);
  const TsdfGrid a = build_local_tsdf(cloud, TsdfParams{0.05, 0.2});
  const TsdfGrid b = build_local_tsdf(cloud, TsdfParams{0.05, 0.2});
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [k, c] : a.cells()) {
    const TsdfCell* c2 = b.find(k);
    ASSERT_NE(c2, nullptr);
    EXPECT_EQ(c.value, c2->value);
    EXPECT_EQ(c.weight, c2->weight);
  }
  EXPECT_THROW(build_local_tsdf(LabeledCloud{}, TsdfParams{0.05, 0.2}), std::invalid_argument);
}

TEST(BuildLocal, PlaneCellCountMatchesRayMarchOracle) {
  // 1m x 1m fronto-parallel plane at z = 2. The oracle marches every ray in
  // fine steps and collects the voxels within truncation of its endpoint.
  // The patch is offset so its rim does not sit exactly on voxel boundaries,
  // where grazing-corner ties make "touched" ambiguous.
  const TsdfParams params{0.05, 0.2};
  LabeledCloud cloud = frontal_plane(2.003, 0.5, 0.5, 0.025);
  for (auto& p : cloud.pts) p += Eigen::Vector3d(0.013, -0.007, 0.0);
  const TsdfGrid grid = build_local_tsdf(cloud, params);

  VoxelSet oracle;
  for (const auto& p : cloud.pts) {
    const double depth = p.norm();
    const Eigen::Vector3d dir = p / depth;
    const double step = params.voxel_size / 32.0;
    const double t1 = depth + params.truncation;
    for (double t = std::max(depth - params.truncation, 0.0); t <= t1; t += step) {
      oracle.insert(point_to_voxel(t * dir, params.voxel_size));
    }
    oracle.insert(point_to_voxel(t1 * dir, params.voxel_size));
  }
  const double count = static_cast<double>(grid.size());
  const double expected = static_cast<double>(oracle.size());
  EXPECT_NEAR(count, expected, 0.02 * expected);
}

TEST(TsdfChange, IdenticalGridsZero) {
  const LabeledCloud cloud = frontal_plane(2.0, 0.5, 0.5, 0.05);
  const TsdfGrid a = build_local_tsdf(cloud, TsdfParams{0.05, 0.2});
  const TsdfGrid b = build_local_tsdf(cloud, TsdfParams{0.05, 0.2});
  const auto delta = tsdf_change(a, b, 0.0, 20.0);
  ASSERT_TRUE(delta.has_value());
  EXPECT_EQ(*delta, 0.0);
}

TEST(TsdfChange, PlaneShiftMatchesVoxelWalkOracle) {
  const TsdfParams params{0.05, 0.2};
  const TsdfGrid a = build_local_tsdf(frontal_plane(2.0, 0.5, 0.5, 0.05), params);
  const TsdfGrid b = build_local_tsdf(frontal_plane(2.3, 0.5, 0.5, 0.05), params);
  const auto delta = tsdf_change(a, b, 0.3, 1.0);
  ASSERT_TRUE(delta.has_value());
  EXPECT_GT(*delta, 0.0);
  const double oracle = voxel_walk_change(a, b, 0.3, 1.0);
  ASSERT_FALSE(std::isnan(oracle));
  EXPECT_NEAR(*delta, oracle, 1e-9);
}

TEST(TsdfChange, SignFlipsWithCameraZOffset) {
  const TsdfParams params{0.05, 0.2};
  const TsdfGrid a = build_local_tsdf(frontal_plane(2.0, 0.5, 0.5, 0.05), params);
  const TsdfGrid b = build_local_tsdf(frontal_plane(2.3, 0.5, 0.5, 0.05), params);
  const auto front = tsdf_change(a, b, 0.3, 1.0);
  const auto behind = tsdf_change(a, b, -0.3, 1.0);
  ASSERT_TRUE(front.has_value() && behind.has_value());
  EXPECT_GT(*front, 0.0);
  EXPECT_DOUBLE_EQ(*front, -*behind);
}

TEST(TsdfChange, SwapSymmetricInMagnitude) {
  const TsdfParams params{0.05, 0.2};
  const TsdfGrid a = build_local_tsdf(frontal_plane(1.8, 0.4, 0.4, 0.05), params);
  const TsdfGrid b = build_local_tsdf(frontal_plane(1.95, 0.4, 0.4, 0.05), params);
  const auto ab = tsdf_change(a, b, 0.15, 2.0);
  const auto ba = tsdf_change(b, a, -0.15, 2.0);
  ASSERT_TRUE(ab.has_value() && ba.has_value());
  EXPECT_NEAR(std::abs(*ab), std::abs(*ba), 1e-12);
}

TEST(TsdfChange, MonotoneInPlaneShift) {
  const TsdfParams params{0.05, 0.2};
  const TsdfGrid base = build_local_tsdf(frontal_plane(2.0, 0.5, 0.5, 0.05), params);
  double prev = 0.0;
  for (double shift = 0.005; shift <= params.truncation + 1e-9; shift += 0.02) {
    const TsdfGrid moved = build_local_tsdf(frontal_plane(2.0 + shift, 0.5, 0.5, 0.05), params);
    const auto delta = tsdf_change(moved, base, shift, 1.0);
    ASSERT_TRUE(delta.has_value()) << "shift " << shift;
    EXPECT_GE(std::abs(*delta), prev - 1e-9) << "shift " << shift;
    prev = std::abs(*delta);
  }
  EXPECT_GT(prev, 0.0);
}

TEST(TsdfChange, NoOverlapIsAnError) {
  const TsdfParams params{0.05, 0.2};
  const TsdfGrid a = build_local_tsdf(frontal_plane(1.0, 0.2, 0.2, 0.05), params);
  const TsdfGrid b = build_local_tsdf(frontal_plane(4.0, 0.2, 0.2, 0.05), params);
  EXPECT_FALSE(tsdf_change(a, b, 3.0, 1.0).has_value());
}

TEST(TsdfChange, MismatchedGridsThrow) {
  const TsdfGrid a(0.05, 0.2);
  const TsdfGrid b(0.1, 0.4);
  EXPECT_THROW(tsdf_change(a, b, 0.0, 1.0), std::invalid_argument);
}

TEST(ClearVoxels, FootprintIsolation) {
  TsdfGrid map(0.05, 0.2);
  const Eigen::Vector3d cam_a(0, 0, 1.0), cam_b(4, 0, 1.0);
  LabeledCloud object_a;
  for (double x = -0.3; x <= 0.3; x += 0.05) {
    for (double y = -0.3; y <= 0.3; y += 0.05) {
      object_a.push_back(Eigen::Vector3d(x, y, 2.0), 1);
    }
  }
  LabeledCloud object_b = object_a;
  for (auto& p : object_b.pts) p.x() += 4.0;

  VoxelSet footprint_a, footprint_b;
  map.integrate_cloud(object_a, cam_a, &footprint_a);
  map.integrate_cloud(object_b, cam_b, &footprint_b);

  TsdfGrid only_b(0.05, 0.2);
  only_b.integrate_cloud(object_b, cam_b);

  map.clear_voxels(footprint_a);
  ASSERT_EQ(map.size(), only_b.size());
  for (const auto& [k, c] : only_b.cells()) {
    const TsdfCell* cell = map.find(k);
    ASSERT_NE(cell, nullptr);
    EXPECT_EQ(cell->value, c.value);
    EXPECT_EQ(cell->weight, c.weight);
  }
  // clearing everything empties the map; empty footprint is a no-op
  map.clear_voxels(footprint_b);
  EXPECT_TRUE(map.empty());
  map.clear_voxels(VoxelSet{});
  EXPECT_TRUE(map.empty());
}

TEST(ExportOccupied, PlaneSlabAndThresholds) {
  TsdfGrid grid(0.05, 0.2);
  grid.integrate_cloud(frontal_plane(2.0, 0.4, 0.4, 0.02), Eigen::Vector3d::Zero());
  const VoxelSet slab = grid.export_occupied(0.5 * grid.voxel_size());
  ASSERT_FALSE(slab.empty());
  int min_k = INT32_MAX, max_k = INT32_MIN;
  for (const auto& k : slab) {
    min_k = std::min(min_k, k.k);
    max_k = std::max(max_k, k.k);
  }
  EXPECT_LE(max_k - min_k + 1, 2) << "surface slab should be 1-2 voxels thick";

  EXPECT_TRUE(TsdfGrid(0.05, 0.2).export_occupied(0.05).empty());
  // weight threshold above every weight leaves nothing
  EXPECT_TRUE(grid.export_occupied(0.05, 1e9).empty());
}

TEST(ExportFormats, TextAndPly) {
  namespace fs = std::filesystem;
  TsdfGrid grid(0.1, 0.4);
  LabeledCloud cloud;
  cloud.push_back(Eigen::Vector3d(0.05, 0.05, 1.05), 1);
  grid.integrate_cloud(cloud, Eigen::Vector3d::Zero());
  const VoxelSet occ = grid.export_occupied(0.06);
  const std::string dir = (fs::temp_directory_path() / "semistatic_tsdf_test").string();
  fs::create_directories(dir);
  write_occupancy_text(grid, occ, dir + "/occ.txt");
  write_ply(grid, occ, dir + "/occ.ply");

  std::ifstream text(dir + "/occ.txt");
  std::string line;
  ASSERT_TRUE(std::getline(text, line));
  int i, j, k;
  double x, y, z;
  ASSERT_EQ(std::sscanf(line.c_str(), "%d %d %d %lf %lf %lf", &i, &j, &k, &x, &y, &z), 6);
  EXPECT_EQ(i, 0);
  EXPECT_EQ(j, 0);
  EXPECT_EQ(k, 10);
  EXPECT_NEAR(x, 0.05, 1e-9);
  EXPECT_NEAR(z, 1.05, 1e-9);

  std::ifstream ply(dir + "/occ.ply");
  ASSERT_TRUE(std::getline(ply, line));
  EXPECT_EQ(line, "ply");
}

}  // namespace
}  // namespace semistatic
