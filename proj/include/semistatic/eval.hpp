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
#include <string>
#include <vector>

#include <json.hpp>

#include "semistatic/pipeline.hpp"
#include "semistatic/simworld.hpp"
#include "semistatic/tsdf.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

struct MapComparison {
  double precision = 1.0;
  double recall = 1.0;
  double fpr = 0.0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double voxel_size = 0.0;
};

/// Voxel-set overlap statistics. TN counts come from a voxelized universe:
/// the reference scene's axis-aligned bounds inflated by 1 m (the caller
/// passes the bounds so other conventions remain possible). Precision is 1
/// when nothing was reconstructed, by convention.
inline MapComparison compare_maps(const VoxelSet& recon, const VoxelSet& reference,
                                  const Aabb& universe, double voxel_size) {
  if (voxel_size <= 0.0) throw std::invalid_argument("compare_maps: voxel_size must be > 0");
  MapComparison m;
  m.voxel_size = voxel_size;
  for (const auto& k : recon) {
    if (reference.count(k)) {
      ++m.tp;
    } else {
      ++m.fp;
    }
  }
  m.fn = static_cast<long>(reference.size()) - m.tp;

  long universe_count = 0;
  if (universe.valid()) {
    const VoxelKey lo = point_to_voxel(universe.min, voxel_size);
    const VoxelKey hi = point_to_voxel(universe.max, voxel_size);
    universe_count = static_cast<long>(hi.i - lo.i + 1) * static_cast<long>(hi.j - lo.j + 1) *
                     static_cast<long>(hi.k - lo.k + 1);
  }
  m.tn = std::max(0L, universe_count - m.tp - m.fp - m.fn);

  m.precision = (m.tp + m.fp) == 0 ? 1.0 : static_cast<double>(m.tp) / (m.tp + m.fp);
  m.recall = (m.tp + m.fn) == 0 ? 1.0 : static_cast<double>(m.tp) / (m.tp + m.fn);
  m.fpr = (m.fp + m.tn) == 0 ? 0.0 : static_cast<double>(m.fp) / (m.fp + m.tn);
  return m;
}

inline Aabb voxel_set_bounds(const VoxelSet& set, double voxel_size, double pad) {
  Aabb box;
  for (const auto& k : set) box.expand(voxel_center(k, voxel_size));
  if (box.valid()) box.inflate(pad);
  return box;
}

/// Re-expresses surface voxel centers on a coarser (or equal) lattice.
inline VoxelSet revoxelize_centers(const TsdfGrid& grid, const VoxelSet& occupied,
                                   double voxel_size) {
  VoxelSet out;
  for (const auto& k : occupied) out.insert(point_to_voxel(grid.center_of(k), voxel_size));
  return out;
}

struct SeriesPoint {
  int frame = 0;
  MapComparison metrics;
};

struct ObjectTraceSummary {
  int id = -1;
  int semantic_class = 0;
  int spawned_frame = 0;
  bool pruned = false;
  GaussianBetaState final_state;
  std::map<std::string, int> event_counts;
  std::vector<TraceRow> rows;
};

struct RunReport {
  MapComparison final_metrics;
  std::vector<SeriesPoint> series;
  std::vector<ObjectTraceSummary> objects;
  double timing_cluster_associate_ms = 0.0;
  double timing_state_integrate_ms = 0.0;
  double timing_maintenance_ms = 0.0;
  int frames = 0;
};

inline std::vector<ObjectTraceSummary> summarize_trace(const std::vector<TraceRow>& trace) {
  std::map<int, ObjectTraceSummary> by_id;
  for (const auto& row : trace) {
    ObjectTraceSummary& s = by_id[row.object_id];
    if (s.id < 0) {
      s.id = row.object_id;
      s.spawned_frame = row.frame;
    }
    s.event_counts[row.event] += 1;
    s.final_state = row.state;
    if (row.event == "pruned") s.pruned = true;
    s.rows.push_back(row);
  }
  std::vector<ObjectTraceSummary> out;
  out.reserve(by_id.size());
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  return out;
}

inline nlohmann::json to_json(const MapComparison& m) {
  return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"fpr", m.fpr},
                        {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
                        {"tn", m.tn},               {"voxel_size", m.voxel_size}};
}

inline nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["final_metrics"] = to_json(report.final_metrics);
  j["series"] = nlohmann::json::array();
  for (const auto& p : report.series) {
    j["series"].push_back({{"frame", p.frame},
                           {"precision", p.metrics.precision},
                           {"recall", p.metrics.recall},
                           {"fpr", p.metrics.fpr}});
  }
  j["objects"] = nlohmann::json::array();
  for (const auto& o : report.objects) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : o.rows) {
      rows.push_back({r.frame, r.state.mu, r.state.sigma2, r.state.alpha, r.state.beta,
                      r.state.expected_v(), r.delta, r.s, r.event});
    }
    j["objects"].push_back({{"id", o.id},
                            {"class", o.semantic_class},
                            {"spawned_frame", o.spawned_frame},
                            {"pruned", o.pruned},
                            {"final_state",
                             {{"mu", o.final_state.mu},
                              {"sigma2", o.final_state.sigma2},
                              {"alpha", o.final_state.alpha},
                              {"beta", o.final_state.beta},
                              {"e_v", o.final_state.expected_v()}}},
                            {"events", o.event_counts},
                            {"trace", rows}});
  }
  j["timing_ms"] = {{"cluster_associate", report.timing_cluster_associate_ms},
                    {"state_integrate", report.timing_state_integrate_ms},
                    {"maintenance", report.timing_maintenance_ms}};
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport report;
  const auto& fm = j.at("final_metrics");
  report.final_metrics.precision = fm.at("precision");
  report.final_metrics.recall = fm.at("recall");
  report.final_metrics.fpr = fm.at("fpr");
  report.final_metrics.tp = fm.at("tp");
  report.final_metrics.fp = fm.at("fp");
  report.final_metrics.fn = fm.at("fn");
  report.final_metrics.tn = fm.at("tn");
  report.final_metrics.voxel_size = fm.at("voxel_size");
  for (const auto& p : j.at("series")) {
    SeriesPoint sp;
    sp.frame = p.at("frame");
    sp.metrics.precision = p.at("precision");
    sp.metrics.recall = p.at("recall");
    sp.metrics.fpr = p.at("fpr");
    report.series.push_back(sp);
  }
  for (const auto& o : j.at("objects")) {
    ObjectTraceSummary s;
    s.id = o.at("id");
    s.semantic_class = o.at("class");
    s.spawned_frame = o.at("spawned_frame");
    s.pruned = o.at("pruned");
    s.final_state.mu = o.at("final_state").at("mu");
    s.final_state.sigma2 = o.at("final_state").at("sigma2");
    s.final_state.alpha = o.at("final_state").at("alpha");
    s.final_state.beta = o.at("final_state").at("beta");
    for (auto it = o.at("events").begin(); it != o.at("events").end(); ++it) {
      s.event_counts[it.key()] = it.value();
    }
    for (const auto& r : o.at("trace")) {
      TraceRow row;
      row.frame = r.at(0);
      row.state.mu = r.at(1);
      row.state.sigma2 = r.at(2);
      row.state.alpha = r.at(3);
      row.state.beta = r.at(4);
      row.delta = r.at(6);
      row.s = r.at(7);
      row.event = r.at(8);
      row.object_id = s.id;
      s.rows.push_back(std::move(row));
    }
    report.objects.push_back(std::move(s));
  }
  return report;
}

inline void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "frame,object_id,mu,sigma2,alpha,beta,E_v,delta,s,event\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%s\n", r.frame,
                  r.object_id, r.state.mu, r.state.sigma2, r.state.alpha, r.state.beta,
                  r.state.expected_v(), r.delta, r.s, r.event.c_str());
    out << buf;
  }
}

/// Fig.-style CSV exports: the metrics time series and the per-object state
/// traces, reconstructed from a report.
inline void export_plots_data(const RunReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/metrics_series.csv");
    if (!out) throw std::runtime_error("cannot write metrics_series.csv");
    out << "frame,precision,recall,fpr\n";
    char buf[128];
    for (const auto& p : report.series) {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", p.frame, p.metrics.precision,
                    p.metrics.recall, p.metrics.fpr);
      out << buf;
    }
  }
  {
    std::vector<TraceRow> rows;
    for (const auto& o : report.objects) {
      rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    }
    std::stable_sort(rows.begin(), rows.end(), [](const TraceRow& a, const TraceRow& b) {
      return a.frame < b.frame || (a.frame == b.frame && a.object_id < b.object_id);
    });
    write_trace_csv(rows, out_dir + "/object_traces.csv");
  }
}

/// Replays a dataset through the pipeline. Every `eval_every` frames the
/// exported map is compared against the ground truth of the traversal the
/// frame belongs to; the final comparison uses the last traversal. Writes
/// report.json, trace.csv and the final map (text + PLY) into out_dir.
inline RunReport run_replay(const std::string& dataset_dir, PipelineConfig cfg,
                            const std::string& out_dir, int eval_every = 25) {
  namespace fs = std::filesystem;
  if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  const DatasetManifest manifest = load_manifest(dataset_dir + "/manifest.txt");
  const auto poses = load_poses(dataset_dir + "/poses.csv");
  if (static_cast<int>(poses.size()) != manifest.frame_count()) {
    throw std::runtime_error(dataset_dir + ": poses.csv rows do not match the manifest");
  }
  const SceneScript scene = load_scene(dataset_dir + "/scene.toml");
  const double gt_voxel = load_gt_voxel_size(dataset_dir);

  std::map<int, VoxelSet> gt_by_traversal;
  std::map<int, Aabb> universe_by_traversal;
  for (const auto& r : manifest.ranges) {
    if (gt_by_traversal.count(r.traversal)) continue;
    VoxelSet gt = load_voxel_set(gt_voxel_path(dataset_dir, r.traversal));
    universe_by_traversal[r.traversal] = voxel_set_bounds(gt, gt_voxel, 1.0);
    gt_by_traversal[r.traversal] = std::move(gt);
  }

  cfg.camera = scene.camera;
  cfg.finalize();
  Pipeline pipeline(cfg);

  RunReport report;
  report.frames = manifest.frame_count();
  double sum_cluster = 0.0, sum_state = 0.0, sum_maint = 0.0;

  const auto snapshot_metrics = [&](int frame) {
    const int traversal = manifest.traversal_of(frame);
    const VoxelSet occupied =
        pipeline.global_map().export_occupied(cfg.export_band, cfg.export_min_weight);
    const VoxelSet recon = revoxelize_centers(pipeline.global_map(), occupied, gt_voxel);
    return compare_maps(recon, gt_by_traversal.at(traversal),
                        universe_by_traversal.at(traversal), gt_voxel);
  };

  for (int frame = 0; frame < manifest.frame_count(); ++frame) {
    const LabeledCloud cloud = load_frame(frame_path(dataset_dir, frame));
    const FrameResult r = pipeline.process_frame(cloud, poses[frame].second, frame);
    sum_cluster += r.t_cluster_associate_ms;
    sum_state += r.t_state_integrate_ms;
    sum_maint += r.t_maintenance_ms;
    if ((frame + 1) % eval_every == 0) {
      report.series.push_back(SeriesPoint{frame, snapshot_metrics(frame)});
    }
  }
  report.final_metrics = snapshot_metrics(manifest.frame_count() - 1);
  report.objects = summarize_trace(pipeline.trace());
  if (cfg.report_timing && report.frames > 0) {
    report.timing_cluster_associate_ms = sum_cluster / report.frames;
    report.timing_state_integrate_ms = sum_state / report.frames;
    report.timing_maintenance_ms = sum_maint / report.frames;
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw std::runtime_error("cannot write report.json in " + out_dir);
    out << report_to_json(report).dump(2) << "\n";
  }
  write_trace_csv(pipeline.trace(), out_dir + "/trace.csv");
  const VoxelSet occupied =
      pipeline.global_map().export_occupied(cfg.export_band, cfg.export_min_weight);
  write_occupancy_text(pipeline.global_map(), occupied, out_dir + "/final_voxels.txt");
  write_ply(pipeline.global_map(), occupied, out_dir + "/final_map.ply");
  return report;
}

inline RunReport run_replay(const std::string& dataset_dir, const std::string& config_path,
                            const std::string& out_dir, int eval_every = 25) {
  return run_replay(dataset_dir, load_pipeline_config(config_path), out_dir, eval_every);
}

}  // namespace semistatic
