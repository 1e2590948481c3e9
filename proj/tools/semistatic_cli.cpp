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

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "semistatic/eval.hpp"
#include "semistatic/pipeline.hpp"
#include "semistatic/simworld.hpp"

namespace {

int cmd_simulate(const std::string& scene_path, const std::string& out_dir) {
  const semistatic::SceneScript scene = semistatic::load_scene(scene_path);
  semistatic::generate_dataset(scene, out_dir);
  int frames = 0;
  for (const auto& r : semistatic::load_manifest(out_dir + "/manifest.txt").ranges) {
    frames = r.last + 1;
  }
  std::cout << "dataset written to " << out_dir << " (" << frames << " frames, "
            << scene.traversals << " traversals)\n";
  return 0;
}

int cmd_run(const std::string& dataset_dir, const std::string& config_path,
            const std::string& out_dir, int eval_every) {
  const semistatic::RunReport report =
      semistatic::run_replay(dataset_dir, config_path, out_dir, eval_every);
  std::printf("frames: %d\n", report.frames);
  std::printf("final precision: %.4f  recall: %.4f  fpr: %.4f\n",
              report.final_metrics.precision, report.final_metrics.recall,
              report.final_metrics.fpr);
  std::cout << "report written to " << out_dir << "/report.json\n";
  return 0;
}

int cmd_eval(const std::string& recon_path, const std::string& ref_path, double voxel_size,
             double pad, const std::string& out_path) {
  const semistatic::VoxelSet recon = semistatic::load_voxel_set(recon_path);
  const semistatic::VoxelSet ref = semistatic::load_voxel_set(ref_path);
  const semistatic::Aabb universe = semistatic::voxel_set_bounds(ref, voxel_size, pad);
  const semistatic::MapComparison m =
      semistatic::compare_maps(recon, ref, universe, voxel_size);
  const nlohmann::json j = semistatic::to_json(m);
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_trace(const std::string& report_path, const std::string& out_dir) {
  std::ifstream in(report_path);
  if (!in) throw std::runtime_error("cannot open report: " + report_path);
  nlohmann::json j;
  in >> j;
  const semistatic::RunReport report = semistatic::report_from_json(j);
  semistatic::export_plots_data(report, out_dir);
  std::cout << "wrote " << out_dir << "/metrics_series.csv and " << out_dir
            << "/object_traces.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-level change detection and TSDF mapping for semi-static scenes"};
  app.require_subcommand(1);

  std::string scene_path, dataset_dir, config_path, out_dir = "out";
  std::string recon_path, ref_path, report_path, out_path;
  double voxel_size = 0.1, pad = 1.0;
  int eval_every = 25;

  auto* simulate = app.add_subcommand("simulate", "Render a scene script into a dataset");
  simulate->add_option("--scene", scene_path, "Scene script file")->required();
  simulate->add_option("--out", out_dir, "Output dataset directory")->required();

  auto* run = app.add_subcommand("run", "Replay a dataset through the mapping pipeline");
  run->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  run->add_option("--config", config_path, "Run configuration file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--eval-every", eval_every, "Frames between map evaluations");

  auto* eval = app.add_subcommand("eval", "Compare two voxel dumps");
  eval->add_option("--recon", recon_path, "Reconstructed voxel dump")->required();
  eval->add_option("--ref", ref_path, "Reference voxel dump")->required();
  eval->add_option("--voxel-size", voxel_size, "Voxel size in meters")->required();
  eval->add_option("--pad", pad, "Universe padding around the reference bounds (m)");
  eval->add_option("--out", out_path, "Optional metrics JSON output path");

  auto* trace = app.add_subcommand("trace", "Export plot CSVs from a report");
  trace->add_option("--report", report_path, "report.json from a run")->required();
  trace->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(scene_path, out_dir);
    if (run->parsed()) return cmd_run(dataset_dir, config_path, out_dir, eval_every);
    if (eval->parsed()) return cmd_eval(recon_path, ref_path, voxel_size, pad, out_path);
    if (trace->parsed()) return cmd_trace(report_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
