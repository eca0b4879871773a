// Copyright 2026 The Panoptic Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Run configuration and the command runners behind the CLI. The CLI
// executable is a thin argv shell over these functions, so a command's
// outputs are byte-identical to the equivalent library calls.

#ifndef PANOPTIC_PIPELINE_HPP_
#define PANOPTIC_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "panoptic/coco_io.hpp"
#include "panoptic/expert_merge.hpp"
#include "panoptic/fusion.hpp"
#include "panoptic/metrics.hpp"
#include "panoptic/semantic_ensemble.hpp"
#include "panoptic/synthgen.hpp"

namespace panoptic {

/// One run's inputs and knobs, loaded from a JSON config file. Relative
/// paths resolve against the config file's directory. Commands validate
/// only the fields they need.
struct RunConfig {
  uint64_t seed = 0;
  int parallelism = 0;
  std::filesystem::path output_dir;

  std::filesystem::path gt_manifest;
  std::filesystem::path gt_panoptic_dir;
  std::filesystem::path gt_semantic_dir;
  std::filesystem::path gt_instances;

  std::map<std::string, std::filesystem::path> expert_predictions;
  std::vector<std::filesystem::path> semantic_model_dirs;
  std::filesystem::path pred_panoptic_manifest;
  std::filesystem::path pred_panoptic_dir;
  std::filesystem::path pred_semantic_dir;
  std::filesystem::path pred_instances;

  ExpertRouting routing;
  FusionParams fusion;

  static RunConfig from_json_file(const std::filesystem::path& path);
  static RunConfig from_json_string(const std::string& text,
                                    const std::filesystem::path& base_dir);
};

/// Synthetic dataset request: `scenes` scenes generated from consecutive
/// seeds starting at the base scene's rng_seed.
struct SynthSpec {
  int scenes = 1;
  SceneSpec scene;
  ExpertRouting routing;

  static SynthSpec from_json_file(const std::filesystem::path& path);
  static SynthSpec from_json_string(const std::string& text);
};

/// A dataset held in memory, images in manifest order.
struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<PanopticImage> gt_panoptic;  // empty unless loaded with GT
  std::vector<std::map<std::string, std::vector<ScoredInstance>>>
      expert_predictions;
  std::vector<std::vector<SemanticConfidenceMap>> semantic_maps;
};

LoadedDataset load_dataset(const RunConfig& config, bool with_gt_panoptic);

/// All experts' predictions pooled without routing, in (expert name, input
/// index) order: the single-model stand-in the combination matrix compares
/// against.
std::vector<ScoredInstance> pool_expert_predictions(
    const std::map<std::string, std::vector<ScoredInstance>>& per_expert);

struct MatrixRow {
  std::string strategy;
  std::string instance_source;
  std::string semantic_source;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
};

struct MatrixReport {
  std::vector<MatrixRow> rows;
};

std::string matrix_report_json(const MatrixReport& report);
std::string matrix_report_table(const MatrixReport& report);

/// Runs the four combination strategies (baseline, +experts, +ensemble,
/// +experts+ensemble) over one dataset and evaluates PQ against the GT.
MatrixReport run_matrix(const LoadedDataset& data, const ExpertRouting& routing,
                        const FusionParams& params, int parallelism);

// ---------------------------------------------------------------------------
// Command runners. Each command writes into a fresh directory (staged and
// atomically renamed into place), so failures never leave partial outputs.

/// Generates a dataset at `out_dir`: GT manifest + PNGs, converted
/// semantic GT, GT instances, degraded per-expert predictions, per-model
/// confidence maps, and a prewired config.json.
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// expert merge -> semantic ensemble -> argmax -> greedy fusion; writes
/// the fused panoptic JSON+PNGs, predicted semantic label PNGs, merged
/// instance results and fusion statistics under output_dir/fuse.
FusionStats cmd_fuse(const RunConfig& config);

/// Reports under output_dir/eval-pq (or -miou, -map): report.json and
/// report.txt.
MetricReport cmd_eval_pq(const RunConfig& config);
MetricReport cmd_eval_miou(const RunConfig& config);
MetricReport cmd_eval_map(const RunConfig& config);

/// Combination matrix report under output_dir/matrix.
MatrixReport cmd_matrix(const RunConfig& config);

/// One colorized PNG per annotation plus a legend.json, under `out_dir`.
void cmd_visualize(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& png_dir,
                   const std::filesystem::path& out_dir);

/// Checks manifest/raster consistency; missing PNG files are reported,
/// not fatal.
ValidationReport cmd_validate(const std::filesystem::path& manifest_path,
                              const std::filesystem::path& png_dir);

}  // namespace panoptic

#endif  // PANOPTIC_PIPELINE_HPP_
