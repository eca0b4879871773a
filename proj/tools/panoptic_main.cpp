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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "panoptic/pipeline.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<int> parallelism;
  std::optional<uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration JSON")
        ->required();
    cmd->add_option("--output-dir", output_dir,
                    "override the config's output directory");
    cmd->add_option("--parallelism", parallelism,
                    "override the worker count (0 = all cores)");
    cmd->add_option("--seed", seed, "override the config's seed");
  }

  panoptic::RunConfig load() const {
    panoptic::RunConfig config =
        panoptic::RunConfig::from_json_file(config_path);
    if (output_dir) config.output_dir = *output_dir;
    if (parallelism) config.parallelism = *parallelism;
    if (seed) config.seed = *seed;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoptic segmentation fusion and evaluation toolkit"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  std::string manifest_path;
  std::string png_dir;

  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic dataset with ground truth and "
               "degraded predictions");
  synth->add_option("--spec", spec_path, "synth spec JSON")->required();
  synth->add_option("--out", out_dir, "dataset output directory")->required();

  ConfigFlags fuse_flags;
  CLI::App* fuse = app.add_subcommand(
      "fuse", "merge experts, ensemble semantics and fuse into panoptic "
              "predictions");
  fuse_flags.attach(fuse);

  ConfigFlags pq_flags;
  CLI::App* eval_pq =
      app.add_subcommand("eval-pq", "evaluate panoptic quality (PQ/SQ/RQ)");
  pq_flags.attach(eval_pq);

  ConfigFlags miou_flags;
  CLI::App* eval_miou =
      app.add_subcommand("eval-miou", "evaluate semantic mIoU");
  miou_flags.attach(eval_miou);

  ConfigFlags map_flags;
  CLI::App* eval_map =
      app.add_subcommand("eval-map", "evaluate instance mAP (bbox and mask)");
  map_flags.attach(eval_map);

  ConfigFlags matrix_flags;
  CLI::App* matrix = app.add_subcommand(
      "matrix", "run the four combination strategies and report PQ");
  matrix_flags.attach(matrix);

  CLI::App* visualize =
      app.add_subcommand("visualize", "colorize panoptic segmentations");
  visualize->add_option("--manifest", manifest_path, "panoptic JSON manifest")
      ->required();
  visualize->add_option("--png-dir", png_dir, "directory of id PNGs")
      ->required();
  visualize->add_option("--out", out_dir, "output directory")->required();

  CLI::App* validate = app.add_subcommand(
      "validate", "check manifest and raster consistency");
  validate->add_option("--manifest", manifest_path, "panoptic JSON manifest")
      ->required();
  validate->add_option("--png-dir", png_dir, "directory of id PNGs")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const panoptic::SynthSpec spec =
          panoptic::SynthSpec::from_json_file(spec_path);
      panoptic::cmd_synth(spec, out_dir);
    } else if (fuse->parsed()) {
      const panoptic::FusionStats stats = panoptic::cmd_fuse(fuse_flags.load());
      std::printf(
          "instances: %llu total, %llu below score threshold, %llu dropped "
          "for overlap; stuff segments dropped: %llu; void fraction: %.4f\n",
          static_cast<unsigned long long>(stats.instances_total),
          static_cast<unsigned long long>(stats.instances_dropped_score),
          static_cast<unsigned long long>(stats.instances_dropped_overlap),
          static_cast<unsigned long long>(stats.stuff_segments_dropped),
          stats.void_fraction());
    } else if (eval_pq->parsed()) {
      const panoptic::RunConfig config = pq_flags.load();
      const panoptic::MetricReport report = panoptic::cmd_eval_pq(config);
      const panoptic::DatasetManifest gt =
          panoptic::read_manifest(config.gt_manifest);
      std::fputs(panoptic::metric_report_table(report, gt.categories).c_str(),
                 stdout);
    } else if (eval_miou->parsed()) {
      const panoptic::RunConfig config = miou_flags.load();
      const panoptic::MetricReport report = panoptic::cmd_eval_miou(config);
      const panoptic::DatasetManifest gt =
          panoptic::read_manifest(config.gt_manifest);
      std::fputs(panoptic::metric_report_table(report, gt.categories).c_str(),
                 stdout);
    } else if (eval_map->parsed()) {
      const panoptic::RunConfig config = map_flags.load();
      const panoptic::MetricReport report = panoptic::cmd_eval_map(config);
      const panoptic::DatasetManifest gt =
          panoptic::read_manifest(config.gt_manifest);
      std::fputs(panoptic::metric_report_table(report, gt.categories).c_str(),
                 stdout);
    } else if (matrix->parsed()) {
      const panoptic::MatrixReport report =
          panoptic::cmd_matrix(matrix_flags.load());
      std::fputs(panoptic::matrix_report_table(report).c_str(), stdout);
    } else if (visualize->parsed()) {
      panoptic::cmd_visualize(manifest_path, png_dir, out_dir);
    } else if (validate->parsed()) {
      const panoptic::ValidationReport report =
          panoptic::cmd_validate(manifest_path, png_dir);
      std::fputs(report.to_string().c_str(), stdout);
      if (report.ok()) std::fputs("\n", stdout);
      if (!report.ok()) return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
