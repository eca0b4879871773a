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

#include "panoptic/pipeline.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <json.hpp>

namespace panoptic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Logging. PANOPTIC_LOG controls verbosity: quiet, info (default), debug.

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("PANOPTIC_LOG");
    if (env == nullptr) return 1;
    if (std::strcmp(env, "quiet") == 0) return 0;
    if (std::strcmp(env, "debug") == 0) return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= 1) {
    std::fprintf(stderr, "[panoptic] %s\n", message.c_str());
  }
}

// ---------------------------------------------------------------------------
// Staged output directory: build everything next to the target, then move
// it into place with one rename. The target must not exist beforehand.

class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    if (fs::exists(target_)) {
      throw Error("output directory " + target_.string() +
                  " already exists; pick a fresh directory");
    }
    static std::atomic<uint64_t> counter{0};
    staging_ = target_.string() + ".staging-" + std::to_string(::getpid()) +
               "-" + std::to_string(counter.fetch_add(1));
    if (!target_.parent_path().empty()) {
      fs::create_directories(target_.parent_path());
    }
    fs::create_directories(staging_);
  }

  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  void commit() {
    std::error_code ec;
    fs::rename(staging_, target_, ec);
    if (ec) {
      throw Error("rename of " + staging_.string() + " to " +
                  target_.string() + " failed: " + ec.message());
    }
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

// ---------------------------------------------------------------------------
// JSON helpers

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  if (value.empty() || p.is_absolute()) return p;
  return base / p;
}

ExpertRouting routing_from_json(const json& arr) {
  ExpertRouting routing;
  for (const auto& je : arr) {
    ExpertRouting::Expert expert;
    expert.name = je.at("name").get<std::string>();
    for (const auto& id : je.value("categories", json::array())) {
      expert.categories.insert(id.get<int32_t>());
    }
    expert.rest = je.value("rest", false);
    routing.experts.push_back(std::move(expert));
  }
  return routing;
}

json routing_to_json(const ExpertRouting& routing) {
  json arr = json::array();
  for (const auto& expert : routing.experts) {
    json je{{"name", expert.name}};
    if (!expert.categories.empty()) {
      je["categories"] = expert.categories;
    }
    if (expert.rest) je["rest"] = true;
    arr.push_back(std::move(je));
  }
  return arr;
}

ExpertRouting default_routing() {
  ExpertRouting routing;
  routing.experts.push_back({"all", {}, /*rest=*/true});
  return routing;
}

FusionParams fusion_from_json(const json& j) {
  FusionParams params;
  params.score_threshold = j.value("score_threshold", params.score_threshold);
  params.overlap_threshold =
      j.value("overlap_threshold", params.overlap_threshold);
  params.stuff_area_min = j.value("stuff_area_min", params.stuff_area_min);
  params.validate();
  return params;
}

json fusion_to_json(const FusionParams& params) {
  return json{{"score_threshold", params.score_threshold},
              {"overlap_threshold", params.overlap_threshold},
              {"stuff_area_min", params.stuff_area_min}};
}

const fs::path& require_path(const fs::path& p, const std::string& field,
                             const std::string& command) {
  if (p.empty()) {
    throw Error("config: " + field + " is required for " + command);
  }
  return p;
}

std::string stem_of(const std::string& file_name) {
  return fs::path(file_name).stem().string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

RunConfig RunConfig::from_json_string(const std::string& text,
                                      const fs::path& base_dir) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) throw Error("config is not valid JSON");

  RunConfig config;
  config.seed = root.value("seed", uint64_t{0});
  config.parallelism = root.value("parallelism", 0);
  if (root.contains("output_dir")) {
    config.output_dir = resolve(base_dir, root["output_dir"].get<std::string>());
  }

  if (root.contains("gt")) {
    const json& gt = root["gt"];
    if (gt.contains("manifest")) {
      config.gt_manifest = resolve(base_dir, gt["manifest"].get<std::string>());
    }
    if (gt.contains("panoptic_dir")) {
      config.gt_panoptic_dir =
          resolve(base_dir, gt["panoptic_dir"].get<std::string>());
    }
    if (gt.contains("semantic_dir")) {
      config.gt_semantic_dir =
          resolve(base_dir, gt["semantic_dir"].get<std::string>());
    }
    if (gt.contains("instances")) {
      config.gt_instances =
          resolve(base_dir, gt["instances"].get<std::string>());
    }
  }
  if (root.contains("predictions")) {
    const json& pred = root["predictions"];
    const json experts = pred.value("experts", json::object());
    for (const auto& [name, path] : experts.items()) {
      config.expert_predictions[name] =
          resolve(base_dir, path.get<std::string>());
    }
    const json model_dirs = pred.value("semantic_models", json::array());
    for (const auto& dir : model_dirs) {
      config.semantic_model_dirs.push_back(
          resolve(base_dir, dir.get<std::string>()));
    }
    if (pred.contains("panoptic_manifest")) {
      config.pred_panoptic_manifest =
          resolve(base_dir, pred["panoptic_manifest"].get<std::string>());
    }
    if (pred.contains("panoptic_dir")) {
      config.pred_panoptic_dir =
          resolve(base_dir, pred["panoptic_dir"].get<std::string>());
    }
    if (pred.contains("semantic_dir")) {
      config.pred_semantic_dir =
          resolve(base_dir, pred["semantic_dir"].get<std::string>());
    }
    if (pred.contains("instances")) {
      config.pred_instances =
          resolve(base_dir, pred["instances"].get<std::string>());
    }
  }
  config.routing = root.contains("routing") ? routing_from_json(root["routing"])
                                            : default_routing();
  config.fusion = root.contains("fusion") ? fusion_from_json(root["fusion"])
                                          : FusionParams{};
  return config;
}

RunConfig RunConfig::from_json_file(const fs::path& path) {
  try {
    return from_json_string(read_file_text(path), path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

SynthSpec SynthSpec::from_json_string(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) throw Error("synth spec is not valid JSON");

  SynthSpec spec;
  spec.scenes = root.value("scenes", 1);
  if (spec.scenes < 1) throw Error("scenes must be >= 1");
  SceneSpec& scene = spec.scene;
  scene.width = root.value("width", scene.width);
  scene.height = root.value("height", scene.height);
  scene.n_things = root.value("n_things", scene.n_things);
  if (root.contains("thing_categories")) {
    scene.thing_categories =
        root["thing_categories"].get<std::vector<int32_t>>();
  }
  if (root.contains("stuff_categories")) {
    scene.stuff_categories =
        root["stuff_categories"].get<std::vector<int32_t>>();
  }
  scene.rng_seed = root.value("base_seed", scene.rng_seed);
  scene.n_stuff_regions = root.value("n_stuff_regions", scene.n_stuff_regions);
  scene.thing_min_extent =
      root.value("thing_min_extent", scene.thing_min_extent);
  scene.thing_max_extent =
      root.value("thing_max_extent", scene.thing_max_extent);
  scene.n_semantic_models =
      root.value("n_semantic_models", scene.n_semantic_models);
  if (root.contains("degradation")) {
    const json& deg = root["degradation"];
    Degradation& d = scene.degradation;
    d.boundary_erosion_px =
        deg.value("boundary_erosion_px", d.boundary_erosion_px);
    d.false_positive_rate =
        deg.value("false_positive_rate", d.false_positive_rate);
    d.drop_rate = deg.value("drop_rate", d.drop_rate);
    d.score_noise_sigma = deg.value("score_noise_sigma", d.score_noise_sigma);
    d.semantic_flip_rate =
        deg.value("semantic_flip_rate", d.semantic_flip_rate);
  }
  spec.routing = root.contains("routing") ? routing_from_json(root["routing"])
                                          : default_routing();
  spec.scene.validate();
  return spec;
}

SynthSpec SynthSpec::from_json_file(const fs::path& path) {
  try {
    return from_json_string(read_file_text(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Dataset loading

LoadedDataset load_dataset(const RunConfig& config, bool with_gt_panoptic) {
  LoadedDataset data;
  data.manifest =
      read_manifest(require_path(config.gt_manifest, "gt.manifest", "load"));
  const size_t n = data.manifest.images.size();
  data.expert_predictions.resize(n);
  data.semantic_maps.resize(n);

  for (const auto& [name, path] : config.expert_predictions) {
    auto results = read_instance_results_file(path, data.manifest);
    for (size_t i = 0; i < n; ++i) {
      auto it = results.find(data.manifest.images[i].id);
      data.expert_predictions[i][name] =
          it == results.end() ? std::vector<ScoredInstance>{}
                              : std::move(it->second);
    }
  }

  for (const auto& dir : config.semantic_model_dirs) {
    for (size_t i = 0; i < n; ++i) {
      const ImageRecord& img = data.manifest.images[i];
      const fs::path path = dir / (stem_of(img.file_name) + ".cmap");
      SemanticConfidenceMap map = read_confidence_map_file(path);
      if (map.width != img.width || map.height != img.height) {
        throw Error(path.string() + ": dimensions do not match image " +
                    std::to_string(img.id));
      }
      data.semantic_maps[i].push_back(std::move(map));
    }
  }

  if (with_gt_panoptic) {
    require_path(config.gt_panoptic_dir, "gt.panoptic_dir", "load");
    std::map<int64_t, const PanopticAnnotation*> by_image;
    for (const auto& ann : data.manifest.annotations) {
      by_image[ann.image_id] = &ann;
    }
    for (size_t i = 0; i < n; ++i) {
      const ImageRecord& img = data.manifest.images[i];
      auto it = by_image.find(img.id);
      if (it == by_image.end()) {
        throw Error("image " + std::to_string(img.id) +
                    " has no panoptic annotation");
      }
      const IdRaster raster = read_panoptic_png_file(
          config.gt_panoptic_dir / it->second->file_name);
      if (raster.width != img.width || raster.height != img.height) {
        throw Error("image " + std::to_string(img.id) +
                    ": panoptic PNG dimensions do not match the manifest");
      }
      data.gt_panoptic.push_back(assemble_panoptic(*it->second, raster));
    }
  }
  return data;
}

std::vector<ScoredInstance> pool_expert_predictions(
    const std::map<std::string, std::vector<ScoredInstance>>& per_expert) {
  std::vector<ScoredInstance> pooled;
  for (const auto& [name, instances] : per_expert) {
    pooled.insert(pooled.end(), instances.begin(), instances.end());
  }
  return pooled;
}

// ---------------------------------------------------------------------------
// Combination matrix

MatrixReport run_matrix(const LoadedDataset& data, const ExpertRouting& routing,
                        const FusionParams& params, int parallelism) {
  const auto& categories = data.manifest.categories;
  const size_t n = data.manifest.images.size();
  if (data.gt_panoptic.size() != n) {
    throw Error("matrix needs the GT panoptic images loaded");
  }
  size_t n_models = 0;
  for (size_t i = 0; i < n; ++i) {
    if (data.semantic_maps[i].empty()) {
      throw Error("image " + std::to_string(data.manifest.images[i].id) +
                  " has no semantic confidence maps");
    }
    if (i == 0) {
      n_models = data.semantic_maps[i].size();
    } else if (data.semantic_maps[i].size() != n_models) {
      throw Error("semantic model count differs between images");
    }
  }

  struct PerImage {
    std::vector<ScoredInstance> pooled;
    std::vector<ScoredInstance> merged;
    LabelMap single;
    LabelMap ensembled;
  };
  std::vector<PerImage> prepared(n);
  EnsembleStats total_ensemble_stats;
  for (size_t i = 0; i < n; ++i) {
    prepared[i].pooled = pool_expert_predictions(data.expert_predictions[i]);
    prepared[i].merged = merge_expert_predictions(data.expert_predictions[i],
                                                  routing, categories);
    prepared[i].single = argmax_labels(data.semantic_maps[i][0]);
    EnsembleStats stats;
    prepared[i].ensembled =
        argmax_labels(ensemble_average(data.semantic_maps[i], &stats));
    total_ensemble_stats.renormalized += stats.renormalized;
  }
  if (total_ensemble_stats.renormalized > 0) {
    log_info("renormalized " +
             std::to_string(total_ensemble_stats.renormalized) +
             " drifted confidence vectors");
  }

  struct Strategy {
    std::string name;
    std::string instance_source;
    std::string semantic_source;
    bool use_merge;
    bool use_ensemble;
  };
  const std::string ensemble_desc =
      "ensemble of " + std::to_string(n_models) + " models";
  const std::vector<Strategy> strategies = {
      {"baseline", "pooled experts", "model_0", false, false},
      {"+experts", "expert routing", "model_0", true, false},
      {"+ensemble", "pooled experts", ensemble_desc, false, true},
      {"+experts+ensemble", "expert routing", ensemble_desc, true, true},
  };

  MatrixReport report;
  for (const Strategy& strategy : strategies) {
    std::vector<FusionInput> inputs(n);
    for (size_t i = 0; i < n; ++i) {
      inputs[i].image_id = data.manifest.images[i].id;
      inputs[i].instances =
          strategy.use_merge ? prepared[i].merged : prepared[i].pooled;
      inputs[i].semantic =
          strategy.use_ensemble ? prepared[i].ensembled : prepared[i].single;
    }
    const std::vector<PanopticImage> fused =
        fuse_batch(inputs, params, categories, parallelism);
    PqStats stats;
    for (size_t i = 0; i < n; ++i) {
      stats += pq_match(data.gt_panoptic[i], fused[i], categories);
    }
    const PqSummary summary = pq_summarize(stats);
    report.rows.push_back(MatrixRow{strategy.name, strategy.instance_source,
                                    strategy.semantic_source, summary.pq,
                                    summary.sq, summary.rq});
  }
  return report;
}

std::string matrix_report_json(const MatrixReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back(json{{"strategy", row.strategy},
                        {"instance", row.instance_source},
                        {"semantic", row.semantic_source},
                        {"pq", row.pq * 100.0},
                        {"sq", row.sq * 100.0},
                        {"rq", row.rq * 100.0}});
  }
  return json{{"rows", std::move(rows)}}.dump(2) + "\n";
}

std::string matrix_report_table(const MatrixReport& report) {
  std::string out;
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%-20s %-18s %-22s %8s %8s %8s\n",
                "strategy", "instance", "semantic", "PQ", "SQ", "RQ");
  out += buf;
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-20s %-18s %-22s %8.2f %8.2f %8.2f\n",
                  row.strategy.c_str(), row.instance_source.c_str(),
                  row.semantic_source.c_str(), row.pq * 100.0, row.sq * 100.0,
                  row.rq * 100.0);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// synth

void cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  spec.scene.validate();
  const std::vector<Category> categories = scene_categories(spec.scene);
  // Routing problems surface here, before anything is written.
  spec.routing.resolve(categories);

  StagedDir stage(out_dir);
  fs::create_directories(stage.path() / "panoptic");
  fs::create_directories(stage.path() / "semantic_gt");
  fs::create_directories(stage.path() / "predictions" / "experts");
  for (int m = 0; m < spec.scene.n_semantic_models; ++m) {
    fs::create_directories(stage.path() / "predictions" / "semantic" /
                           ("model_" + std::to_string(m)));
  }

  DatasetManifest manifest;
  manifest.categories = categories;
  std::map<int64_t, std::vector<ScoredInstance>> gt_instances;
  std::map<std::string, std::map<int64_t, std::vector<ScoredInstance>>>
      expert_instances;

  for (int i = 0; i < spec.scenes; ++i) {
    SceneSpec scene_spec = spec.scene;
    scene_spec.rng_seed = spec.scene.rng_seed + static_cast<uint64_t>(i);
    const SyntheticScene scene = generate_gt(scene_spec);

    const int64_t image_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png",
                  static_cast<long long>(image_id));
    manifest.images.push_back(
        ImageRecord{image_id, name, scene_spec.width, scene_spec.height});
    manifest.annotations.push_back(
        annotation_from_panoptic(image_id, name, scene.panoptic));

    write_panoptic_png_file(stage.path() / "panoptic" / name,
                            raster_from_panoptic(scene.panoptic));
    write_label_png_file(stage.path() / "semantic_gt" / name,
                         scene.semantic_gt);
    gt_instances[image_id] = scene.instances;

    const DegradedOutputs degraded = degrade(scene, scene_spec, spec.routing);
    for (const auto& [expert, instances] : degraded.per_expert) {
      expert_instances[expert][image_id] = instances;
    }
    for (size_t m = 0; m < degraded.semantic_maps.size(); ++m) {
      const fs::path path = stage.path() / "predictions" / "semantic" /
                            ("model_" + std::to_string(m)) /
                            (stem_of(name) + ".cmap");
      write_confidence_map_file(path, degraded.semantic_maps[m]);
    }
  }

  write_manifest(stage.path() / "manifest.json", manifest);
  write_instance_results_file(stage.path() / "instances_gt.json",
                              gt_instances);
  json expert_paths = json::object();
  for (const auto& [expert, per_image] : expert_instances) {
    const std::string rel = "predictions/experts/" + expert + ".json";
    write_instance_results_file(stage.path() / rel, per_image);
    expert_paths[expert] = rel;
  }
  json model_dirs = json::array();
  for (int m = 0; m < spec.scene.n_semantic_models; ++m) {
    model_dirs.push_back("predictions/semantic/model_" + std::to_string(m));
  }

  const json config{
      {"seed", spec.scene.rng_seed},
      {"parallelism", 0},
      {"output_dir", "out"},
      {"gt",
       json{{"manifest", "manifest.json"},
            {"panoptic_dir", "panoptic"},
            {"semantic_dir", "semantic_gt"},
            {"instances", "instances_gt.json"}}},
      {"predictions",
       json{{"experts", std::move(expert_paths)},
            {"semantic_models", std::move(model_dirs)},
            {"panoptic_manifest", "out/fuse/panoptic_pred.json"},
            {"panoptic_dir", "out/fuse/panoptic_pred"},
            {"semantic_dir", "out/fuse/semantic_pred"},
            {"instances", "out/fuse/instances_pred.json"}}},
      {"routing", routing_to_json(spec.routing)},
      {"fusion", fusion_to_json(FusionParams{0.5, 0.5, 0})}};
  write_file_atomic(stage.path() / "config.json", config.dump(2) + "\n");

  stage.commit();
  log_info("wrote " + std::to_string(spec.scenes) + " scenes to " +
           out_dir.string());
}

// ---------------------------------------------------------------------------
// fuse

FusionStats cmd_fuse(const RunConfig& config) {
  if (config.expert_predictions.empty()) {
    throw Error("config: predictions.experts is required for fuse");
  }
  if (config.semantic_model_dirs.empty()) {
    throw Error("config: predictions.semantic_models is required for fuse");
  }
  require_path(config.output_dir, "output_dir", "fuse");
  const LoadedDataset data = load_dataset(config, /*with_gt_panoptic=*/false);
  const auto& categories = data.manifest.categories;
  const size_t n = data.manifest.images.size();

  std::vector<FusionInput> inputs(n);
  std::vector<LabelMap> semantic_pred(n);
  std::map<int64_t, std::vector<ScoredInstance>> merged_per_image;
  EnsembleStats ensemble_stats_total;
  for (size_t i = 0; i < n; ++i) {
    const ImageRecord& img = data.manifest.images[i];
    EnsembleStats stats;
    semantic_pred[i] =
        argmax_labels(ensemble_average(data.semantic_maps[i], &stats));
    ensemble_stats_total.renormalized += stats.renormalized;
    inputs[i].image_id = img.id;
    inputs[i].instances = merge_expert_predictions(data.expert_predictions[i],
                                                   config.routing, categories);
    inputs[i].semantic = semantic_pred[i];
    merged_per_image[img.id] = inputs[i].instances;
  }
  if (ensemble_stats_total.renormalized > 0) {
    log_info("renormalized " +
             std::to_string(ensemble_stats_total.renormalized) +
             " drifted confidence vectors");
  }

  FusionStats stats;
  const std::vector<PanopticImage> fused =
      fuse_batch(inputs, config.fusion, categories, config.parallelism, &stats);

  StagedDir stage(config.output_dir / "fuse");
  fs::create_directories(stage.path() / "panoptic_pred");
  fs::create_directories(stage.path() / "semantic_pred");

  DatasetManifest pred_manifest;
  pred_manifest.categories = categories;
  pred_manifest.images = data.manifest.images;
  for (size_t i = 0; i < n; ++i) {
    const ImageRecord& img = data.manifest.images[i];
    const std::string png_name = stem_of(img.file_name) + ".png";
    pred_manifest.annotations.push_back(
        annotation_from_panoptic(img.id, png_name, fused[i]));
    write_panoptic_png_file(stage.path() / "panoptic_pred" / png_name,
                            raster_from_panoptic(fused[i]));
    write_label_png_file(stage.path() / "semantic_pred" / png_name,
                         semantic_pred[i]);
  }
  write_manifest(stage.path() / "panoptic_pred.json", pred_manifest);
  write_instance_results_file(stage.path() / "instances_pred.json",
                              merged_per_image);

  const json stats_json{
      {"instances_total", stats.instances_total},
      {"instances_dropped_score", stats.instances_dropped_score},
      {"instances_dropped_overlap", stats.instances_dropped_overlap},
      {"stuff_segments_dropped", stats.stuff_segments_dropped},
      {"void_pixels", stats.void_pixels},
      {"total_pixels", stats.total_pixels},
      {"void_fraction", stats.void_fraction()}};
  write_file_atomic(stage.path() / "fuse_stats.json",
                    stats_json.dump(2) + "\n");
  stage.commit();
  log_info("fused " + std::to_string(n) + " images");
  return stats;
}

// ---------------------------------------------------------------------------
// eval

namespace {

void write_report_dir(const fs::path& target, const MetricReport& report,
                      std::span<const Category> categories) {
  StagedDir stage(target);
  write_file_atomic(stage.path() / "report.json",
                    metric_report_json(report, categories));
  write_file_atomic(stage.path() / "report.txt",
                    metric_report_table(report, categories));
  stage.commit();
}

PanopticImage load_validated_panoptic(const PanopticAnnotation& ann,
                                      const fs::path& dir,
                                      const std::string& role) {
  const IdRaster raster = read_panoptic_png_file(dir / ann.file_name);
  PanopticImage pan = assemble_panoptic(ann, raster);
  const ValidationReport report = validate_panoptic(pan);
  if (!report.ok()) {
    throw Error(role + " image " + std::to_string(ann.image_id) +
                " is inconsistent: " + report.violations.front().context +
                ": " + report.violations.front().message);
  }
  return pan;
}

}  // namespace

MetricReport cmd_eval_pq(const RunConfig& config) {
  const DatasetManifest gt = read_manifest(
      require_path(config.gt_manifest, "gt.manifest", "eval-pq"));
  require_path(config.gt_panoptic_dir, "gt.panoptic_dir", "eval-pq");
  const DatasetManifest pred = read_manifest(require_path(
      config.pred_panoptic_manifest, "predictions.panoptic_manifest",
      "eval-pq"));
  require_path(config.pred_panoptic_dir, "predictions.panoptic_dir",
               "eval-pq");
  require_path(config.output_dir, "output_dir", "eval-pq");

  std::map<int64_t, const PanopticAnnotation*> pred_by_image;
  for (const auto& ann : pred.annotations) pred_by_image[ann.image_id] = &ann;

  PqStats stats;
  for (const auto& gt_ann : gt.annotations) {
    auto it = pred_by_image.find(gt_ann.image_id);
    if (it == pred_by_image.end()) {
      throw Error("image " + std::to_string(gt_ann.image_id) +
                  " has no prediction");
    }
    const PanopticImage gt_pan =
        load_validated_panoptic(gt_ann, config.gt_panoptic_dir, "gt");
    const PanopticImage pred_pan =
        load_validated_panoptic(*it->second, config.pred_panoptic_dir, "pred");
    try {
      stats += pq_match(gt_pan, pred_pan, gt.categories);
    } catch (const Error& e) {
      throw Error("image " + std::to_string(gt_ann.image_id) + ": " +
                  e.what());
    }
  }

  MetricReport report;
  report.pq = pq_summarize(stats);
  write_report_dir(config.output_dir / "eval-pq", report, gt.categories);
  return report;
}

MetricReport cmd_eval_miou(const RunConfig& config) {
  const DatasetManifest gt = read_manifest(
      require_path(config.gt_manifest, "gt.manifest", "eval-miou"));
  require_path(config.gt_semantic_dir, "gt.semantic_dir", "eval-miou");
  require_path(config.pred_semantic_dir, "predictions.semantic_dir",
               "eval-miou");
  require_path(config.output_dir, "output_dir", "eval-miou");

  ConfusionTally tally;
  for (const auto& img : gt.images) {
    const std::string png_name = stem_of(img.file_name) + ".png";
    const LabelMap gt_labels =
        read_label_png_file(config.gt_semantic_dir / png_name);
    const LabelMap pred_labels =
        read_label_png_file(config.pred_semantic_dir / png_name);
    try {
      tally.accumulate(gt_labels, pred_labels);
    } catch (const Error& e) {
      throw Error("image " + std::to_string(img.id) + ": " + e.what());
    }
  }

  MetricReport report;
  report.miou = tally.miou();
  write_report_dir(config.output_dir / "eval-miou", report, gt.categories);
  return report;
}

MetricReport cmd_eval_map(const RunConfig& config) {
  const DatasetManifest gt = read_manifest(
      require_path(config.gt_manifest, "gt.manifest", "eval-map"));
  const auto gt_instances = read_instance_results_file(
      require_path(config.gt_instances, "gt.instances", "eval-map"), gt);
  const auto pred_instances = read_instance_results_file(
      require_path(config.pred_instances, "predictions.instances",
                   "eval-map"),
      gt);
  require_path(config.output_dir, "output_dir", "eval-map");

  std::vector<std::vector<ScoredInstance>> gt_per_image;
  std::vector<std::vector<ScoredInstance>> pred_per_image;
  for (const auto& img : gt.images) {
    auto git = gt_instances.find(img.id);
    gt_per_image.push_back(git == gt_instances.end()
                               ? std::vector<ScoredInstance>{}
                               : git->second);
    auto pit = pred_instances.find(img.id);
    pred_per_image.push_back(pit == pred_instances.end()
                                 ? std::vector<ScoredInstance>{}
                                 : pit->second);
  }

  MetricReport report;
  report.map_bbox = coco_map(gt_per_image, pred_per_image, MatchMode::kBbox);
  report.map_mask = coco_map(gt_per_image, pred_per_image, MatchMode::kMask);
  write_report_dir(config.output_dir / "eval-map", report, gt.categories);
  return report;
}

// ---------------------------------------------------------------------------
// matrix

MatrixReport cmd_matrix(const RunConfig& config) {
  if (config.expert_predictions.empty()) {
    throw Error("config: predictions.experts is required for matrix");
  }
  if (config.semantic_model_dirs.empty()) {
    throw Error("config: predictions.semantic_models is required for matrix");
  }
  require_path(config.gt_panoptic_dir, "gt.panoptic_dir", "matrix");
  require_path(config.output_dir, "output_dir", "matrix");

  const LoadedDataset data = load_dataset(config, /*with_gt_panoptic=*/true);
  const MatrixReport report =
      run_matrix(data, config.routing, config.fusion, config.parallelism);

  StagedDir stage(config.output_dir / "matrix");
  write_file_atomic(stage.path() / "matrix.json", matrix_report_json(report));
  write_file_atomic(stage.path() / "matrix.txt", matrix_report_table(report));
  stage.commit();
  return report;
}

// ---------------------------------------------------------------------------
// visualize / validate

void cmd_visualize(const fs::path& manifest_path, const fs::path& png_dir,
                   const fs::path& out_dir) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  CategoryIndex index(manifest.categories);

  StagedDir stage(out_dir);
  json legend = json::array();
  for (const auto& ann : manifest.annotations) {
    const IdRaster raster = read_panoptic_png_file(png_dir / ann.file_name);
    std::vector<uint8_t> rgb(raster.ids.size() * 3);
    for (size_t i = 0; i < raster.ids.size(); ++i) {
      const auto color = palette_color(raster.ids[i]);
      rgb[i * 3 + 0] = color[0];
      rgb[i * 3 + 1] = color[1];
      rgb[i * 3 + 2] = color[2];
    }
    const std::string png_name = stem_of(ann.file_name) + ".png";
    write_file_atomic(stage.path() / png_name,
                      encode_rgb_png(raster.width, raster.height, rgb));

    json segments = json::array();
    for (const auto& seg : ann.segments) {
      const Category* cat = index.find(seg.category_id);
      const auto color = palette_color(seg.id);
      segments.push_back(
          json{{"id", seg.id},
               {"category_id", seg.category_id},
               {"category", cat != nullptr ? cat->name : "unknown"},
               {"color", json::array({color[0], color[1], color[2]})}});
    }
    legend.push_back(json{{"image_id", ann.image_id},
                          {"file_name", png_name},
                          {"segments", std::move(segments)}});
  }
  write_file_atomic(stage.path() / "legend.json",
                    json{{"images", std::move(legend)}}.dump(2) + "\n");
  stage.commit();
}

ValidationReport cmd_validate(const fs::path& manifest_path,
                              const fs::path& png_dir) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  ValidationReport report;

  try {
    CategoryIndex index(manifest.categories);
    for (const auto& ann : manifest.annotations) {
      for (const auto& seg : ann.segments) {
        if (index.find(seg.category_id) == nullptr) {
          report.add("image " + std::to_string(ann.image_id) + " segment " +
                         std::to_string(seg.id),
                     "unknown category " + std::to_string(seg.category_id));
        }
      }
    }
  } catch (const Error& e) {
    report.add("categories", e.what());
  }

  for (const auto& ann : manifest.annotations) {
    const std::string context = "image " + std::to_string(ann.image_id);
    const fs::path png_path = png_dir / ann.file_name;
    if (!fs::exists(png_path)) {
      report.add(context, "panoptic PNG missing on disk: " + png_path.string());
      continue;
    }
    IdRaster raster;
    try {
      raster = read_panoptic_png_file(png_path);
    } catch (const Error& e) {
      report.add(context, e.what());
      continue;
    }
    const ImageRecord& img = manifest.image(ann.image_id);
    if (raster.width != img.width || raster.height != img.height) {
      report.add(context, "PNG dimensions do not match the image record");
      continue;
    }
    const ValidationReport image_report =
        validate_panoptic(assemble_panoptic(ann, raster));
    for (const auto& v : image_report.violations) {
      report.add(context + " " + v.context, v.message);
    }
  }
  return report;
}

}  // namespace panoptic
