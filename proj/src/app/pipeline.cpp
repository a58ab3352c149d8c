/*
 * Copyright 2026 The FDIM Authors
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

#include "fdim/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fdim/calibration.hpp"
#include "fdim/errors.hpp"
#include "fdim/inspect.hpp"
#include "fdim/manifest.hpp"
#include "fdim/trainer.hpp"
#include "fdim/util.hpp"
#include "fdim/weights_io.hpp"

namespace fdimq::app {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!std::filesystem::exists(path)) {
    throw IoError(std::string(what) + " not found: " + path.string());
  }
}


std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

std::string weights_fingerprint(const net::Checkpoint& info) {
  if (info.metadata.contains("config_fingerprint")) {
    return info.metadata["config_fingerprint"].get<std::string>();
  }
  return hex64(fnv1a64(info.config.to_json().dump()));
}

// Hand-crafted branch: the precomputed table wins; the tool must exist otherwise.
struct TradSource {
  std::optional<calib::VmafScoreTable> table;
  std::optional<calib::VmafTool> tool;

  TradSource(const std::optional<std::filesystem::path>& scores, const std::string& binary) {
    if (scores) table = calib::VmafScoreTable::load(*scores);
    tool.emplace(binary);
  }

  // Checked before heavy work so a missing dependency fails fast.
  void require(const std::string& dist_id) const {
    if (table && table->find(dist_id)) return;
    if (!tool->available()) {
      throw DependencyError(
          "VMAF score unavailable for " + dist_id + ": '" + tool->binary() +
          "' is not runnable. Install libvmaf's vmaf tool (or set FDIM_VMAF_BIN), pass "
          "--vmaf-scores with precomputed scores, or use --deep-only for a partial result.");
    }
  }

  calib::TraditionalScore score(const ManifestRow& row) const {
    return calib::score_traditional(row.ref_path, row.reference_geometry(), row.dist_path,
                                    row.geometry, table ? &*table : nullptr, &*tool);
  }
};

std::map<std::string, std::string> row_tags(const ManifestRow& row) {
  std::map<std::string, std::string> tags = row.extra;
  tags["codec"] = row.codec;
  tags["codec_group"] = row.codec_group;
  if (!row.dataset.empty()) tags["dataset"] = row.dataset;
  if (!row.subset.empty()) tags["subset"] = row.subset;
  return tags;
}

std::string row_problem(const ManifestRow& row) {
  if (!std::filesystem::exists(row.ref_path)) return "missing reference " + row.ref_path.string();
  if (!std::filesystem::exists(row.dist_path)) return "missing distorted " + row.dist_path.string();
  return {};
}

net::QualityPrediction deep_for_row(net::FdimNet& model, const ManifestRow& row,
                                    video::SignalFormat signal, const net::ScoreOptions& options) {
  return net::score_deep_files(model, row.ref_path, row.reference_geometry(), row.dist_path,
                               row.geometry, signal, options);
}

}  // namespace

json run_score(const ScoreRequest& r) {
  const auto start = std::chrono::steady_clock::now();
  require_file(r.weights, "weights");
  require_file(r.ref, "reference");
  require_file(r.dist, "distorted");
  if (r.ref_geometry.width <= 0 || r.ref_geometry.height <= 0) {
    throw ConfigError("reference width and height must be positive");
  }
  const net::Checkpoint info = net::read_checkpoint_info(r.weights);
  calib::Calibration calibration;
  if (r.calibration) {
    calibration = calib::load_calibration(*r.calibration);
  } else if (info.calibration) {
    calibration = *info.calibration;
  }
  std::optional<TradSource> trad;
  if (!r.deep_only) {
    if (!calibration.complete()) {
      throw ConfigError(
          "fused scoring needs a calibration with both deep and trad mappings (--calibration or "
          "one embedded in the weights); use --deep-only for a deep-only partial result");
    }
    trad.emplace(r.vmaf_scores, r.vmaf_binary);
    trad->require(r.dist.string());
  }

  torch::manual_seed(r.seed);
  net::LoadedModel loaded = net::load_checkpoint(r.weights);
  const net::QualityPrediction deep =
      net::score_deep_files(loaded.model, r.ref, r.ref_geometry, r.dist, r.dist_geometry,
                            r.signal, r.options);

  json out;
  out["q_deep"] = deep.q_deep;
  out["sigma_hat"] = deep.sigma_hat;
  out["per_frame"] = deep.per_frame;
  out["frame_indices"] = deep.frame_indices;
  out["q_trad"] = nullptr;
  out["q_tilde_deep"] = calibration.deep ? json(calib::map_branch(deep.q_deep, *calibration.deep))
                                         : json(nullptr);
  out["q_tilde_trad"] = nullptr;
  out["Q"] = nullptr;
  json tools = {{"fdim", kVersion}, {"weights", weights_fingerprint(info)}};
  if (trad) {
    ManifestRow row;
    row.ref_path = r.ref;
    row.dist_path = r.dist;
    row.geometry = r.dist_geometry;
    row.ref_geometry = r.ref_geometry;
    const calib::TraditionalScore t = trad->score(row);
    const calib::FusedScore fused = calib::fuse(deep.q_deep, t.score, *calibration.deep, *calibration.trad);
    out["q_trad"] = t.score;
    out["q_tilde_trad"] = fused.q_tilde_trad;
    out["Q"] = fused.fused;
    tools["vmaf"] = t.source == "precomputed" ? "precomputed" : t.tool_version;
    tools["vmaf_model"] = t.model;
    out["branches"] = {"deep", "trad"};
    out["partial"] = false;
  } else {
    out["branches"] = {"deep"};
    out["partial"] = true;
  }
  out["tool_versions"] = tools;
  out["signal_format"] = video::to_string(r.signal);
  out["hdr_path"] = net::uses_hdr_path(r.signal, r.options.frame);
  out["seed"] = r.seed;
  out["timing"] = {{"seconds", seconds_since(start)}};
  return out;
}

json run_train(const TrainRequest& r) {
  const auto start = std::chrono::steady_clock::now();
  r.config.validate();
  const std::vector<ManifestRow> rows = read_manifest(r.manifest);
  if (rows.size() < 2) throw ConfigError("training manifest needs at least 2 rows");
  net::FdimNet model = net::make_model(net::model_config_from(r.config), r.config.seed);
  std::size_t missing_init = 0;
  if (r.init_weights) {
    require_file(*r.init_weights, "initial weights");
    missing_init = net::load_state(model, *r.init_weights, /*strict=*/false).size();
  }
  net::TrainOptions options;
  options.out_dir = r.out_dir;
  options.frame = r.frame;
  if (!r.quiet) {
    options.on_step = [](const net::StepRecord& s) {
      if (s.step % 10 == 0) {
        std::fprintf(stderr, "step %d  pairs %d  loss %.4f  |g| %.3f  sigma %.4f  |z| %.2f\n",
                     s.step, s.pairs_seen, s.loss, s.grad_norm, s.mean_sigma, s.mean_abs_z);
      }
    };
  }
  std::set<std::string> all_refs;
  for (const auto& row : rows) all_refs.insert(row.ref_id());
  const net::TrainReport report = net::train(model, rows, r.config, options);
  if (!r.quiet) {
    std::fprintf(stderr, "trained on %zu pairs (%zu homogeneous, %zu heterogeneous) from %zu of %zu references\n",
                 report.pairs, report.homogeneous, report.heterogeneous,
                 report.selected_refs.size(), all_refs.size());
  }
  json out;
  out["checkpoint"] = report.checkpoint.string();
  out["loss_csv"] = report.loss_csv.string();
  out["pairs"] = report.pairs;
  out["homogeneous_pairs"] = report.homogeneous;
  out["heterogeneous_pairs"] = report.heterogeneous;
  out["steps"] = report.steps.size();
  out["selected_refs"] = report.selected_refs;
  out["total_refs"] = all_refs.size();
  out["data_fraction"] = r.config.data_fraction;
  out["config_fingerprint"] = report.fingerprint;
  out["variant"] = model->config().to_json();
  out["parameters"] = model->parameter_count();
  out["init_tensors_missing"] = r.init_weights ? json(missing_init) : json(nullptr);
  out["final_loss"] = report.steps.empty() ? json(nullptr) : json(report.steps.back().loss);
  out["timing"] = {{"seconds", seconds_since(start)}, {"train_seconds", report.seconds}};
  return out;
}

EvalMethod parse_eval_method(const std::string& name) {
  if (name == "deep") return EvalMethod::kDeep;
  if (name == "trad" || name == "vmaf") return EvalMethod::kTrad;
  if (name == "fused" || name == "fdim") return EvalMethod::kFused;
  throw ConfigError("unknown evaluation method '" + name + "' (deep, trad, fused)");
}

std::string to_string(EvalMethod method) {
  switch (method) {
    case EvalMethod::kDeep: return "deep";
    case EvalMethod::kTrad: return "trad";
    case EvalMethod::kFused: return "fused";
  }
  return "deep";
}

json run_evaluate(const EvaluateRequest& r) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ManifestRow> rows = read_manifest(r.manifest);
  if (rows.empty()) throw ConfigError("evaluation manifest has no rows: " + r.manifest.string());
  const bool need_deep = r.method != EvalMethod::kTrad;
  const bool need_trad = r.method != EvalMethod::kDeep;
  if (need_deep && !r.weights) throw ConfigError("--weights is required for method " + to_string(r.method));
  std::optional<net::LoadedModel> loaded;
  calib::Calibration calibration;
  if (need_deep) {
    require_file(*r.weights, "weights");
    loaded = net::load_checkpoint(*r.weights);
    if (loaded->info.calibration) calibration = *loaded->info.calibration;
  }
  if (r.calibration) calibration = calib::load_calibration(*r.calibration);
  if (r.method == EvalMethod::kFused && !calibration.complete()) {
    throw ConfigError("method fused needs a calibration with both branches");
  }
  std::optional<TradSource> trad;
  if (need_trad) trad.emplace(r.vmaf_scores, r.vmaf_binary);

  std::vector<eval::EvalRecord> records;
  json failures = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRow& row = rows[i];
    std::string problem = row_problem(row);
    if (problem.empty()) {
      try {
        double predicted = 0.0;
        std::optional<double> q_deep, q_trad;
        if (need_deep) q_deep = deep_for_row(loaded->model, row, r.signal, r.options).q_deep;
        if (need_trad) {
          trad->require(row.dist_id());
          q_trad = trad->score(row).score;
        }
        if (r.method == EvalMethod::kDeep) predicted = *q_deep;
        if (r.method == EvalMethod::kTrad) predicted = *q_trad;
        if (r.method == EvalMethod::kFused) {
          predicted = calib::fuse(*q_deep, *q_trad, *calibration.deep, *calibration.trad).fused;
        }
        records.push_back({row.dist_id(), row.ref_id(), predicted, row.mos, row_tags(row)});
        continue;
      } catch (const DependencyError&) {
        throw;
      } catch (const Error& e) {
        problem = e.what();
      }
    }
    failures.push_back({{"row", i + 1}, {"dist_path", row.dist_path.string()}, {"error", problem}});
    std::fprintf(stderr, "row %zu skipped: %s\n", i + 1, problem.c_str());
  }
  if (records.size() < 3) {
    throw IoError("only " + std::to_string(records.size()) + " of " + std::to_string(rows.size()) +
                  " manifest rows could be scored");
  }
  const eval::EvalReport report = eval::evaluate_protocol(records, r.eval, to_string(r.method));
  json out = report.to_json();
  out["rows"] = rows.size();
  out["scored"] = records.size();
  out["failures"] = failures;
  out["incomplete"] = !failures.empty();
  if (r.out_dir) {
    std::filesystem::create_directories(*r.out_dir);
    std::ofstream(*r.out_dir / "report.json") << out.dump(2) << '\n';
    eval::write_report_csv(*r.out_dir / "report.csv", {report});
    out["report_json"] = (*r.out_dir / "report.json").string();
    out["report_csv"] = (*r.out_dir / "report.csv").string();
  }
  out["timing"] = {{"seconds", seconds_since(start)}};
  return out;
}

json run_fit_calibration(const CalibrateRequest& r) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ManifestRow> rows = read_manifest(r.manifest);
  if (rows.empty()) throw ConfigError("calibration manifest has no rows");
  bool want_deep = false, want_trad = false;
  for (const auto& b : r.branches) {
    const calib::Branch branch = calib::parse_branch(b);
    (branch == calib::Branch::kDeep ? want_deep : want_trad) = true;
  }
  if (!want_deep && !want_trad) throw ConfigError("no calibration branch requested");
  std::optional<net::LoadedModel> loaded;
  if (want_deep || r.embed_into) {
    require_file(r.weights, "weights");
    loaded = net::load_checkpoint(r.weights);
  }
  std::optional<TradSource> trad;
  if (want_trad) trad.emplace(r.vmaf_scores, r.vmaf_binary);

  std::vector<double> deep_scores, trad_scores, mos_deep, mos_trad;
  json failures = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRow& row = rows[i];
    if (const std::string problem = row_problem(row); !problem.empty()) {
      failures.push_back({{"row", i + 1}, {"error", problem}});
      continue;
    }
    if (want_deep) {
      deep_scores.push_back(deep_for_row(loaded->model, row, r.signal, r.options).q_deep);
      mos_deep.push_back(row.mos);
    }
    if (want_trad) {
      trad->require(row.dist_id());
      trad_scores.push_back(trad->score(row).score);
      mos_trad.push_back(row.mos);
    }
  }
  const std::string source = file_fingerprint(r.manifest);
  calib::Calibration calibration;
  if (!r.out.empty() && std::filesystem::exists(r.out)) {
    // Refitting one branch keeps the other.
    calibration = calib::load_calibration(r.out);
  }
  json out;
  if (want_deep) {
    calib::BranchMapping m = calib::fit_branch_mapping(deep_scores, mos_deep, calib::Branch::kDeep);
    m.source_fingerprint = source;
    calibration.deep = m;
    out["deep"] = {{"beta", m.beta}, {"residual_rms", m.residual_rms}, {"points", deep_scores.size()}};
  }
  if (want_trad) {
    calib::BranchMapping m = calib::fit_branch_mapping(trad_scores, mos_trad, calib::Branch::kTrad);
    m.source_fingerprint = source;
    calibration.trad = m;
    out["trad"] = {{"beta", m.beta}, {"residual_rms", m.residual_rms}, {"points", trad_scores.size()}};
  }
  if (!r.out.empty()) {
    calib::save_calibration(r.out, calibration);
    out["calibration"] = r.out.string();
  }
  if (r.embed_into) {
    net::Checkpoint info = loaded->info;
    info.calibration = calibration;
    net::save_checkpoint(*r.embed_into, loaded->model, info);
    out["weights_with_calibration"] = r.embed_into->string();
  }
  out["source_fingerprint"] = source;
  out["failures"] = failures;
  out["timing"] = {{"seconds", seconds_since(start)}};
  return out;
}

json run_synth(const synth::CorpusOptions& options, const std::filesystem::path& out_dir) {
  const std::vector<ManifestRow> rows = synth::generate_corpus(options, out_dir);
  std::set<std::string> refs;
  for (const auto& row : rows) refs.insert(row.ref_id());
  json kinds = json::array();
  for (auto k : options.kinds) kinds.push_back(synth::to_string(k));
  return {{"manifest", (out_dir / "manifest.csv").string()},
          {"references", refs.size()},
          {"distorted", rows.size()},
          {"kinds", kinds},
          {"levels", options.levels},
          {"width", options.width},
          {"height", options.height},
          {"frames", options.frames},
          {"seed", options.seed}};
}

json run_inspect(const InspectRequest& r) {
  require_file(r.weights, "weights");
  net::LoadedModel loaded = net::load_checkpoint(r.weights);
  video::RawVideoReader ref_reader(r.ref, r.ref_geometry);
  video::RawVideoReader dist_reader(r.dist, r.dist_geometry);
  if (r.frame < 0 || r.frame >= ref_reader.frame_count() || r.frame >= dist_reader.frame_count()) {
    throw ConfigError("frame index " + std::to_string(r.frame) + " out of range");
  }
  video::Frame ref = ref_reader.read_frame(r.frame);
  video::Frame dist = dist_reader.read_frame(r.frame);
  if (!r.dist_geometry.same_size(r.ref_geometry)) {
    dist = video::resample_frame(dist, r.ref_geometry.width, r.ref_geometry.height,
                                 r.dist_geometry.bit_depth);
  }
  const auto ref_rgb = net::prepare_frame(ref, r.ref_geometry.bit_depth, r.signal, r.frame_options);
  const auto dist_rgb = net::prepare_frame(dist, r.dist_geometry.bit_depth, r.signal, r.frame_options);
  const auto written = net::export_feature_maps(loaded.model, ref_rgb, dist_rgb, r.out_dir);
  json files = json::array();
  for (const auto& e : written) {
    files.push_back({{"scale", e.scale}, {"kind", e.kind}, {"grayscale", e.grayscale.string()},
                     {"overlay", e.overlay.string()}});
  }
  return {{"frame", r.frame}, {"width", ref_rgb.width}, {"height", ref_rgb.height}, {"maps", files}};
}

json run_bench(const BenchRequest& r) {
  require_file(r.weights, "weights");
  net::LoadedModel loaded = net::load_checkpoint(r.weights);
  json runs = json::array();
  net::ComplexityReport last;
  for (int i = 0; i < std::max(1, r.runs); ++i) {
    last = net::measure_complexity(loaded.model, r.width, r.height, r.frames, r.fps);
    runs.push_back(last.seconds);
  }
  return {{"parameters", last.parameters},
          {"flops", last.flops},
          {"flops_per_frame", last.flops_per_frame},
          {"frames_scored", last.frames_scored},
          {"width", r.width},
          {"height", r.height},
          {"frames", r.frames},
          {"timing", {{"seconds", runs}}}};
}

json run_init(const std::filesystem::path& out, const AblationConfig& ablation, std::uint64_t seed) {
  net::ModelConfig config;
  config.ablation = ablation;
  net::FdimNet model = net::make_model(config, seed);
  model->eval();
  net::Checkpoint info;
  info.config = config;
  info.metadata["init_seed"] = seed;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  net::save_checkpoint(out, model, info);
  return {{"weights", out.string()}, {"parameters", model->parameter_count()},
          {"variant", config.to_json()}, {"seed", seed}};
}

}  // namespace fdimq::app
