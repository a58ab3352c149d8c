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

// fdim: command-line front end. Machine-readable JSON goes to stdout (or
// --out), human-readable progress to stderr.
//
// Exit codes: 0 ok, 1 internal/I-O, 2 configuration or usage, 3 missing
// dependency, 4 malformed input / alignment / geometry, 5 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdim/errors.hpp"
#include "fdim/pipeline.hpp"

namespace {

using namespace fdimq;

struct GeometryFlags {
  int width = 0;
  int height = 0;
  double fps = 25.0;
  std::string pix_fmt = "yuv420p";
  int bit_depth = 0;
  int dist_width = 0;
  int dist_height = 0;

  void add(CLI::App* cmd, bool required) {
    auto* w = cmd->add_option("--width", width, "Reference luma width");
    auto* h = cmd->add_option("--height", height, "Reference luma height");
    if (required) {
      w->required();
      h->required();
    }
    cmd->add_option("--fps", fps, "Frame rate")->capture_default_str();
    cmd->add_option("--pix-fmt", pix_fmt, "yuv420p or yuv420p10le")->capture_default_str();
    cmd->add_option("--bit-depth", bit_depth, "8 or 10 (overrides --pix-fmt)");
    cmd->add_option("--dist-width", dist_width, "Distorted width when it differs");
    cmd->add_option("--dist-height", dist_height, "Distorted height when it differs");
  }

  video::Geometry ref() const {
    video::Geometry g;
    g.width = width;
    g.height = height;
    g.fps = fps;
    g.bit_depth = bit_depth ? bit_depth : video::bit_depth_from_pix_fmt(pix_fmt);
    if (g.bit_depth != 8 && g.bit_depth != 10) throw ConfigError("bit depth must be 8 or 10");
    if (width <= 0 || height <= 0) throw ConfigError("--width and --height must be positive");
    return g;
  }
  video::Geometry dist() const {
    video::Geometry g = ref();
    if (dist_width > 0) g.width = dist_width;
    if (dist_height > 0) g.height = dist_height;
    return g;
  }
};

struct DisplayFlags {
  bool hdr = false;
  std::string signal = "sdr-srgb";
  std::string range = "full";
  std::string sampling = "one-per-second";
  double peak = 1000.0;
  double black = 0.005;
  double reflectivity = 0.005;
  double ambient_lux = 10.0;
  std::string eotf = "pq";

  void add(CLI::App* cmd) {
    cmd->add_flag("--hdr", hdr, "Use the display-model + PU21 input path");
    cmd->add_option("--signal", signal, "sdr-srgb, hdr-pq or hdr-hlg")->capture_default_str();
    cmd->add_option("--range", range, "full or limited")->capture_default_str();
    cmd->add_option("--sampling", sampling, "one-per-second, all or stride-K")->capture_default_str();
    cmd->add_option("--display-peak", peak, "Display peak luminance, cd/m^2")->capture_default_str();
    cmd->add_option("--display-black", black, "Display black level, cd/m^2")->capture_default_str();
    cmd->add_option("--refl", reflectivity, "Screen reflectivity")->capture_default_str();
    cmd->add_option("--ambient-lux", ambient_lux, "Ambient illuminance, lux")->capture_default_str();
    cmd->add_option("--eotf", eotf, "srgb, pq or hlg (HDR path)")->capture_default_str();
  }

  video::SignalFormat signal_format() const { return video::parse_signal_format(signal); }

  net::FrameOptions frame() const {
    net::FrameOptions f;
    f.hdr = hdr;
    f.range = video::parse_range(range);
    f.display.peak = peak;
    f.display.black = black;
    f.display.reflectivity = reflectivity;
    f.display.ambient_lux = ambient_lux;
    f.display.eotf = hdr::parse_eotf(eotf);
    f.display.validate();
    return f;
  }

  net::ScoreOptions score() const {
    net::ScoreOptions o;
    o.sampling = video::parse_sample_spec(sampling);
    o.frame = frame();
    return o;
  }
};

std::map<std::string, std::string> parse_pairs(const std::vector<std::string>& items) {
  std::map<std::string, std::string> kv;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path);
  out << text;
}

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FDIM full-reference video quality toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fdimq::app::kVersion);
  std::string out_path;

  // score
  auto* score = app.add_subcommand("score", "Score one distorted clip against its reference");
  std::string ref, dist, weights, calibration, vmaf_scores, vmaf_bin;
  bool deep_only = false;
  std::uint64_t seed = 0;
  GeometryFlags geometry;
  DisplayFlags display;
  score->add_option("--ref", ref, "Reference raw YUV file")->required();
  score->add_option("--dist", dist, "Distorted raw YUV file")->required();
  geometry.add(score, true);
  display.add(score);
  score->add_option("--weights", weights, "Checkpoint (.fdimw)")->required();
  score->add_option("--calibration", calibration, "Calibration JSON (default: embedded in weights)");
  score->add_option("--vmaf-scores", vmaf_scores, "CSV of precomputed dist_id,vmaf_score");
  score->add_option("--vmaf-bin", vmaf_bin, "vmaf executable (default $FDIM_VMAF_BIN or PATH)");
  score->add_flag("--deep-only", deep_only, "Report the deep branch only (explicit partial result)");
  score->add_option("--seed", seed, "Seed")->capture_default_str();
  score->add_option("--out", out_path, "Write JSON here instead of stdout");

  // train
  auto* train = app.add_subcommand("train", "Train the deep branch with the pairwise fidelity loss");
  std::string manifest, config_path, out_dir, init_weights;
  std::vector<std::string> ablation, overrides;
  double data_fraction = -1.0;
  bool quiet = false;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--manifest", manifest, "Training manifest CSV")->required();
  train->add_option("--config", config_path, "key = value config file");
  train->add_option("--out", out_dir, "Output directory (checkpoint, loss.csv)")->required();
  train->add_option("--ablation", ablation, "Ablation override key=value (repeatable)");
  train->add_option("--set", overrides, "Any config override key=value (repeatable)");
  train->add_option("--data-fraction", data_fraction, "Fraction of reference contents to use");
  train->add_option("--seed", train_seed, "Seed");
  train->add_option("--init-weights", init_weights, "Initial weights (e.g. a converted encoder)");
  train->add_flag("--quiet", quiet, "No progress on stderr");
  DisplayFlags train_display;
  train_display.add(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Correlation report over a manifest");
  std::string eval_manifest, eval_weights, eval_calibration, eval_scores, eval_out, method = "deep",
                                                                                protocol = "both";
  std::vector<std::string> splits;
  evaluate->add_option("--manifest", eval_manifest, "Evaluation manifest CSV")->required();
  evaluate->add_option("--weights", eval_weights, "Checkpoint");
  evaluate->add_option("--calibration", eval_calibration, "Calibration JSON");
  evaluate->add_option("--vmaf-scores", eval_scores, "CSV of precomputed VMAF scores");
  evaluate->add_option("--vmaf-bin", vmaf_bin, "vmaf executable");
  evaluate->add_option("--method", method, "deep, trad or fused")->capture_default_str();
  evaluate->add_option("--protocol", protocol, "per-sequence, all-sequence or both")->capture_default_str();
  evaluate->add_option("--split", splits, "Tag to split by, e.g. codec_group (repeatable)");
  evaluate->add_option("--out-dir", eval_out, "Write report.json and report.csv here");
  evaluate->add_option("--out", out_path, "Write JSON here instead of stdout");
  DisplayFlags eval_display;
  eval_display.add(evaluate);

  // fit-calibration
  auto* fit = app.add_subcommand("fit-calibration", "Fit the per-branch logistic mappings");
  std::string fit_manifest, fit_weights, fit_scores, fit_out, fit_embed, branches = "deep,trad";
  fit->add_option("--manifest", fit_manifest, "Manifest with MOS")->required();
  fit->add_option("--weights", fit_weights, "Checkpoint");
  fit->add_option("--vmaf-scores", fit_scores, "CSV of precomputed VMAF scores");
  fit->add_option("--vmaf-bin", vmaf_bin, "vmaf executable");
  fit->add_option("--branches", branches, "deep, trad or deep,trad")->capture_default_str();
  fit->add_option("--calibration-out", fit_out, "Calibration JSON to write")->required();
  fit->add_option("--embed-into", fit_embed, "Also write a checkpoint copy carrying the calibration");
  DisplayFlags fit_display;
  fit_display.add(fit);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic corpus");
  synth::CorpusOptions corpus;
  std::string synth_out, kinds = "gaussian-blur,additive-noise";
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--refs", corpus.n_refs, "Reference contents")->capture_default_str();
  synth_cmd->add_option("--kinds", kinds, "Comma list of distortion kinds")->capture_default_str();
  synth_cmd->add_option("--levels", corpus.levels, "Severity levels per kind")->capture_default_str();
  synth_cmd->add_option("--width", corpus.width)->capture_default_str();
  synth_cmd->add_option("--height", corpus.height)->capture_default_str();
  synth_cmd->add_option("--frames", corpus.frames)->capture_default_str();
  synth_cmd->add_option("--fps", corpus.fps)->capture_default_str();
  synth_cmd->add_option("--bit-depth", corpus.bit_depth)->capture_default_str();
  synth_cmd->add_option("--seed", corpus.seed)->capture_default_str();

  // inspect-features
  auto* inspect = app.add_subcommand("inspect-features", "Export per-scale feature maps as PNG");
  std::string in_ref, in_dist, in_weights, in_out;
  int in_frame = 0;
  GeometryFlags in_geometry;
  DisplayFlags in_display;
  inspect->add_option("--ref", in_ref)->required();
  inspect->add_option("--dist", in_dist)->required();
  in_geometry.add(inspect, true);
  in_display.add(inspect);
  inspect->add_option("--weights", in_weights)->required();
  inspect->add_option("--frame", in_frame, "Frame index")->capture_default_str();
  inspect->add_option("--out-dir", in_out, "Directory for PNG files")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Parameter count, analytic FLOPs and timing");
  app::BenchRequest bench_req;
  std::string bench_weights;
  bench->add_option("--weights", bench_weights)->required();
  bench->add_option("--width", bench_req.width)->capture_default_str();
  bench->add_option("--height", bench_req.height)->capture_default_str();
  bench->add_option("--frames", bench_req.frames)->capture_default_str();
  bench->add_option("--fps", bench_req.fps)->capture_default_str();
  bench->add_option("--runs", bench_req.runs)->capture_default_str();

  // init
  auto* init = app.add_subcommand("init", "Write a freshly initialised checkpoint");
  std::string init_out;
  std::vector<std::string> init_ablation;
  std::uint64_t init_seed = 0;
  init->add_option("--out", init_out, "Checkpoint path")->required();
  init->add_option("--ablation", init_ablation, "Ablation override key=value (repeatable)");
  init->add_option("--seed", init_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    std::fprintf(stderr, "%s", failing->help().c_str());
    return 2;
  }

  try {
    if (score->parsed()) {
      app::ScoreRequest r;
      r.ref = ref;
      r.dist = dist;
      r.ref_geometry = geometry.ref();
      r.dist_geometry = geometry.dist();
      r.signal = display.signal_format();
      r.weights = weights;
      r.calibration = opt_path(calibration);
      r.vmaf_scores = opt_path(vmaf_scores);
      r.vmaf_binary = vmaf_bin;
      r.deep_only = deep_only;
      r.options = display.score();
      r.seed = seed;
      const auto j = app::run_score(r);
      emit(j, out_path);
      std::fprintf(stderr, "q_deep %.4f  sigma %.4f over %zu frames%s\n", j["q_deep"].get<double>(),
                   j["sigma_hat"].get<double>(), j["per_frame"].size(),
                   j["Q"].is_null() ? "  (deep only)" : "");
    } else if (train->parsed()) {
      app::TrainRequest r;
      r.manifest = manifest;
      r.out_dir = out_dir;
      if (!config_path.empty()) r.config = load_train_config(config_path);
      for (const auto& [k, v] : parse_pairs(overrides)) set_config_value(r.config, k, v);
      apply_ablation_overrides(r.config, parse_pairs(ablation));
      if (data_fraction > 0.0) r.config.data_fraction = data_fraction;
      if (data_fraction == 0.0) throw ConfigError("--data-fraction must be in (0, 1]");
      if (train_seed) r.config.seed = *train_seed;
      r.init_weights = opt_path(init_weights);
      r.frame = train_display.frame();
      r.quiet = quiet;
      emit(app::run_train(r), "");
    } else if (evaluate->parsed()) {
      app::EvaluateRequest r;
      r.manifest = eval_manifest;
      r.weights = opt_path(eval_weights);
      r.calibration = opt_path(eval_calibration);
      r.vmaf_scores = opt_path(eval_scores);
      r.vmaf_binary = vmaf_bin;
      r.method = app::parse_eval_method(method);
      if (protocol == "both") {
        r.eval.protocols = {eval::Protocol::kPerSequence, eval::Protocol::kAllSequence};
      } else {
        r.eval.protocols = {eval::parse_protocol(protocol)};
      }
      r.eval.split_keys = splits;
      r.out_dir = opt_path(eval_out);
      r.signal = eval_display.signal_format();
      r.options = eval_display.score();
      const auto j = app::run_evaluate(r);
      emit(j, out_path);
      if (j.value("incomplete", false)) {
        std::fprintf(stderr, "warning: %zu manifest rows could not be scored\n", j["failures"].size());
      }
    } else if (fit->parsed()) {
      app::CalibrateRequest r;
      r.manifest = fit_manifest;
      r.weights = fit_weights;
      r.vmaf_scores = opt_path(fit_scores);
      r.vmaf_binary = vmaf_bin;
      r.branches = split_commas(branches);
      r.out = fit_out;
      r.embed_into = opt_path(fit_embed);
      r.signal = fit_display.signal_format();
      r.options = fit_display.score();
      emit(app::run_fit_calibration(r), "");
    } else if (synth_cmd->parsed()) {
      corpus.kinds.clear();
      for (const auto& k : split_commas(kinds)) corpus.kinds.push_back(synth::parse_distortion_kind(k));
      emit(app::run_synth(corpus, synth_out), "");
    } else if (inspect->parsed()) {
      app::InspectRequest r;
      r.ref = in_ref;
      r.dist = in_dist;
      r.ref_geometry = in_geometry.ref();
      r.dist_geometry = in_geometry.dist();
      r.signal = in_display.signal_format();
      r.weights = in_weights;
      r.frame = in_frame;
      r.out_dir = in_out;
      r.frame_options = in_display.frame();
      emit(app::run_inspect(r), "");
    } else if (bench->parsed()) {
      bench_req.weights = bench_weights;
      emit(app::run_bench(bench_req), "");
    } else if (init->parsed()) {
      TrainConfig c;
      apply_ablation_overrides(c, parse_pairs(init_ablation));
      c.ablation.validate();
      emit(app::run_init(init_out, c.ablation, init_seed), "");
    }
  } catch (const fdimq::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return fdimq::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
