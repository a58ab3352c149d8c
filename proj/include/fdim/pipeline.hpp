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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdim/config.hpp"
#include "fdim/evaluation.hpp"
#include "fdim/scoring.hpp"
#include "fdim/synth.hpp"
#include "fdim/video_io.hpp"

namespace fdimq::app {

inline constexpr const char* kVersion = "0.1.0";

struct ScoreRequest {
  std::filesystem::path ref;
  std::filesystem::path dist;
  video::Geometry ref_geometry;
  video::Geometry dist_geometry;
  video::SignalFormat signal = video::SignalFormat::kSdrSrgb;
  std::filesystem::path weights;
  std::optional<std::filesystem::path> calibration;  // else the checkpoint's embedded one
  std::optional<std::filesystem::path> vmaf_scores;
  std::string vmaf_binary;
  bool deep_only = false;
  net::ScoreOptions options;
  std::uint64_t seed = 0;
};

// {q_deep, q_trad, q_tilde_deep, q_tilde_trad, Q, sigma_hat, per_frame,
//  frame_indices, tool_versions, ..., timing}. Only "timing" varies between
// identical runs.
nlohmann::json run_score(const ScoreRequest& request);

struct TrainRequest {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  TrainConfig config;
  std::optional<std::filesystem::path> init_weights;  // e.g. converted pretrained encoder
  net::FrameOptions frame;
  bool quiet = false;
};
nlohmann::json run_train(const TrainRequest& request);

enum class EvalMethod { kDeep, kTrad, kFused };
EvalMethod parse_eval_method(const std::string& name);
std::string to_string(EvalMethod method);

struct EvaluateRequest {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> calibration;
  std::optional<std::filesystem::path> vmaf_scores;
  std::string vmaf_binary;
  EvalMethod method = EvalMethod::kDeep;
  eval::EvalOptions eval;
  std::optional<std::filesystem::path> out_dir;  // report.json + report.csv
  video::SignalFormat signal = video::SignalFormat::kSdrSrgb;
  net::ScoreOptions options;
};
nlohmann::json run_evaluate(const EvaluateRequest& request);

struct CalibrateRequest {
  std::filesystem::path manifest;
  std::filesystem::path weights;
  std::optional<std::filesystem::path> vmaf_scores;
  std::string vmaf_binary;
  std::vector<std::string> branches{"deep", "trad"};
  std::filesystem::path out;                          // calibration JSON
  std::optional<std::filesystem::path> embed_into;   // checkpoint copy with calibration
  video::SignalFormat signal = video::SignalFormat::kSdrSrgb;
  net::ScoreOptions options;
};
nlohmann::json run_fit_calibration(const CalibrateRequest& request);

nlohmann::json run_synth(const synth::CorpusOptions& options, const std::filesystem::path& out_dir);

struct InspectRequest {
  std::filesystem::path ref;
  std::filesystem::path dist;
  video::Geometry ref_geometry;
  video::Geometry dist_geometry;
  video::SignalFormat signal = video::SignalFormat::kSdrSrgb;
  std::filesystem::path weights;
  int frame = 0;
  std::filesystem::path out_dir;
  net::FrameOptions frame_options;
};
nlohmann::json run_inspect(const InspectRequest& request);

struct BenchRequest {
  std::filesystem::path weights;
  int width = 1920;
  int height = 1080;
  int frames = 150;
  double fps = 25.0;
  int runs = 2;
};
nlohmann::json run_bench(const BenchRequest& request);

// Fresh, deterministically initialised checkpoint.
nlohmann::json run_init(const std::filesystem::path& out, const AblationConfig& ablation,
                        std::uint64_t seed);

}  // namespace fdimq::app
