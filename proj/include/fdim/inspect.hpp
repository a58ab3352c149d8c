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
#include <string>
#include <vector>

#include "fdim/model.hpp"
#include "fdim/scoring.hpp"
#include "fdim/video_io.hpp"

namespace fdimq::net {

// A channel-averaged map at input resolution, min-max normalised to [0, 1].
// Constant maps normalise to all zeros.
struct FeatureMap {
  int scale = 1;           // 1..4
  std::string kind;        // "refined" (H~) or "discrepancy" (E)
  int width = 0;
  int height = 0;
  std::vector<float> values;
  bool constant = false;
};

std::vector<FeatureMap> compute_feature_maps(FdimNet& model, const video::RgbImage& ref,
                                             const video::RgbImage& dist);

struct ExportedMap {
  int scale = 1;
  std::string kind;
  std::filesystem::path grayscale;
  std::filesystem::path overlay;
};

// Writes <kind>_s<scale>.png and <kind>_s<scale>_overlay.png per scale.
std::vector<ExportedMap> export_feature_maps(FdimNet& model, const video::RgbImage& ref,
                                             const video::RgbImage& dist,
                                             const std::filesystem::path& out_dir);

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);  // interleaved RGB

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};
PngImage read_png(const std::filesystem::path& path);

struct ComplexityReport {
  std::int64_t parameters = 0;
  double seconds = 0.0;       // wall clock over the scoring path, no file I/O
  double flops = 0.0;         // analytic, whole clip
  double flops_per_frame = 0.0;
  int frames_scored = 0;
  int width = 0;
  int height = 0;
  int frames = 0;
};

// Multiply-accumulates counted as two FLOPs; convolutions, linear layers,
// bilinear sampling, gating and discrepancy products are included.
double estimate_flops(const ModelConfig& config, int width, int height);

// Times score_deep-equivalent work over a procedural clip of the given size.
// Only the sampled frames are materialised.
ComplexityReport measure_complexity(FdimNet& model, int width = 1920, int height = 1080,
                                    int frames = 150, double fps = 25.0,
                                    const ScoreOptions& options = {});

}  // namespace fdimq::net
