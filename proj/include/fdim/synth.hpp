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
#include <utility>
#include <vector>

#include "fdim/manifest.hpp"
#include "fdim/video_io.hpp"

namespace fdimq::synth {

enum class DistortionKind { kGaussianBlur, kAdditiveNoise, kBlockQuantization, kCombined };

std::string to_string(DistortionKind kind);
DistortionKind parse_distortion_kind(const std::string& name);
// Codec-group label used in manifests: smoothing/hallucination-like kinds are
// tagged "neural", quantisation/noise kinds "traditional".
std::string codec_group(DistortionKind kind);

struct DistortionRecipe {
  DistortionKind kind = DistortionKind::kGaussianBlur;
  int level = 1;  // 1 (mild) .. 5 (severe)
  std::uint64_t seed = 0;
};

struct SeverityParams {
  double blur_sigma = 0.0;  // pixels
  double noise_std = 0.0;   // 8-bit code values
  double quant_step = 0.0;  // 8-bit code values, 8x8 blocks
};

// Strictly more severe with each level.
SeverityParams severity(const DistortionRecipe& recipe);

// (mu, sigma): mu strictly decreasing in level, within (1, 5]; sigma = 0.3.
std::pair<double, double> pseudo_mos(const DistortionRecipe& recipe);

struct CorpusOptions {
  int n_refs = 4;
  std::vector<DistortionKind> kinds{DistortionKind::kGaussianBlur, DistortionKind::kAdditiveNoise};
  int levels = 5;
  int width = 320;
  int height = 256;
  int frames = 10;
  double fps = 5.0;
  int bit_depth = 8;
  std::uint64_t seed = 0;
};

// Procedural content: drifting gradients, oriented gratings, smooth noise
// fields and hard-edged shapes. Different `index` values give different content.
video::VideoClip generate_reference(int index, const CorpusOptions& options);
video::Frame generate_reference_frame(int index, const CorpusOptions& options, int t);

video::VideoClip apply_distortion(const video::VideoClip& clip, const DistortionRecipe& recipe);
video::Frame apply_distortion(const video::Frame& frame, int bit_depth,
                              const DistortionRecipe& recipe, int frame_index);

// Writes ref_XXX.yuv, one distorted clip per (reference, kind, level) and
// manifest.csv into out_dir. Returns the manifest rows.
std::vector<ManifestRow> generate_corpus(const CorpusOptions& options,
                                         const std::filesystem::path& out_dir);

// Separable Gaussian blur of a plane, edge-clamped; exposed for tests.
video::Plane gaussian_blur(const video::Plane& plane, double sigma, int bit_depth);

}  // namespace fdimq::synth
