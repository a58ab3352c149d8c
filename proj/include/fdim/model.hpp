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
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "fdim/backbone.hpp"
#include "fdim/cafm.hpp"
#include "fdim/config.hpp"
#include "fdim/msf.hpp"
#include "fdim/quality_head.hpp"

namespace fdimq::net {

struct ModelConfig {
  BackboneConfig backbone;
  AblationConfig ablation;
  int cafm_kernel = 3;
  int msf_reduction = 16;
  int spatial_kernel = 7;
  int head_hidden1 = 512;
  int head_hidden2 = 128;

  int fused_width() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct ForwardDetail {
  FeaturePyramid ref;
  FeaturePyramid dist;
  std::vector<CafmOutput> cafm;
  std::vector<RefineOutput> refined;
  torch::Tensor fused;  // V, [N, fused_width]
  torch::Tensor raw;    // [N, 2]: score, raw uncertainty
};

class FdimNetImpl : public torch::nn::Module {
 public:
  explicit FdimNetImpl(const ModelConfig& config = {});

  // ref: [N or 1, 3, H, W], dist: [M, 3, H, W] in [0, 1]. A single reference
  // frame is shared by all distorted frames. Returns [M, 2].
  torch::Tensor forward(const torch::Tensor& ref, const torch::Tensor& dist);
  ForwardDetail forward_detailed(const torch::Tensor& ref, const torch::Tensor& dist);
  torch::Tensor forward_from_pyramids(const FeaturePyramid& ref, const FeaturePyramid& dist,
                                      ForwardDetail* detail = nullptr);

  const ModelConfig& config() const { return config_; }
  std::int64_t parameter_count() const;

  Backbone backbone{nullptr};
  std::vector<CafmBlock> cafm;
  std::vector<AttentionRefine> msf;
  QualityHead head{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(FdimNet);

// Deterministic construction: seeds the torch generator before initialising.
FdimNet make_model(const ModelConfig& config, std::uint64_t seed);

ModelConfig model_config_from(const TrainConfig& train);

// Image helpers: RGB planar float -> [1, 3, H, W].
torch::Tensor image_to_tensor(const std::vector<float>& chw, int width, int height);

}  // namespace fdimq::net
