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

#include <array>
#include <vector>

#include <torch/torch.h>

namespace fdimq::net {

// Four-stage residual encoder (18-layer layout by default). Parameter names
// follow the torchvision ResNet so converted checkpoints load directly.
struct BackboneConfig {
  std::array<int, 4> widths{64, 128, 256, 512};
  std::array<int, 4> blocks{2, 2, 2, 2};
  bool standardize = true;  // ImageNet mean/std applied to [0, 1] input

  bool operator==(const BackboneConfig&) const = default;
};

inline constexpr int kMinInputSide = 32;
inline constexpr std::array<int, 4> kStageStrides{4, 8, 16, 32};

struct FeaturePyramid {
  std::vector<torch::Tensor> levels;  // [N, C_s, ceil(H/stride_s), ceil(W/stride_s)]
};

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in_channels, int out_channels, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const BackboneConfig& config = {});

  // x: [N, 3, H, W] in [0, 1]. Throws GeometryError below 32x32.
  FeaturePyramid forward(const torch::Tensor& x);

  const BackboneConfig& config() const { return config_; }

 private:
  BackboneConfig config_;
  torch::nn::Conv2d conv1{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr};
  torch::nn::MaxPool2d maxpool{nullptr};
  std::array<torch::nn::Sequential, 4> layers_;
  torch::Tensor mean_, std_;
};
TORCH_MODULE(Backbone);

FeaturePyramid extract_pyramid(Backbone& backbone, const torch::Tensor& frame);

void init_backbone_weights(torch::nn::Module& module);

}  // namespace fdimq::net
