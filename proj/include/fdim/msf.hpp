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

#include <vector>

#include <torch/torch.h>

namespace fdimq::net {

// Shared two-layer MLP over average- and max-pooled channel descriptors.
class ChannelGateImpl : public torch::nn::Module {
 public:
  ChannelGateImpl(int channels, int reduction = 16);
  torch::Tensor forward(const torch::Tensor& h);  // gate in (0, 1), [N, C, 1, 1]

 private:
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(ChannelGate);

// 7x7 convolution over the channel-wise mean and max maps.
class SpatialGateImpl : public torch::nn::Module {
 public:
  explicit SpatialGateImpl(int kernel = 7);
  torch::Tensor forward(const torch::Tensor& h);  // gate in (0, 1), [N, 1, H, W]

 private:
  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(SpatialGate);

struct RefineOutput {
  torch::Tensor h_channel;  // H_c
  torch::Tensor h_refined;  // H~
};

// Channel attention followed by spatial attention. Disabled, it is an exact
// identity with no parameters.
class AttentionRefineImpl : public torch::nn::Module {
 public:
  AttentionRefineImpl(int channels, bool enabled, int reduction = 16, int spatial_kernel = 7);
  RefineOutput forward(const torch::Tensor& h);
  bool enabled() const { return enabled_; }

 private:
  bool enabled_;
  ChannelGate channel{nullptr};
  SpatialGate spatial{nullptr};
};
TORCH_MODULE(AttentionRefine);

torch::Tensor attention_refine(AttentionRefine& block, const torch::Tensor& h);

// Global average pool per scale, concatenated in scale order: [N, sum C_s].
torch::Tensor msf_fuse(const std::vector<torch::Tensor>& refined, std::size_t expected_scales = 4);

}  // namespace fdimq::net
