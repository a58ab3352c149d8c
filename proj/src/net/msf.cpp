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

#include "fdim/msf.hpp"

#include <algorithm>
#include <string>

#include "fdim/errors.hpp"

namespace fdimq::net {

namespace nn = torch::nn;

ChannelGateImpl::ChannelGateImpl(int channels, int reduction) {
  const int hidden = std::max(1, channels / reduction);
  fc1 = register_module("fc1", nn::Linear(channels, hidden));
  fc2 = register_module("fc2", nn::Linear(hidden, channels));
}

torch::Tensor ChannelGateImpl::forward(const torch::Tensor& h) {
  const torch::Tensor avg = h.mean({2, 3});
  const torch::Tensor max = h.amax({2, 3});
  auto mlp = [&](const torch::Tensor& v) { return fc2(torch::relu(fc1(v))); };
  return torch::sigmoid(mlp(avg) + mlp(max)).unsqueeze(-1).unsqueeze(-1);
}

SpatialGateImpl::SpatialGateImpl(int kernel) {
  conv = register_module("conv", nn::Conv2d(nn::Conv2dOptions(2, 1, kernel).padding(kernel / 2)));
}

torch::Tensor SpatialGateImpl::forward(const torch::Tensor& h) {
  const torch::Tensor pooled = torch::cat({h.mean(1, true), h.amax(1, true)}, 1);
  return torch::sigmoid(conv(pooled));
}

AttentionRefineImpl::AttentionRefineImpl(int channels, bool enabled, int reduction,
                                         int spatial_kernel)
    : enabled_(enabled) {
  if (enabled_) {
    channel = register_module("channel", ChannelGate(channels, reduction));
    spatial = register_module("spatial", SpatialGate(spatial_kernel));
  }
}

RefineOutput AttentionRefineImpl::forward(const torch::Tensor& h) {
  if (!enabled_) return {h, h};
  RefineOutput out;
  out.h_channel = h * channel(h);
  out.h_refined = out.h_channel * spatial(out.h_channel);
  return out;
}

torch::Tensor attention_refine(AttentionRefine& block, const torch::Tensor& h) {
  return block->forward(h).h_refined;
}

torch::Tensor msf_fuse(const std::vector<torch::Tensor>& refined, std::size_t expected_scales) {
  if (refined.size() != expected_scales) {
    throw ContractError("msf_fuse: expected " + std::to_string(expected_scales) + " scales, got " +
                        std::to_string(refined.size()));
  }
  std::vector<torch::Tensor> pooled;
  pooled.reserve(refined.size());
  for (const auto& h : refined) {
    if (!h.defined()) throw ContractError("msf_fuse: missing scale");
    pooled.push_back(h.mean({2, 3}));
  }
  return torch::cat(pooled, 1);
}

}  // namespace fdimq::net
