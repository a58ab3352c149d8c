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

#include "fdim/backbone.hpp"

#include <string>

#include "fdim/errors.hpp"

namespace fdimq::net {

namespace nn = torch::nn;

BasicBlockImpl::BasicBlockImpl(int in_channels, int out_channels, int stride) {
  conv1 = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 3)
                              .stride(stride).padding(1).bias(false)));
  bn1 = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2 = register_module(
      "conv2",
      nn::Conv2d(nn::Conv2dOptions(out_channels, out_channels, 3).padding(1).bias(false)));
  bn2 = register_module("bn2", nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    downsample = register_module(
        "downsample",
        nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1)
                                      .stride(stride).bias(false)),
                       nn::BatchNorm2d(out_channels)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  torch::Tensor out = torch::relu(bn1(conv1(x)));
  out = bn2(conv2(out));
  const torch::Tensor identity = downsample ? downsample->forward(x) : x;
  return torch::relu(out + identity);
}

BackboneImpl::BackboneImpl(const BackboneConfig& config) : config_(config) {
  for (int s = 0; s < 4; ++s) {
    if (config.widths[s] <= 0 || config.blocks[s] <= 0) {
      throw ConfigError("backbone widths and block counts must be positive");
    }
  }
  const int stem = config.widths[0];
  conv1 = register_module(
      "conv1", nn::Conv2d(nn::Conv2dOptions(3, stem, 7).stride(2).padding(3).bias(false)));
  bn1 = register_module("bn1", nn::BatchNorm2d(stem));
  maxpool = register_module("maxpool", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
  int in_channels = stem;
  for (int s = 0; s < 4; ++s) {
    nn::Sequential layer;
    for (int b = 0; b < config.blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      layer->push_back(BasicBlock(in_channels, config.widths[s], stride));
      in_channels = config.widths[s];
    }
    layers_[s] = register_module("layer" + std::to_string(s + 1), layer);
  }
  mean_ = register_buffer("input_mean", torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1}));
  std_ = register_buffer("input_std", torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1}));
  init_backbone_weights(*this);
}

FeaturePyramid BackboneImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw ContractError("backbone input must be [N, 3, H, W]");
  }
  if (x.size(2) < kMinInputSide || x.size(3) < kMinInputSide) {
    throw GeometryError("backbone input " + std::to_string(x.size(3)) + "x" +
                        std::to_string(x.size(2)) + " is smaller than 32x32");
  }
  torch::Tensor h = config_.standardize ? (x - mean_) / std_ : x;
  h = maxpool(torch::relu(bn1(conv1(h))));
  FeaturePyramid pyramid;
  for (auto& layer : layers_) {
    h = layer->forward(h);
    pyramid.levels.push_back(h);
  }
  return pyramid;
}

FeaturePyramid extract_pyramid(Backbone& backbone, const torch::Tensor& frame) {
  return backbone->forward(frame);
}

void init_backbone_weights(torch::nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      nn::init::ones_(bn->weight);
      nn::init::zeros_(bn->bias);
    }
  }
}

}  // namespace fdimq::net
