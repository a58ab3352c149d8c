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

#include "fdim/model.hpp"

#include <string>

#include "fdim/errors.hpp"

namespace fdimq::net {

int ModelConfig::fused_width() const {
  int total = 0;
  for (int w : backbone.widths) total += w;
  return total;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"widths", backbone.widths},
          {"blocks", backbone.blocks},
          {"standardize", backbone.standardize},
          {"offset_source", to_string(ablation.offset_source)},
          {"use_discrepancy_map", ablation.use_discrepancy_map},
          {"use_deformable", ablation.use_deformable},
          {"use_msf_attention", ablation.use_msf_attention},
          {"cafm_kernel", cafm_kernel},
          {"msf_reduction", msf_reduction},
          {"spatial_kernel", spatial_kernel},
          {"head_hidden", {head_hidden1, head_hidden2}}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.backbone.widths = j.at("widths").get<std::array<int, 4>>();
    c.backbone.blocks = j.at("blocks").get<std::array<int, 4>>();
    c.backbone.standardize = j.value("standardize", true);
    c.ablation.offset_source = parse_offset_source(j.at("offset_source").get<std::string>());
    c.ablation.use_discrepancy_map = j.at("use_discrepancy_map").get<bool>();
    c.ablation.use_deformable = j.at("use_deformable").get<bool>();
    c.ablation.use_msf_attention = j.at("use_msf_attention").get<bool>();
    c.cafm_kernel = j.value("cafm_kernel", 3);
    c.msf_reduction = j.value("msf_reduction", 16);
    c.spatial_kernel = j.value("spatial_kernel", 7);
    const auto hidden = j.at("head_hidden").get<std::array<int, 2>>();
    c.head_hidden1 = hidden[0];
    c.head_hidden2 = hidden[1];
    c.ablation.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("model config: ") + e.what());
  }
}

FdimNetImpl::FdimNetImpl(const ModelConfig& config) : config_(config) {
  config_.ablation.validate();
  backbone = register_module("backbone", Backbone(config_.backbone));
  for (int s = 0; s < 4; ++s) {
    const int c = config_.backbone.widths[s];
    cafm.push_back(register_module("cafm" + std::to_string(s + 1),
                                   CafmBlock(c, config_.ablation, config_.cafm_kernel)));
    msf.push_back(register_module(
        "msf" + std::to_string(s + 1),
        AttentionRefine(c, config_.ablation.use_msf_attention, config_.msf_reduction,
                        config_.spatial_kernel)));
  }
  head = register_module("head", QualityHead(config_.fused_width(), config_.head_hidden1,
                                             config_.head_hidden2));
}

torch::Tensor FdimNetImpl::forward_from_pyramids(const FeaturePyramid& ref,
                                                 const FeaturePyramid& dist,
                                                 ForwardDetail* detail) {
  std::vector<torch::Tensor> refined;
  for (int s = 0; s < 4; ++s) {
    torch::Tensor f_ref = ref.levels.at(s);
    const torch::Tensor& f_dist = dist.levels.at(s);
    if (f_ref.size(0) == 1 && f_dist.size(0) > 1) f_ref = f_ref.expand_as(f_dist);
    CafmOutput c = cafm[s]->forward(f_ref, f_dist);
    RefineOutput r = msf[s]->forward(c.h);
    refined.push_back(r.h_refined);
    if (detail) {
      detail->cafm.push_back(std::move(c));
      detail->refined.push_back(std::move(r));
    }
  }
  torch::Tensor v = msf_fuse(refined);
  torch::Tensor raw = head->forward(v);
  if (detail) {
    detail->fused = v;
    detail->raw = raw;
  }
  return raw;
}

namespace {

std::pair<FeaturePyramid, FeaturePyramid> shared_pyramids(Backbone& backbone,
                                                          const torch::Tensor& ref,
                                                          const torch::Tensor& dist) {
  if (ref.dim() != 4 || dist.dim() != 4 || ref.sizes().slice(1) != dist.sizes().slice(1)) {
    throw ContractError("reference and distorted batches must share [3, H, W]");
  }
  if (ref.size(0) != 1 && ref.size(0) != dist.size(0)) {
    throw ContractError("reference batch must be 1 or match the distorted batch");
  }
  // One pass through the single encoder for both inputs.
  const std::int64_t n_ref = ref.size(0);
  FeaturePyramid all = backbone->forward(torch::cat({ref, dist}, 0));
  FeaturePyramid r, d;
  for (const auto& level : all.levels) {
    r.levels.push_back(level.slice(0, 0, n_ref));
    d.levels.push_back(level.slice(0, n_ref));
  }
  return {std::move(r), std::move(d)};
}

}  // namespace

torch::Tensor FdimNetImpl::forward(const torch::Tensor& ref, const torch::Tensor& dist) {
  auto [r, d] = shared_pyramids(backbone, ref, dist);
  return forward_from_pyramids(r, d);
}

ForwardDetail FdimNetImpl::forward_detailed(const torch::Tensor& ref, const torch::Tensor& dist) {
  ForwardDetail detail;
  auto [r, d] = shared_pyramids(backbone, ref, dist);
  forward_from_pyramids(r, d, &detail);
  detail.ref = std::move(r);
  detail.dist = std::move(d);
  return detail;
}

std::int64_t FdimNetImpl::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : parameters()) total += p.numel();
  return total;
}

FdimNet make_model(const ModelConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  return FdimNet(config);
}

ModelConfig model_config_from(const TrainConfig& train) {
  ModelConfig c;
  c.ablation = train.ablation;
  return c;
}

torch::Tensor image_to_tensor(const std::vector<float>& chw, int width, int height) {
  if (chw.size() != static_cast<std::size_t>(3) * width * height) {
    throw ContractError("image_to_tensor: buffer size does not match geometry");
  }
  return torch::from_blob(const_cast<float*>(chw.data()), {1, 3, height, width}, torch::kFloat32)
      .clone();
}

}  // namespace fdimq::net
