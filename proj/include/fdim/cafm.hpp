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

#include <torch/torch.h>

#include "fdim/config.hpp"

namespace fdimq::net {

// (F_R - F_D)^2, elementwise.
torch::Tensor discrepancy_map(const torch::Tensor& f_ref, const torch::Tensor& f_dist);

// Channel concatenation (F_R, F_D, E). An undefined E gives (F_R, F_D).
torch::Tensor assemble_comparison(const torch::Tensor& f_ref, const torch::Tensor& f_dist,
                                  const torch::Tensor& e = {});

// Deformable convolution, stride 1, "same" zero padding, one offset group.
// offsets: [N, 2*K*K, H, W] with channel 2k = dy and 2k+1 = dx for kernel tap
// k in row-major order. Samples outside the grid read as zero. Throws
// NumericError on non-finite offsets.
torch::Tensor deform_conv2d(const torch::Tensor& input, const torch::Tensor& offsets,
                            const torch::Tensor& weight, const torch::Tensor& bias = {});

// Bilinear gather of every kernel tap: [N, C, K*K, H*W]. Exposed for tests.
torch::Tensor deformable_columns(const torch::Tensor& input, const torch::Tensor& offsets,
                                 int kernel);

struct CafmOutput {
  torch::Tensor e;        // undefined when the discrepancy map is disabled
  torch::Tensor c;
  torch::Tensor offsets;  // undefined for the standard-convolution variant
  torch::Tensor h;
};

class CafmBlockImpl : public torch::nn::Module {
 public:
  CafmBlockImpl(int channels, const AblationConfig& ablation, int kernel = 3);

  CafmOutput forward(const torch::Tensor& f_ref, const torch::Tensor& f_dist);
  torch::Tensor generate_offsets(const torch::Tensor& source);

  int channels() const { return channels_; }
  int comparison_channels() const { return ablation_.use_discrepancy_map ? 3 * channels_ : 2 * channels_; }
  int offset_channels() const;
  const AblationConfig& ablation() const { return ablation_; }

  torch::nn::Conv2d aggregate{nullptr};   // weights of the (deformable) 3x3 layer
  torch::nn::Conv2d offset_gen{nullptr};  // absent for use_deformable=false

 private:
  int channels_;
  int kernel_;
  AblationConfig ablation_;
};
TORCH_MODULE(CafmBlock);

}  // namespace fdimq::net
