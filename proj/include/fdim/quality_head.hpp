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

#include <span>
#include <vector>

#include <torch/torch.h>

namespace fdimq::net {

inline constexpr double kSigmaFloor = 1e-3;

// Three fully connected layers; output column 0 is the score, column 1 the
// raw (pre-softplus) uncertainty.
class QualityHeadImpl : public torch::nn::Module {
 public:
  QualityHeadImpl(int in_features, int hidden1 = 512, int hidden2 = 128);
  torch::Tensor forward(const torch::Tensor& v);  // [N, 2]
  int in_features() const { return in_features_; }

  torch::nn::Linear fc1{nullptr}, fc2{nullptr}, fc3{nullptr};

 private:
  int in_features_;
};
TORCH_MODULE(QualityHead);

torch::Tensor regress_frame(QualityHead& head, const torch::Tensor& v);

// softplus(r) + floor; differentiable.
torch::Tensor positive_sigma(const torch::Tensor& raw_uncertainty);

struct QualityPrediction {
  std::vector<double> per_frame;
  std::vector<double> raw_uncertainty;
  std::vector<int> frame_indices;
  double q_deep = 0.0;
  double sigma_hat = 0.0;
};

// q = mean(scores), sigma = softplus(mean(raw uncertainties)) + 1e-3.
QualityPrediction aggregate_video(std::span<const double> scores,
                                  std::span<const double> raw_uncertainty);

double softplus(double x);

}  // namespace fdimq::net
