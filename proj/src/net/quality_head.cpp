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

#include "fdim/quality_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdim/errors.hpp"

namespace fdimq::net {

namespace nn = torch::nn;

QualityHeadImpl::QualityHeadImpl(int in_features, int hidden1, int hidden2)
    : in_features_(in_features) {
  fc1 = register_module("fc1", nn::Linear(in_features, hidden1));
  fc2 = register_module("fc2", nn::Linear(hidden1, hidden2));
  fc3 = register_module("fc3", nn::Linear(hidden2, 2));
}

torch::Tensor QualityHeadImpl::forward(const torch::Tensor& v) {
  if (v.dim() != 2 || v.size(1) != in_features_) {
    throw ContractError("quality head expects [N, " + std::to_string(in_features_) + "] input");
  }
  return fc3(torch::relu(fc2(torch::relu(fc1(v)))));
}

torch::Tensor regress_frame(QualityHead& head, const torch::Tensor& v) { return head->forward(v); }

torch::Tensor positive_sigma(const torch::Tensor& raw_uncertainty) {
  return torch::nn::functional::softplus(raw_uncertainty) + kSigmaFloor;
}

double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

QualityPrediction aggregate_video(std::span<const double> scores,
                                  std::span<const double> raw_uncertainty) {
  if (scores.empty()) throw ContractError("aggregate_video: no frames");
  if (scores.size() != raw_uncertainty.size()) {
    throw ContractError("aggregate_video: score/uncertainty length mismatch");
  }
  QualityPrediction p;
  p.per_frame.assign(scores.begin(), scores.end());
  p.raw_uncertainty.assign(raw_uncertainty.begin(), raw_uncertainty.end());
  // Sorted summation makes the result independent of frame order.
  auto sorted_sum = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) total += x;
    return total;
  };
  const double q = sorted_sum(p.per_frame);
  const double r = sorted_sum(p.raw_uncertainty);
  const double count = static_cast<double>(scores.size());
  p.q_deep = q / count;
  p.sigma_hat = softplus(r / count) + kSigmaFloor;
  return p;
}

}  // namespace fdimq::net
