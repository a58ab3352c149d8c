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

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "fdim/config.hpp"
#include "fdim/manifest.hpp"
#include "fdim/model.hpp"
#include "fdim/pairwise.hpp"
#include "fdim/scoring.hpp"

namespace fdimq::net {

// Differentiable preference and fidelity loss on tensors.
torch::Tensor normal_cdf(const torch::Tensor& x);
torch::Tensor predicted_preference(const torch::Tensor& q_i, const torch::Tensor& sigma_i,
                                   const torch::Tensor& q_j, const torch::Tensor& sigma_j);
torch::Tensor fidelity_loss(const torch::Tensor& target, const torch::Tensor& predicted);
// raw_i, raw_j: [.., 2] head outputs (score, raw uncertainty).
torch::Tensor pair_loss(const torch::Tensor& raw_i, const torch::Tensor& raw_j, double target);

struct StepRecord {
  int step = 0;
  int pairs_seen = 0;
  double loss = 0.0;       // mean over the pairs of the step
  double grad_norm = 0.0;  // before clipping
  double mean_sigma = 0.0; // mean predicted uncertainty over the step's pairs
  double mean_abs_z = 0.0; // mean |q_i - q_j| / sqrt(sigma_i^2 + sigma_j^2)
};

struct TrainOptions {
  std::filesystem::path out_dir;        // checkpoint, loss CSV, diagnostics
  FrameOptions frame;
  std::size_t cache_bytes = std::size_t{1} << 30;
  std::function<void(const StepRecord&)> on_step;
  bool save = true;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  std::vector<double> pair_losses;
  std::size_t pairs = 0;
  std::size_t homogeneous = 0;
  std::size_t heterogeneous = 0;
  std::vector<std::string> selected_refs;
  std::string fingerprint;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  double seconds = 0.0;
};

// One pass of Adam over `pairs`: gradients of batch_pairs pairs are summed
// (each scaled by 1 / batch_pairs) before every optimiser step.
TrainReport train_epoch(FdimNet& model, torch::optim::Adam& optimizer,
                        const std::vector<ManifestRow>& rows,
                        const std::vector<train::TrainPair>& pairs, const TrainConfig& config,
                        const TrainOptions& options, std::mt19937_64& rng, int step_offset = 0);

// Full run: pair construction per epoch, training, checkpoint and loss CSV.
TrainReport train(FdimNet& model, const std::vector<ManifestRow>& rows, const TrainConfig& config,
                  const TrainOptions& options);

torch::optim::Adam make_optimizer(FdimNet& model, const TrainConfig& config);

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps);

}  // namespace fdimq::net
