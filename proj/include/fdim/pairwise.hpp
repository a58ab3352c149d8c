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
#include <random>
#include <string>
#include <vector>

#include "fdim/config.hpp"
#include "fdim/manifest.hpp"

namespace fdimq::train {

struct SubjectiveRecord {
  std::string ref_id;
  std::string dist_id;
  double mos = 0.0;
  double mos_std = 0.0;
  std::string codec_tag;
  std::string codec_group;  // "neural" or "traditional"
  std::size_t source_row = 0;  // index into the manifest the record came from
};

std::vector<SubjectiveRecord> records_from_manifest(const std::vector<ManifestRow>& rows);

enum class PairKind { kHomogeneous, kHeterogeneous };

struct TrainPair {
  SubjectiveRecord left;
  SubjectiveRecord right;
  PairKind kind = PairKind::kHomogeneous;
  double target = 0.5;  // probability that left is better than right
};

// Standard normal CDF.
double normal_cdf(double x);

// Phi((mu_i - mu_j) / sqrt(sigma_i^2 + sigma_j^2)). With both sigmas zero the
// preference degenerates to 1, 0.5 or 0 by the sign of mu_i - mu_j.
double gt_preference(double mu_i, double sigma_i, double mu_j, double sigma_j);

// Same form on predicted scores and uncertainties. Sigmas must be positive.
double predicted_preference(double q_i, double sigma_i, double q_j, double sigma_j);

// 1 - g p - (1 - g)(1 - p), for g, p in [0, 1].
double fidelity_loss(double target, double predicted);

// Highest MOS admitted into training; brighter-than-reference ratings are excluded.
inline constexpr double kMaxTrainingMos = 5.0;

struct PairPlan {
  std::vector<TrainPair> pairs;
  std::vector<std::string> selected_refs;  // sorted
  std::size_t eligible_records = 0;
  std::size_t homogeneous = 0;
  std::size_t heterogeneous = 0;
};

// Builds one epoch of pairs. Records are filtered (MOS cap, codec mix), the
// data fraction selects ceil(f * N) reference contents, then homogeneous and
// heterogeneous pairs are drawn in the configured ratio so each video appears
// in about pairs_per_video pairs.
PairPlan build_pairs(const std::vector<SubjectiveRecord>& records, const TrainConfig& config,
                     std::mt19937_64& rng);

std::size_t count_homogeneous_candidates(const std::vector<SubjectiveRecord>& records);

}  // namespace fdimq::train
