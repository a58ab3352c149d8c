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

#include "fdim/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fdim/errors.hpp"

namespace fdimq::train {

std::vector<SubjectiveRecord> records_from_manifest(const std::vector<ManifestRow>& rows) {
  std::vector<SubjectiveRecord> records;
  records.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRow& r = rows[i];
    records.push_back({r.ref_id(), r.dist_id(), r.mos, r.mos_std, r.codec, r.codec_group, i});
  }
  return records;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gt_preference(double mu_i, double sigma_i, double mu_j, double sigma_j) {
  if (sigma_i < 0.0 || sigma_j < 0.0) throw ContractError("gt_preference: negative sigma");
  const double var = sigma_i * sigma_i + sigma_j * sigma_j;
  const double diff = mu_i - mu_j;
  if (var <= 0.0) return diff > 0.0 ? 1.0 : (diff < 0.0 ? 0.0 : 0.5);
  return normal_cdf(diff / std::sqrt(var));
}

double predicted_preference(double q_i, double sigma_i, double q_j, double sigma_j) {
  if (!(sigma_i > 0.0) || !(sigma_j > 0.0)) {
    throw ContractError("predicted_preference: uncertainties must be positive");
  }
  return normal_cdf((q_i - q_j) / std::sqrt(sigma_i * sigma_i + sigma_j * sigma_j));
}

double fidelity_loss(double target, double predicted) {
  if (!(target >= 0.0 && target <= 1.0 && predicted >= 0.0 && predicted <= 1.0)) {
    throw ContractError("fidelity_loss: probabilities must lie in [0, 1]");
  }
  return 1.0 - target * predicted - (1.0 - target) * (1.0 - predicted);
}

std::size_t count_homogeneous_candidates(const std::vector<SubjectiveRecord>& records) {
  std::map<std::string, std::set<std::string>> by_ref;
  for (const auto& r : records) by_ref[r.ref_id].insert(r.dist_id);
  std::size_t n = 0;
  for (const auto& [ref, dists] : by_ref) n += dists.size() * (dists.size() - 1) / 2;
  return n;
}

PairPlan build_pairs(const std::vector<SubjectiveRecord>& records, const TrainConfig& config,
                     std::mt19937_64& rng) {
  config.validate();
  if (records.size() < 2) throw ConfigError("build_pairs: need at least 2 records");

  std::vector<SubjectiveRecord> eligible;
  for (const auto& r : records) {
    if (r.mos > kMaxTrainingMos) continue;
    if (config.codec_mix == CodecMix::kTraditionalOnly && r.codec_group != "traditional") continue;
    eligible.push_back(r);
  }

  std::vector<std::string> refs;
  for (const auto& r : eligible) refs.push_back(r.ref_id);
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  const std::size_t keep = std::min(
      refs.size(),
      static_cast<std::size_t>(std::ceil(config.data_fraction * static_cast<double>(refs.size()) - 1e-9)));
  std::shuffle(refs.begin(), refs.end(), rng);
  refs.resize(keep);
  std::sort(refs.begin(), refs.end());
  const std::set<std::string> selected(refs.begin(), refs.end());
  std::erase_if(eligible, [&](const SubjectiveRecord& r) { return !selected.count(r.ref_id); });

  PairPlan plan;
  plan.selected_refs = refs;
  plan.eligible_records = eligible.size();
  if (eligible.size() < 2) return plan;

  const std::size_t n = eligible.size();
  std::size_t target = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * config.pairs_per_video / 2.0));
  if (config.max_pairs > 0) target = std::min<std::size_t>(target, config.max_pairs);

  using Index = std::pair<std::size_t, std::size_t>;
  std::vector<Index> homogeneous;
  std::map<std::string, std::vector<std::size_t>> by_ref;
  for (std::size_t i = 0; i < n; ++i) by_ref[eligible[i].ref_id].push_back(i);
  for (const auto& [ref, idx] : by_ref) {
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        if (eligible[idx[a]].dist_id != eligible[idx[b]].dist_id) homogeneous.emplace_back(idx[a], idx[b]);
      }
    }
  }
  std::shuffle(homogeneous.begin(), homogeneous.end(), rng);

  std::size_t total_hetero = 0;
  {
    std::size_t same = 0;
    for (const auto& [ref, idx] : by_ref) same += idx.size() * idx.size();
    total_hetero = (n * n - same) / 2;
  }

  const auto want_hetero = static_cast<std::size_t>(
      std::llround(static_cast<double>(target) * config.heterogeneous_fraction));
  const std::size_t homo_count = std::min(homogeneous.size(), target - std::min(target, want_hetero));
  homogeneous.resize(homo_count);
  const std::size_t hetero_count = std::min(total_hetero, target - homo_count);

  std::vector<Index> heterogeneous;
  if (hetero_count > 0) {
    if (total_hetero <= 4 * hetero_count) {
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          if (eligible[a].ref_id != eligible[b].ref_id) heterogeneous.emplace_back(a, b);
        }
      }
      std::shuffle(heterogeneous.begin(), heterogeneous.end(), rng);
      heterogeneous.resize(hetero_count);
    } else {
      std::set<Index> seen;
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      while (heterogeneous.size() < hetero_count) {
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (eligible[a].ref_id == eligible[b].ref_id) continue;
        if (a > b) std::swap(a, b);
        if (seen.insert({a, b}).second) heterogeneous.emplace_back(a, b);
      }
    }
  }

  std::vector<std::pair<Index, PairKind>> all;
  for (const auto& p : homogeneous) all.push_back({p, PairKind::kHomogeneous});
  for (const auto& p : heterogeneous) all.push_back({p, PairKind::kHeterogeneous});
  std::shuffle(all.begin(), all.end(), rng);

  std::bernoulli_distribution swap(0.5);
  for (const auto& [idx, kind] : all) {
    TrainPair pair;
    pair.left = eligible[idx.first];
    pair.right = eligible[idx.second];
    if (swap(rng)) std::swap(pair.left, pair.right);
    pair.kind = kind;
    pair.target = gt_preference(pair.left.mos, pair.left.mos_std, pair.right.mos, pair.right.mos_std);
    plan.pairs.push_back(std::move(pair));
  }
  plan.homogeneous = homogeneous.size();
  plan.heterogeneous = heterogeneous.size();
  return plan;
}

}  // namespace fdimq::train
