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

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fdimq::eval {

// Pearson correlation. Throws DegenerateError on zero variance, ContractError
// on length mismatch or fewer than 3 samples.
double compute_plcc(std::span<const double> x, std::span<const double> y);

// Spearman correlation: Pearson over average ranks (ties share the mean rank).
double compute_srocc(std::span<const double> x, std::span<const double> y);

std::vector<double> average_ranks(std::span<const double> values);

struct LogisticFit {
  std::array<double, 5> params{0.0, 0.0, 0.0, 1.0, 0.0};  // identity by default
  std::vector<double> mapped;
  bool converged = false;
  bool degenerate = false;  // constant predictions; correlation undefined
  std::string warning;
};

double apply_eval_logistic(double q, const std::array<double, 5>& params);

// Five-parameter logistic (with linear term) mapping predictions onto the
// subjective scale. On failure the identity mapping is returned with a warning.
LogisticFit fit_eval_logistic(std::span<const double> pred, std::span<const double> mos);

struct EvalRecord {
  std::string dist_id;
  std::string ref_id;
  double predicted = 0.0;
  double mos = 0.0;
  std::map<std::string, std::string> tags;  // codec_group, dataset, ...
};

enum class Protocol { kPerSequence, kAllSequence };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& name);

struct CorrelationResult {
  std::optional<double> plcc;   // after the 5PL mapping
  std::optional<double> srocc;
  double raw_plcc = 0.0;        // before the mapping, when defined
  std::size_t count = 0;
  std::vector<std::string> notes;
};

struct AllSequenceResult {
  CorrelationResult correlation;
  LogisticFit mapping;
};

struct PerSequenceResult {
  std::optional<double> plcc;
  std::optional<double> srocc;
  std::size_t groups_used = 0;
  std::vector<std::string> skipped_groups;
  LogisticFit mapping;  // pooled fit, applied before the per-group PLCC
  std::map<std::string, CorrelationResult> groups;
};

struct SubsetReport {
  std::string name;  // "all" or "<key>=<value>"
  std::size_t count = 0;
  std::optional<AllSequenceResult> all_sequence;
  std::optional<PerSequenceResult> per_sequence;
};

struct EvalReport {
  std::string method;
  std::vector<Protocol> protocols;
  std::vector<SubsetReport> subsets;
  std::vector<EvalRecord> records;
  std::vector<double> mapped;  // per record, from the "all" subset mapping

  nlohmann::json to_json() const;
  const SubsetReport* subset(const std::string& name) const;
};

struct EvalOptions {
  std::vector<Protocol> protocols{Protocol::kPerSequence, Protocol::kAllSequence};
  std::vector<std::string> split_keys;  // e.g. codec_group
  std::size_t min_group_size = 3;
};

// Per-sequence: mean of within-reference-group correlations (groups smaller
// than min_group_size are skipped and listed). All-sequence: pooled correlation.
// Every split value is evaluated the same way as the full set.
EvalReport evaluate_protocol(const std::vector<EvalRecord>& records, const EvalOptions& options,
                             const std::string& method = "fdim");

// Flat per-record CSV for scatter/radar plots.
void write_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

}  // namespace fdimq::eval
