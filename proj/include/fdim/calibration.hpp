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
#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdim/errors.hpp"
#include "fdim/video_io.hpp"

namespace fdimq::calib {

enum class Branch { kDeep, kTrad };

std::string to_string(Branch branch);
Branch parse_branch(const std::string& name);

// Monotone logistic that puts one branch's raw output on the shared quality scale.
struct BranchMapping {
  Branch branch = Branch::kDeep;
  std::array<double, 4> beta{1.0, 1.0, 0.0, 0.0};
  double residual_rms = 0.0;
  std::string source_fingerprint;
};

double map_branch(double q, const BranchMapping& mapping);

// Raised when the fit does not converge; carries the best parameters seen.
class FitError : public NumericError {
 public:
  FitError(const std::string& what, BranchMapping best)
      : NumericError(what), best_(std::move(best)) {}
  const BranchMapping& best() const { return best_; }

 private:
  BranchMapping best_;
};

// Least-squares fit constrained to beta1, beta2 > 0 (increasing mapping).
BranchMapping fit_branch_mapping(std::span<const double> scores, std::span<const double> mos,
                                 Branch branch);

// Arithmetic mean of the two mapped branch scores. A missing branch is an
// error, never a silent single-branch result.
double fuse_scores(std::optional<double> mapped_deep, std::optional<double> mapped_trad);

struct FusedScore {
  double q_deep = 0.0;
  double q_trad = 0.0;
  double q_tilde_deep = 0.0;
  double q_tilde_trad = 0.0;
  double fused = 0.0;
};

FusedScore fuse(double q_deep, double q_trad, const BranchMapping& deep,
                const BranchMapping& trad);

struct Calibration {
  std::optional<BranchMapping> deep;
  std::optional<BranchMapping> trad;

  bool complete() const { return deep.has_value() && trad.has_value(); }
  nlohmann::json to_json() const;
  static Calibration from_json(const nlohmann::json& j);
};

void save_calibration(const std::filesystem::path& path, const Calibration& calibration);
Calibration load_calibration(const std::filesystem::path& path);

// Precomputed hand-crafted scores keyed by distorted-video id.
class VmafScoreTable {
 public:
  static VmafScoreTable load(const std::filesystem::path& csv_path);
  void insert(const std::string& dist_id, double score) { scores_[dist_id] = score; }
  // Looks up the exact id first, then the file name, then the stem.
  std::optional<double> find(const std::string& dist_id) const;
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::string, double> scores_;
};

struct TraditionalScore {
  double score = 0.0;
  std::string source;        // "precomputed" or "tool"
  std::string tool_version;  // empty for precomputed scores
  std::string model;
};

// Subprocess adapter for the libvmaf command-line tool. The binary is taken
// from the constructor argument, else $FDIM_VMAF_BIN, else "vmaf" on PATH.
class VmafTool {
 public:
  explicit VmafTool(std::string binary = {}, std::string model = "version=vmaf_v0.6.1",
                    std::filesystem::path scratch_dir = {});

  const std::string& binary() const { return binary_; }
  const std::string& model() const { return model_; }

  bool available() const;
  std::string version() const;

  // Clips must have identical geometry; dist_path is re-encoded into the
  // scratch directory when its size differs from the reference.
  TraditionalScore score(const std::filesystem::path& ref_path, const video::Geometry& ref_geometry,
                         const std::filesystem::path& dist_path,
                         const video::Geometry& dist_geometry) const;

  static std::uint64_t invocation_count() { return invocations_.load(); }

 private:
  std::string binary_;
  std::string model_;
  std::filesystem::path scratch_dir_;
  static std::atomic<std::uint64_t> invocations_;
  static std::mutex mutex_;
};

// Precomputed table first; the tool is only spawned when the id is absent.
TraditionalScore score_traditional(const std::filesystem::path& ref_path,
                                   const video::Geometry& ref_geometry,
                                   const std::filesystem::path& dist_path,
                                   const video::Geometry& dist_geometry,
                                   const VmafScoreTable* table, const VmafTool* tool);

struct ProcessResult {
  int exit_status = -1;
  std::string output;  // stdout and stderr
};

// fork/exec without a shell. Throws DependencyError when the binary cannot be run.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace fdimq::calib
