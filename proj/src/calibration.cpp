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

#include "fdim/calibration.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fdim/curve_fit.hpp"
#include "fdim/util.hpp"

namespace fdimq::calib {

std::atomic<std::uint64_t> VmafTool::invocations_{0};
std::mutex VmafTool::mutex_;

std::string to_string(Branch branch) { return branch == Branch::kDeep ? "deep" : "trad"; }

Branch parse_branch(const std::string& name) {
  if (name == "deep") return Branch::kDeep;
  if (name == "trad") return Branch::kTrad;
  throw ConfigError("unknown branch '" + name + "'");
}

double map_branch(double q, const BranchMapping& mapping) {
  if (!std::isfinite(q)) throw NumericError("map_branch: non-finite score");
  return fit::logistic4(q, mapping.beta);
}

namespace {

double spread(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// beta1 = exp(p0), beta2 = exp(p1), beta3 = p2, beta4 = p3.
fit::CurveModel increasing_logistic4() {
  fit::CurveModel m;
  m.num_params = 4;
  m.value = [](const Eigen::VectorXd& p, double q) {
    return fit::logistic4(q, {std::exp(p[0]), std::exp(p[1]), p[2], p[3]});
  };
  m.gradient = [](const Eigen::VectorXd& p, double q, Eigen::Ref<Eigen::VectorXd> g) {
    const double b1 = std::exp(p[0]);
    const double b2 = std::exp(p[1]);
    const double s = fit::stable_inverse_logistic(b2 * (q - p[2]));
    const double ds = s * (1.0 - s);
    g[0] = b1 * (0.5 - s);
    g[1] = b2 * b1 * ds * (q - p[2]);
    g[2] = -b1 * ds * b2;
    g[3] = 1.0;
  };
  return m;
}

std::string data_fingerprint(std::span<const double> a, std::span<const double> b) {
  std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(a.data()),
                                             a.size() * sizeof(double)));
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(double)),
              h);
  return hex64(h);
}

}  // namespace

BranchMapping fit_branch_mapping(std::span<const double> scores, std::span<const double> mos,
                                 Branch branch) {
  if (scores.size() != mos.size()) throw ContractError("fit_branch_mapping: length mismatch");
  if (scores.size() < 8) throw ContractError("fit_branch_mapping: need at least 8 points");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || !std::isfinite(mos[i])) {
      throw NumericError("fit_branch_mapping: non-finite input");
    }
  }
  if (spread(scores) < 1e-12 || spread(mos) < 1e-12) {
    throw DegenerateError("fit_branch_mapping: scores or MOS have zero variance");
  }
  const auto [smin, smax] = std::minmax_element(scores.begin(), scores.end());
  const auto [mmin, mmax] = std::minmax_element(mos.begin(), mos.end());
  const double mos_mean = std::accumulate(mos.begin(), mos.end(), 0.0) / static_cast<double>(mos.size());
  const double slope0 = 4.0 / (*smax - *smin);

  const fit::CurveModel model = increasing_logistic4();
  fit::CurveFitResult best;
  best.rms = std::numeric_limits<double>::infinity();
  for (double factor : {1.0, 0.25, 4.0}) {
    Eigen::VectorXd init(4);
    init << std::log(*mmax - *mmin), std::log(slope0 * factor),
        fit::median({scores.begin(), scores.end()}), mos_mean;
    fit::CurveFitResult r = fit::least_squares(model, scores, mos, init);
    if (r.converged && (!best.converged || r.rms < best.rms)) best = r;
    if (!best.converged && r.rms < best.rms) best = r;
  }

  BranchMapping mapping;
  mapping.branch = branch;
  mapping.beta = {std::exp(best.params[0]), std::exp(best.params[1]), best.params[2],
                  best.params[3]};
  mapping.residual_rms = best.rms;
  mapping.source_fingerprint = data_fingerprint(scores, mos);
  if (!best.converged) {
    throw FitError("fit_branch_mapping: Levenberg-Marquardt did not converge (rms " +
                       std::to_string(best.rms) + ")",
                   mapping);
  }
  return mapping;
}

double fuse_scores(std::optional<double> mapped_deep, std::optional<double> mapped_trad) {
  if (!mapped_deep || !mapped_trad) {
    throw ContractError(std::string("fuse_scores: partial result, missing ") +
                        (!mapped_deep ? "deep" : "traditional") + " branch score");
  }
  return 0.5 * (*mapped_deep + *mapped_trad);
}

FusedScore fuse(double q_deep, double q_trad, const BranchMapping& deep,
                const BranchMapping& trad) {
  FusedScore s;
  s.q_deep = q_deep;
  s.q_trad = q_trad;
  s.q_tilde_deep = map_branch(q_deep, deep);
  s.q_tilde_trad = map_branch(q_trad, trad);
  s.fused = fuse_scores(s.q_tilde_deep, s.q_tilde_trad);
  return s;
}

namespace {

nlohmann::json mapping_to_json(const BranchMapping& m) {
  return {{"branch", to_string(m.branch)},
          {"beta", m.beta},
          {"fit_residual_rms", m.residual_rms},
          {"source_fingerprint", m.source_fingerprint}};
}

BranchMapping mapping_from_json(const nlohmann::json& j) {
  BranchMapping m;
  m.branch = parse_branch(j.at("branch").get<std::string>());
  m.beta = j.at("beta").get<std::array<double, 4>>();
  m.residual_rms = j.value("fit_residual_rms", 0.0);
  m.source_fingerprint = j.value("source_fingerprint", std::string());
  return m;
}

}  // namespace

nlohmann::json Calibration::to_json() const {
  nlohmann::json j;
  j["format"] = "fdim-calibration";
  j["format_version"] = 1;
  j["branches"] = nlohmann::json::array();
  if (deep) j["branches"].push_back(mapping_to_json(*deep));
  if (trad) j["branches"].push_back(mapping_to_json(*trad));
  return j;
}

Calibration Calibration::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != 1) {
      throw MalformedInputError("unsupported calibration format version");
    }
    Calibration c;
    for (const auto& b : j.at("branches")) {
      BranchMapping m = mapping_from_json(b);
      (m.branch == Branch::kDeep ? c.deep : c.trad) = m;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("bad calibration document: ") + e.what());
  }
}

void save_calibration(const std::filesystem::path& path, const Calibration& calibration) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << calibration.to_json().dump(2) << '\n';
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError("calibration '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return Calibration::from_json(j);
}

VmafScoreTable VmafScoreTable::load(const std::filesystem::path& csv_path) {
  const CsvTable csv = read_csv(csv_path);
  const std::size_t id_col = csv.require_column("dist_id");
  const auto score_col = csv.column("vmaf_score") ? csv.column("vmaf_score") : csv.column("vmaf");
  if (!score_col) throw MalformedInputError("VMAF score CSV needs a 'vmaf_score' column");
  VmafScoreTable table;
  for (const auto& row : csv.rows) {
    try {
      table.insert(row[id_col], std::stod(row[*score_col]));
    } catch (const std::invalid_argument&) {
      throw MalformedInputError("bad VMAF score '" + row[*score_col] + "'");
    }
  }
  return table;
}

std::optional<double> VmafScoreTable::find(const std::string& dist_id) const {
  if (auto it = scores_.find(dist_id); it != scores_.end()) return it->second;
  const std::filesystem::path p(dist_id);
  for (const std::string& key : {p.filename().string(), p.stem().string()}) {
    if (auto it = scores_.find(key); it != scores_.end()) return it->second;
  }
  return std::nullopt;
}

ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ContractError("run_process: empty argv");
  int out_pipe[2];
  int err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) throw IoError("pipe() failed");
  const pid_t pid = fork();
  if (pid < 0) throw IoError("fork() failed");
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    fcntl(err_pipe[1], F_SETFD, FD_CLOEXEC);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    const int code = errno;
    [[maybe_unused]] auto n = write(err_pipe[1], &code, sizeof(code));
    _exit(127);
  }
  close(out_pipe[1]);
  close(err_pipe[1]);
  ProcessResult result;
  char buf[4096];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) result.output.append(buf, static_cast<std::size_t>(n));
  close(out_pipe[0]);
  int exec_errno = 0;
  const bool exec_failed = read(err_pipe[0], &exec_errno, sizeof(exec_errno)) == sizeof(exec_errno);
  close(err_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (exec_failed) {
    throw DependencyError("cannot execute '" + argv[0] + "': " + std::strerror(exec_errno));
  }
  result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

VmafTool::VmafTool(std::string binary, std::string model, std::filesystem::path scratch_dir)
    : binary_(std::move(binary)), model_(std::move(model)), scratch_dir_(std::move(scratch_dir)) {
  if (binary_.empty()) {
    const char* env = std::getenv("FDIM_VMAF_BIN");
    binary_ = env && *env ? env : "vmaf";
  }
  if (scratch_dir_.empty()) {
    scratch_dir_ = std::filesystem::temp_directory_path() /
                   ("fdim-vmaf-" + std::to_string(static_cast<long>(getpid())));
  }
}

bool VmafTool::available() const {
  auto executable = [](const std::filesystem::path& p) {
    return std::filesystem::is_regular_file(p) && access(p.c_str(), X_OK) == 0;
  };
  if (binary_.find('/') != std::string::npos) return executable(binary_);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (!dir.empty() && executable(std::filesystem::path(dir) / binary_)) return true;
  }
  return false;
}

std::string VmafTool::version() const {
  const ProcessResult r = run_process({binary_, "--version"});
  return trim(r.output);
}

TraditionalScore VmafTool::score(const std::filesystem::path& ref_path,
                                 const video::Geometry& ref_geometry,
                                 const std::filesystem::path& dist_path,
                                 const video::Geometry& dist_geometry) const {
  if (!available()) {
    throw DependencyError("VMAF tool '" + binary_ +
                          "' not found; install libvmaf's 'vmaf' binary, set FDIM_VMAF_BIN, or "
                          "pass precomputed scores with --vmaf-scores");
  }
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(scratch_dir_);
  const std::uint64_t id = ++invocations_;
  std::filesystem::path dist_input = dist_path;
  if (!dist_geometry.same_size(ref_geometry)) {
    const video::VideoClip ref = video::read_raw_video(ref_path, ref_geometry);
    const video::VideoClip dist = video::read_raw_video(dist_path, dist_geometry);
    dist_input = scratch_dir_ / ("resampled-" + std::to_string(id) + ".yuv");
    video::write_raw_video(dist_input, video::resample_to_reference(dist, ref));
  }
  const std::filesystem::path out_json = scratch_dir_ / ("vmaf-" + std::to_string(id) + ".json");
  const ProcessResult r = run_process({binary_, "--reference", ref_path.string(), "--distorted",
                                       dist_input.string(), "--width",
                                       std::to_string(ref_geometry.width), "--height",
                                       std::to_string(ref_geometry.height), "--pixel_format", "420",
                                       "--bitdepth", std::to_string(ref_geometry.bit_depth),
                                       "--model", model_, "--json", "--output", out_json.string()});
  if (dist_input != dist_path) std::filesystem::remove(dist_input);
  if (r.exit_status != 0) {
    throw DependencyError("VMAF tool exited with status " + std::to_string(r.exit_status) + ": " +
                          trim(r.output));
  }
  std::ifstream in(out_json);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DependencyError(std::string("unreadable VMAF output: ") + e.what());
  }
  std::filesystem::remove(out_json);
  TraditionalScore s;
  try {
    s.score = j.at("pooled_metrics").at("vmaf").at("mean").get<double>();
  } catch (const nlohmann::json::exception&) {
    throw DependencyError("VMAF output lacks pooled_metrics.vmaf.mean");
  }
  s.source = "tool";
  s.tool_version = j.value("version", std::string());
  if (s.tool_version.empty()) s.tool_version = version();
  s.model = model_;
  return s;
}

TraditionalScore score_traditional(const std::filesystem::path& ref_path,
                                   const video::Geometry& ref_geometry,
                                   const std::filesystem::path& dist_path,
                                   const video::Geometry& dist_geometry,
                                   const VmafScoreTable* table, const VmafTool* tool) {
  if (table) {
    if (auto score = table->find(dist_path.string())) {
      return TraditionalScore{*score, "precomputed", {}, {}};
    }
  }
  if (!tool) {
    throw DependencyError("no precomputed VMAF score for '" + dist_path.string() +
                          "' and no VMAF tool configured");
  }
  return tool->score(ref_path, ref_geometry, dist_path, dist_geometry);
}

}  // namespace fdimq::calib
