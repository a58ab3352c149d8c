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

#include "fdim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fdim/curve_fit.hpp"
#include "fdim/errors.hpp"
#include "fdim/util.hpp"

namespace fdimq::eval {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) throw ContractError(std::string(what) + ": length mismatch");
  if (x.size() < 3) throw ContractError(std::string(what) + ": need at least 3 samples");
}

fit::CurveModel logistic5_model() {
  fit::CurveModel m;
  m.num_params = 5;
  m.value = [](const Eigen::VectorXd& p, double q) {
    return fit::logistic5(q, {p[0], p[1], p[2], p[3], p[4]});
  };
  m.gradient = [](const Eigen::VectorXd& p, double q, Eigen::Ref<Eigen::VectorXd> g) {
    const double s = fit::stable_inverse_logistic(p[1] * (q - p[2]));
    const double ds = s * (1.0 - s);
    g[0] = 0.5 - s;
    g[1] = p[0] * ds * (q - p[2]);
    g[2] = -p[0] * ds * p[1];
    g[3] = q;
    g[4] = 1.0;
  };
  return m;
}

double sum_squares(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::optional<double> safe_plcc(std::span<const double> x, std::span<const double> y,
                                std::vector<std::string>& notes, const std::string& label) {
  try {
    return compute_plcc(x, y);
  } catch (const Error& e) {
    notes.push_back(label + ": " + e.what());
    return std::nullopt;
  }
}

std::optional<double> safe_srocc(std::span<const double> x, std::span<const double> y,
                                 std::vector<std::string>& notes, const std::string& label) {
  try {
    return compute_srocc(x, y);
  } catch (const Error& e) {
    notes.push_back(label + ": " + e.what());
    return std::nullopt;
  }
}

}  // namespace

double compute_plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, "compute_plcc");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DegenerateError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of 1-based i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double compute_srocc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, "compute_srocc");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return compute_plcc(rx, ry);
}

double apply_eval_logistic(double q, const std::array<double, 5>& params) {
  return fit::logistic5(q, params);
}

LogisticFit fit_eval_logistic(std::span<const double> pred, std::span<const double> mos) {
  if (pred.size() != mos.size()) throw ContractError("fit_eval_logistic: length mismatch");
  if (pred.size() < 6) throw ContractError("fit_eval_logistic: need at least 6 points");

  LogisticFit out;
  out.mapped.assign(pred.begin(), pred.end());
  const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
  const auto [mmin, mmax] = std::minmax_element(mos.begin(), mos.end());
  if (*pmax - *pmin <= 0.0) {
    out.degenerate = true;
    out.warning = "constant predictions: mapping undefined, identity used";
    return out;
  }
  if (*mmax - *mmin <= 0.0) {
    out.degenerate = true;
    out.warning = "constant subjective scores: mapping undefined, identity used";
    return out;
  }

  // Best affine fit is a member of the family (b1 = 0) and bounds the error.
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mm = std::accumulate(mos.begin(), mos.end(), 0.0) / n;
  double spm = 0.0, spp = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spm += (pred[i] - mp) * (mos[i] - mm);
    spp += (pred[i] - mp) * (pred[i] - mp);
  }
  const double slope = spm / spp;
  const std::array<double, 5> affine{0.0, 1.0, mp, slope, mm - slope * mp};
  std::vector<double> affine_mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) affine_mapped[i] = fit::logistic5(pred[i], affine);
  const double affine_sse = sum_squares(affine_mapped, mos);

  const fit::CurveModel model = logistic5_model();
  const double sign = spm >= 0.0 ? 1.0 : -1.0;
  std::optional<fit::CurveFitResult> best;
  for (double factor : {1.0, 0.25, 4.0}) {
    Eigen::VectorXd init(5);
    init << sign * (*mmax - *mmin), factor * 4.0 / (*pmax - *pmin),
        fit::median({pred.begin(), pred.end()}), 0.0, mm;
    fit::CurveFitResult r = fit::least_squares(model, pred, mos, init);
    if (r.converged && (!best || r.rms < best->rms)) best = r;
  }
  if (!best) {
    out.warning = "five-parameter logistic fit did not converge; identity mapping used";
    return out;
  }
  out.converged = true;
  const double fit_sse = best->rms * best->rms * n;
  if (fit_sse <= affine_sse) {
    out.params = {best->params[0], best->params[1], best->params[2], best->params[3],
                  best->params[4]};
  } else {
    out.params = affine;
  }
  for (std::size_t i = 0; i < pred.size(); ++i) out.mapped[i] = fit::logistic5(pred[i], out.params);
  return out;
}

std::string to_string(Protocol p) {
  return p == Protocol::kPerSequence ? "per-sequence" : "all-sequence";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "per-sequence") return Protocol::kPerSequence;
  if (name == "all-sequence") return Protocol::kAllSequence;
  throw ConfigError("unknown protocol '" + name + "'");
}

namespace {

SubsetReport evaluate_subset(const std::string& name, const std::vector<const EvalRecord*>& subset,
                             const EvalOptions& options, bool require_groups) {
  SubsetReport report;
  report.name = name;
  report.count = subset.size();
  std::vector<double> pred, mos;
  for (const EvalRecord* r : subset) {
    if (!std::isfinite(r->predicted) || !std::isfinite(r->mos)) {
      throw NumericError("non-finite score for '" + r->dist_id + "'");
    }
    pred.push_back(r->predicted);
    mos.push_back(r->mos);
  }

  LogisticFit mapping;
  mapping.mapped = pred;
  std::vector<std::string> mapping_notes;
  try {
    mapping = fit_eval_logistic(pred, mos);
  } catch (const ContractError& e) {
    mapping.warning = std::string(e.what()) + "; identity mapping used";
  }
  if (!mapping.warning.empty()) mapping_notes.push_back(mapping.warning);

  const bool want_all = std::find(options.protocols.begin(), options.protocols.end(),
                                  Protocol::kAllSequence) != options.protocols.end();
  const bool want_per = std::find(options.protocols.begin(), options.protocols.end(),
                                  Protocol::kPerSequence) != options.protocols.end();

  if (want_all) {
    AllSequenceResult all;
    all.mapping = mapping;
    CorrelationResult& c = all.correlation;
    c.count = subset.size();
    c.notes = mapping_notes;
    if (mapping.degenerate) {
      c.plcc = 0.0;
      c.notes.push_back("PLCC undefined, reported as 0");
    } else {
      c.plcc = safe_plcc(mapping.mapped, mos, c.notes, "plcc");
    }
    if (auto raw = safe_plcc(pred, mos, c.notes, "raw plcc")) c.raw_plcc = *raw;
    c.srocc = safe_srocc(pred, mos, c.notes, "srocc");
    report.all_sequence = all;
  }

  if (want_per) {
    PerSequenceResult per;
    per.mapping = mapping;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < subset.size(); ++i) groups[subset[i]->ref_id].push_back(i);
    double plcc_sum = 0.0, srocc_sum = 0.0;
    std::size_t plcc_n = 0, srocc_n = 0;
    for (const auto& [ref, idx] : groups) {
      if (idx.size() < options.min_group_size) {
        per.skipped_groups.push_back(ref + " (n=" + std::to_string(idx.size()) + ")");
        continue;
      }
      std::vector<double> gp, gm, gmapped;
      for (std::size_t i : idx) {
        gp.push_back(pred[i]);
        gm.push_back(mos[i]);
        gmapped.push_back(mapping.mapped[i]);
      }
      CorrelationResult c;
      c.count = idx.size();
      c.srocc = safe_srocc(gp, gm, c.notes, "srocc");
      c.plcc = safe_plcc(gmapped, gm, c.notes, "plcc");
      if (auto raw = safe_plcc(gp, gm, c.notes, "raw plcc")) c.raw_plcc = *raw;
      if (!c.srocc && !c.plcc) {
        per.skipped_groups.push_back(ref + " (degenerate)");
        continue;
      }
      if (c.srocc) {
        srocc_sum += *c.srocc;
        ++srocc_n;
      }
      if (c.plcc) {
        plcc_sum += *c.plcc;
        ++plcc_n;
      }
      per.groups[ref] = c;
    }
    per.groups_used = per.groups.size();
    if (plcc_n) per.plcc = plcc_sum / static_cast<double>(plcc_n);
    if (srocc_n) per.srocc = srocc_sum / static_cast<double>(srocc_n);
    if (per.groups_used == 0 && require_groups) {
      throw DegenerateError("per-sequence protocol: no reference group with at least " +
                            std::to_string(options.min_group_size) + " valid samples");
    }
    report.per_sequence = per;
  }
  return report;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json correlation_json(const CorrelationResult& c) {
  return {{"plcc", optional_json(c.plcc)},
          {"srocc", optional_json(c.srocc)},
          {"raw_plcc", c.raw_plcc},
          {"count", c.count},
          {"notes", c.notes}};
}

}  // namespace

EvalReport evaluate_protocol(const std::vector<EvalRecord>& records, const EvalOptions& options,
                             const std::string& method) {
  if (records.empty()) throw ContractError("evaluate_protocol: no records");
  EvalReport report;
  report.method = method;
  report.protocols = options.protocols;
  report.records = records;

  std::vector<const EvalRecord*> all;
  for (const auto& r : records) all.push_back(&r);
  report.subsets.push_back(evaluate_subset("all", all, options, true));
  const SubsetReport& full = report.subsets.front();
  if (full.all_sequence) {
    report.mapped = full.all_sequence->mapping.mapped;
  } else if (full.per_sequence) {
    report.mapped = full.per_sequence->mapping.mapped;
  } else {
    report.mapped.clear();
    for (const auto& r : records) report.mapped.push_back(r.predicted);
  }

  for (const std::string& key : options.split_keys) {
    std::map<std::string, std::vector<const EvalRecord*>> parts;
    for (const auto& r : records) {
      auto it = r.tags.find(key);
      parts[it == r.tags.end() ? std::string("<missing>") : it->second].push_back(&r);
    }
    for (const auto& [value, subset] : parts) {
      report.subsets.push_back(evaluate_subset(key + "=" + value, subset, options, false));
    }
  }
  return report;
}

const SubsetReport* EvalReport::subset(const std::string& name) const {
  for (const auto& s : subsets) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["protocols"] = nlohmann::json::array();
  for (Protocol p : protocols) j["protocols"].push_back(to_string(p));
  j["subsets"] = nlohmann::json::object();
  for (const auto& s : subsets) {
    nlohmann::json js;
    js["count"] = s.count;
    if (s.all_sequence) {
      nlohmann::json a = correlation_json(s.all_sequence->correlation);
      const LogisticFit& m = s.all_sequence->mapping;
      a["mapping"] = {{"form", "b1*(0.5-1/(1+exp(b2*(q-b3))))+b4*q+b5"},
                      {"params", m.params},
                      {"converged", m.converged},
                      {"degenerate", m.degenerate},
                      {"warning", m.warning}};
      js["all_sequence"] = a;
    } else {
      js["all_sequence"] = nullptr;
    }
    if (s.per_sequence) {
      const PerSequenceResult& p = *s.per_sequence;
      nlohmann::json groups = nlohmann::json::object();
      for (const auto& [ref, c] : p.groups) groups[ref] = correlation_json(c);
      js["per_sequence"] = {{"plcc", optional_json(p.plcc)},
                            {"srocc", optional_json(p.srocc)},
                            {"groups_used", p.groups_used},
                            {"skipped_groups", p.skipped_groups},
                            {"groups", groups}};
    } else {
      js["per_sequence"] = nullptr;
    }
    j["subsets"][s.name] = js;
  }
  return j;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  std::set<std::string> tag_keys;
  for (const auto& rep : reports) {
    for (const auto& r : rep.records) {
      for (const auto& [k, v] : r.tags) tag_keys.insert(k);
    }
  }
  CsvTable table;
  table.header = {"method", "dist_id", "ref_id", "predicted", "mapped", "mos"};
  table.header.insert(table.header.end(), tag_keys.begin(), tag_keys.end());
  auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& rep : reports) {
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
      const EvalRecord& r = rep.records[i];
      std::vector<std::string> row{rep.method, r.dist_id, r.ref_id, fmt(r.predicted),
                                   fmt(i < rep.mapped.size() ? rep.mapped[i] : r.predicted),
                                   fmt(r.mos)};
      for (const auto& k : tag_keys) {
        auto it = r.tags.find(k);
        row.push_back(it == r.tags.end() ? "" : it->second);
      }
      table.rows.push_back(std::move(row));
    }
  }
  write_csv(path, table);
}

}  // namespace fdimq::eval
