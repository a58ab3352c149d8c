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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fdim/errors.hpp"
#include "fdim/evaluation.hpp"
#include "fdim/util.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fdimq;
using namespace fdimq::eval;

namespace {

EvalRecord record(const std::string& ref, int i, double pred, double mos,
                  const std::string& group = "traditional") {
  EvalRecord r;
  r.ref_id = ref;
  r.dist_id = ref + "_d" + std::to_string(i);
  r.predicted = pred;
  r.mos = mos;
  r.tags["codec_group"] = group;
  return r;
}

}  // namespace

TEST_CASE("PLCC basics") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  CHECK(compute_plcc(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(compute_plcc(x, z) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(compute_plcc(x, std::vector<double>(5, 2.0)), DegenerateError);
  CHECK_THROWS_AS(compute_plcc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ContractError);
  CHECK_THROWS_AS(compute_plcc(x, std::vector<double>{1, 2, 3}), ContractError);
}

TEST_CASE("PLCC and SROCC against brute-force oracles") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 40;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = n01(rng);
      y[i] = 0.6 * x[i] + n01(rng);
      if (trial % 2 == 0) {  // heavy ties
        x[i] = std::round(x[i] * 2.0);
        y[i] = std::round(y[i]);
      }
    }
    auto varies = [](const std::vector<double>& v) {
      return std::any_of(v.begin(), v.end(), [&](double e) { return e != v[0]; });
    };
    if (!varies(x) || !varies(y)) {
      CHECK_THROWS_AS(compute_srocc(x, y), DegenerateError);
      continue;
    }
    CHECK(std::abs(compute_plcc(x, y) - oracle::pearson(x, y)) < 1e-12);
    CHECK(std::abs(compute_srocc(x, y) - oracle::spearman(x, y)) < 1e-12);
    CHECK(average_ranks(x) == oracle::brute_ranks(x));
  }
}

TEST_CASE("SROCC ordering and invariance") {
  std::vector<double> x{0.1, 0.5, 0.7, 2.0, 3.5, 9.0};
  std::vector<double> up{1, 2, 3, 4, 5, 6}, down{6, 5, 4, 3, 2, 1};
  CHECK(compute_srocc(x, up) == doctest::Approx(1.0));
  CHECK(compute_srocc(x, down) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(compute_srocc(x, std::vector<double>(6, 1.0)), DegenerateError);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(25), b(25), ea(25), lb(25);
    for (int i = 0; i < 25; ++i) {
      a[i] = u(rng);
      b[i] = a[i] + u(rng);
      ea[i] = std::exp(a[i]);
      lb[i] = std::log(b[i]);
    }
    CHECK(compute_srocc(ea, lb) == doctest::Approx(compute_srocc(a, b)).epsilon(1e-14));
    const std::vector<double> ranks = average_ranks(a);
    CHECK(compute_srocc(ranks, b) == doctest::Approx(compute_srocc(a, b)).epsilon(1e-14));
  }
}

TEST_CASE("five-parameter logistic mapping") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const double truth[5] = {3.0, 1.2, 5.0, 0.15, 1.0};
  std::vector<double> q(40), mos(40);
  for (int i = 0; i < 40; ++i) {
    q[i] = u(rng);
    mos[i] = oracle::logistic5(q[i], truth);
  }
  const LogisticFit f = fit_eval_logistic(q, mos);
  CHECK(f.converged);
  CHECK(!f.degenerate);
  CHECK(compute_plcc(f.mapped, mos) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(compute_plcc(f.mapped, mos) >= compute_plcc(q, mos) - 1e-9);
  for (int i = 0; i < 40; ++i) CHECK(f.mapped[i] == apply_eval_logistic(q[i], f.params));

  const LogisticFit same = fit_eval_logistic(q, q);
  CHECK(compute_plcc(same.mapped, q) == doctest::Approx(1.0).epsilon(1e-9));

  const LogisticFit flat = fit_eval_logistic(std::vector<double>(8, 2.0), std::vector<double>(mos.begin(), mos.begin() + 8));
  CHECK(flat.degenerate);
  CHECK(!flat.warning.empty());
  CHECK_THROWS_AS(fit_eval_logistic(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0)),
                  ContractError);

  // In-sample mapping never lowers linear correlation.
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> p(30), m(30);
    for (int i = 0; i < 30; ++i) {
      p[i] = n01(rng);
      m[i] = std::tanh(1.5 * p[i]) + 0.3 * n01(rng) + (trial % 3 == 0 ? -p[i] : 0.0);
    }
    const LogisticFit g = fit_eval_logistic(p, m);
    CHECK(compute_plcc(g.mapped, m) >= compute_plcc(p, m) - 1e-9);
  }
}

TEST_CASE("protocols agree on a single reference group") {
  std::vector<EvalRecord> rs;
  const double preds[] = {0.1, 0.4, 0.35, 0.9, 0.7, 0.2, 0.55};
  const double mos[] = {1.0, 2.5, 2.0, 4.8, 4.1, 1.9, 3.0};
  for (int i = 0; i < 7; ++i) rs.push_back(record("A", i, preds[i], mos[i]));
  const EvalReport r = evaluate_protocol(rs, EvalOptions{});
  const SubsetReport* all = r.subset("all");
  REQUIRE(all);
  REQUIRE(all->per_sequence);
  REQUIRE(all->all_sequence);
  CHECK(*all->per_sequence->srocc == doctest::Approx(*all->all_sequence->correlation.srocc));
  CHECK(*all->per_sequence->plcc == doctest::Approx(*all->all_sequence->correlation.plcc));
  CHECK(all->per_sequence->groups_used == 1u);

  // Per-sequence alone still reports raw PLCC and the pooled mapping.
  EvalOptions per_only;
  per_only.protocols = {Protocol::kPerSequence};
  const EvalReport p = evaluate_protocol(rs, per_only);
  std::vector<double> pv(preds, preds + 7), mv(mos, mos + 7);
  const auto& group = p.subset("all")->per_sequence->groups.at("A");
  CHECK(group.raw_plcc == doctest::Approx(oracle::pearson(pv, mv)).epsilon(1e-12));
  REQUIRE(p.mapped.size() == 7u);
  CHECK(p.mapped == r.mapped);
  CHECK(p.mapped != pv);
}

TEST_CASE("per-sequence differs from pooled for offset groups") {
  // Within each group prediction order matches MOS; the groups sit on
  // opposite offsets so pooled ranks interleave.
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 5; ++i) {
    rs.push_back(record("A", i, 10.0 + i, 1.0 + 0.5 * i));
    rs.push_back(record("B", i, 0.0 + i, 3.0 + 0.5 * i));
  }
  const EvalReport r = evaluate_protocol(rs, EvalOptions{});
  const SubsetReport* all = r.subset("all");
  CHECK(*all->per_sequence->srocc == doctest::Approx(1.0));
  std::vector<double> p, m;
  for (const auto& x : rs) {
    p.push_back(x.predicted);
    m.push_back(x.mos);
  }
  const double pooled = oracle::spearman(p, m);
  CHECK(pooled < 1.0);
  CHECK(*all->all_sequence->correlation.srocc == doctest::Approx(pooled).epsilon(1e-12));
}

TEST_CASE("splits, skipped groups and report output") {
  std::vector<EvalRecord> rs;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  for (int g = 0; g < 4; ++g) {
    for (int i = 0; i < 6; ++i) {
      const double m = 1.0 + 0.7 * i;
      rs.push_back(record("R" + std::to_string(g), i, m + 0.3 * n01(rng), m,
                          i % 2 ? "neural" : "traditional"));
    }
  }
  rs.push_back(record("tiny", 0, 1.0, 1.0));
  rs.push_back(record("tiny", 1, 2.0, 2.0));

  EvalOptions opt;
  opt.split_keys = {"codec_group"};
  const EvalReport r = evaluate_protocol(rs, opt);
  const SubsetReport* neural = r.subset("codec_group=neural");
  const SubsetReport* trad = r.subset("codec_group=traditional");
  REQUIRE(neural);
  REQUIRE(trad);
  CHECK(neural->count + trad->count == r.subset("all")->count);
  CHECK(r.subset("all")->per_sequence->groups_used == 4u);
  REQUIRE(r.subset("all")->per_sequence->skipped_groups.size() == 1u);
  CHECK(r.subset("all")->per_sequence->skipped_groups[0].rfind("tiny", 0) == 0);
  CHECK(r.mapped.size() == rs.size());

  const nlohmann::json j = r.to_json();
  CHECK(j["subsets"].contains("all"));
  CHECK(j["subsets"].contains("codec_group=neural"));

  testing::TempDir dir("eval");
  write_report_csv(dir / "r.csv", {r});
  const CsvTable t = read_csv(dir / "r.csv");
  CHECK(t.rows.size() == rs.size());
  CHECK(t.column("codec_group").has_value());

  opt.protocols = {Protocol::kPerSequence};
  std::vector<EvalRecord> small{record("a", 0, 1, 1), record("b", 0, 2, 2), record("c", 0, 3, 3)};
  CHECK_THROWS_AS(evaluate_protocol(small, opt), DegenerateError);
  CHECK_THROWS_AS(evaluate_protocol({}, opt), ContractError);
  CHECK(parse_protocol("all-sequence") == Protocol::kAllSequence);
}
