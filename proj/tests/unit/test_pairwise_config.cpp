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
#include <set>

#include "fdim/config.hpp"
#include "fdim/errors.hpp"
#include "fdim/pairwise.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fdimq;
using namespace fdimq::train;

namespace {

SubjectiveRecord rec(const std::string& ref, const std::string& dist, double mos,
                     const std::string& group = "traditional") {
  SubjectiveRecord r;
  r.ref_id = ref;
  r.dist_id = dist;
  r.mos = mos;
  r.mos_std = 0.4;
  r.codec_group = group;
  return r;
}

std::vector<SubjectiveRecord> grid(int refs, int per_ref) {
  std::vector<SubjectiveRecord> out;
  for (int r = 0; r < refs; ++r) {
    for (int d = 0; d < per_ref; ++d) {
      out.push_back(rec("ref" + std::to_string(r), "ref" + std::to_string(r) + "_" + std::to_string(d),
                        1.0 + 0.4 * d, d % 2 ? "neural" : "traditional"));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("ground-truth preference") {
  CHECK(gt_preference(3.0, 0.5, 3.0, 0.9) == 0.5);
  CHECK(gt_preference(2.0, 0.6, 1.0, 0.8) == doctest::Approx(0.841344746).epsilon(1e-9));
  CHECK(gt_preference(4.0, 0.0, 1.0, 0.0) == 1.0);
  CHECK(gt_preference(1.0, 0.0, 4.0, 0.0) == 0.0);
  CHECK(gt_preference(2.0, 0.0, 2.0, 0.0) == 0.5);
  CHECK_THROWS_AS(gt_preference(1.0, -0.1, 1.0, 0.2), ContractError);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> mu(1.0, 5.0), sd(0.05, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const double a = mu(rng), b = mu(rng), sa = sd(rng), sb = sd(rng);
    const double g = gt_preference(a, sa, b, sb);
    CHECK(g + gt_preference(b, sb, a, sa) == doctest::Approx(1.0).epsilon(1e-14));
    if (g > 1e-9 && g < 1.0 - 1e-9) {  // away from double saturation of Phi
      CHECK(gt_preference(a + 0.1, sa, b, sb) > g);
      CHECK(gt_preference(a, sa, b + 0.1, sb) < g);
    }
    CHECK(std::abs(g - oracle::preference(a, sa, b, sb)) < 1e-12);
  }
}

TEST_CASE("predicted preference and fidelity loss") {
  CHECK(predicted_preference(0.3, 0.2, 0.3, 0.7) == 0.5);
  const double s = std::sqrt(0.3 * 0.3 + 0.4 * 0.4);
  CHECK(predicted_preference(1.0 + s, 0.3, 1.0, 0.4) == doctest::Approx(0.841344746).epsilon(1e-9));
  CHECK_THROWS_AS(predicted_preference(1.0, 0.0, 1.0, 0.5), ContractError);

  CHECK(fidelity_loss(1.0, 1.0) == 0.0);
  CHECK(fidelity_loss(0.0, 0.0) == 0.0);
  CHECK(fidelity_loss(0.0, 1.0) == 1.0);
  for (double g : {0.0, 0.2, 0.5, 0.93, 1.0}) CHECK(fidelity_loss(g, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(fidelity_loss(1.1, 0.5), ContractError);
  CHECK_THROWS_AS(fidelity_loss(0.5, -0.01), ContractError);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0), q(-3.0, 3.0), sd(0.01, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double qi = q(rng), qj = q(rng), si = sd(rng), sj = sd(rng), g = u(rng);
    const double p = predicted_preference(qi, si, qj, sj);
    const double l = fidelity_loss(g, p);
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
    // Swapping the pair leaves the loss unchanged.
    const double swapped = fidelity_loss(1.0 - g, predicted_preference(qj, sj, qi, si));
    CHECK(swapped == doctest::Approx(l).epsilon(1e-12));
  }
}

TEST_CASE("pair candidates") {
  const auto one = grid(1, 3);
  CHECK(count_homogeneous_candidates(one) == 3u);
  TrainConfig c;
  std::mt19937_64 rng(0);
  PairPlan p = build_pairs(one, c, rng);
  CHECK(p.homogeneous == 3u);
  CHECK(p.heterogeneous == 0u);

  const auto two = grid(2, 1);
  CHECK(count_homogeneous_candidates(two) == 0u);
  p = build_pairs(two, c, rng);
  CHECK(p.homogeneous == 0u);
  CHECK(p.heterogeneous == 1u);
  REQUIRE(p.pairs.size() == 1u);
  CHECK(p.pairs[0].left.ref_id != p.pairs[0].right.ref_id);

  CHECK_THROWS_AS(build_pairs(grid(1, 1), c, rng), ConfigError);
}

TEST_CASE("pair construction properties") {
  const auto records = grid(10, 10);
  TrainConfig c;
  std::mt19937_64 a(42), b(42);
  const PairPlan p1 = build_pairs(records, c, a);
  const PairPlan p2 = build_pairs(records, c, b);
  REQUIRE(p1.pairs.size() == p2.pairs.size());
  for (std::size_t i = 0; i < p1.pairs.size(); ++i) {
    CHECK(p1.pairs[i].left.dist_id == p2.pairs[i].left.dist_id);
    CHECK(p1.pairs[i].right.dist_id == p2.pairs[i].right.dist_id);
    CHECK(p1.pairs[i].target == p2.pairs[i].target);
  }
  // 100 videos, about 20 appearances each.
  CHECK(p1.pairs.size() == 1000u);
  CHECK(p1.homogeneous == 450u);
  CHECK(p1.heterogeneous == 550u);
  std::map<std::string, int> appearances;
  std::set<std::pair<std::string, std::string>> unique;
  for (const auto& pr : p1.pairs) {
    ++appearances[pr.left.dist_id];
    ++appearances[pr.right.dist_id];
    CHECK(unique.insert(std::minmax(pr.left.dist_id, pr.right.dist_id)).second);
    if (pr.kind == PairKind::kHomogeneous) {
      CHECK(pr.left.ref_id == pr.right.ref_id);
      CHECK(pr.left.dist_id != pr.right.dist_id);
    } else {
      CHECK(pr.left.ref_id != pr.right.ref_id);
    }
    CHECK(pr.target == gt_preference(pr.left.mos, pr.left.mos_std, pr.right.mos, pr.right.mos_std));
  }
  double mean = 0.0;
  for (const auto& [id, n] : appearances) mean += n;
  CHECK(mean / appearances.size() == doctest::Approx(20.0).epsilon(0.01));
}

TEST_CASE("data fraction, MOS cap and codec mix") {
  auto records = grid(20, 6);
  records.push_back(rec("ref0", "bright", 5.6));
  TrainConfig c;
  c.data_fraction = 0.1;
  std::mt19937_64 rng(3);
  const PairPlan p = build_pairs(records, c, rng);
  CHECK(p.selected_refs.size() == 2u);
  const std::set<std::string> sel(p.selected_refs.begin(), p.selected_refs.end());
  for (const auto& pr : p.pairs) {
    CHECK(sel.count(pr.left.ref_id) == 1u);
    CHECK(sel.count(pr.right.ref_id) == 1u);
  }

  c.data_fraction = 1.0;
  const PairPlan full = build_pairs(records, c, rng);
  for (const auto& pr : full.pairs) {
    CHECK(pr.left.dist_id != "bright");
    CHECK(pr.right.dist_id != "bright");
  }
  CHECK(full.eligible_records == 120u);

  c.codec_mix = CodecMix::kTraditionalOnly;
  const PairPlan trad = build_pairs(records, c, rng);
  for (const auto& pr : trad.pairs) {
    CHECK(pr.left.codec_group == "traditional");
    CHECK(pr.right.codec_group == "traditional");
  }
  c.data_fraction = 0.0;
  CHECK_THROWS_AS(build_pairs(records, c, rng), ConfigError);
}

TEST_CASE("default training configuration") {
  const TrainConfig c;
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.weight_decay == 5e-4);
  CHECK(c.batch_pairs == 8);
  CHECK(c.epochs == 1);
  CHECK(c.crop == 512);
  CHECK(c.flip_p == 0.5);
  CHECK(c.frame_sampling == "one-per-second");
  CHECK(c.pairs_per_video == 20);
  CHECK(c.data_fraction == 1.0);
  CHECK(c.ablation == AblationConfig{});
  CHECK(c.ablation.offset_source == OffsetSource::kReference);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("configuration text round trip and overrides") {
  TrainConfig c;
  set_config_value(c, "learning_rate", "3e-5");
  set_config_value(c, "use_deformable", "false");
  set_config_value(c, "offset_source", "distorted");
  set_config_value(c, "crop", "256");
  const std::string text = serialize_train_config(c);
  const TrainConfig back = parse_train_config(text);
  CHECK(back == c);
  CHECK(config_fingerprint(back) == config_fingerprint(c));
  CHECK(config_fingerprint(c) != config_fingerprint(TrainConfig{}));
  CHECK(parse_train_config("# comment\n\nbatch_pairs = 4\n").batch_pairs == 4);

  CHECK_THROWS_AS(set_config_value(c, "learning_rte", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "crop", "big"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_pairs 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("flip_p = 2\n"), ConfigError);

  TrainConfig a;
  apply_ablation_overrides(a, {{"use_msf_attention", "false"}, {"data_fraction", "0.3"}});
  CHECK(!a.ablation.use_msf_attention);
  CHECK(a.data_fraction == 0.3);
  CHECK_THROWS_AS(apply_ablation_overrides(a, {{"learning_rate", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_ablation_overrides(a, {{"offset_source", "sideways"}}), ConfigError);

  AblationConfig bad;
  bad.use_discrepancy_map = false;
  bad.offset_source = OffsetSource::kDiscrepancy;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  testing::TempDir dir("cfg");
  testing::write_file(dir / "c.cfg", text);
  CHECK(load_train_config(dir / "c.cfg") == c);
  CHECK(parse_bool("yes"));
  CHECK(!parse_bool("0"));
}
