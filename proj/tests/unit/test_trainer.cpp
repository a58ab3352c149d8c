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
#include <numeric>

#include <json.hpp>

#include "fdim/errors.hpp"
#include "fdim/synth.hpp"
#include "fdim/trainer.hpp"
#include "fdim/weights_io.hpp"
#include "support.hpp"

using namespace fdimq;
using namespace fdimq::net;

namespace {

struct Corpus {
  testing::TempDir dir{"train"};
  std::vector<ManifestRow> rows;
  Corpus() {
    synth::CorpusOptions o;
    o.n_refs = 3;
    o.levels = 3;
    o.width = 64;
    o.height = 64;
    o.frames = 4;
    o.fps = 2.0;
    rows = synth::generate_corpus(o, dir.path());
  }
};

Corpus& corpus() {
  static Corpus c;
  return c;
}

ModelConfig toy_model(const TrainConfig& t) {
  ModelConfig m = model_config_from(t);
  m.backbone.widths = {8, 8, 16, 16};
  m.head_hidden1 = 32;
  m.head_hidden2 = 16;
  return m;
}

TrainConfig toy_config() {
  TrainConfig t;
  t.crop = 64;
  t.batch_pairs = 2;
  t.max_pairs = 100;
  t.learning_rate = 1e-3;
  t.seed = 11;
  return t;
}

std::vector<torch::Tensor> snapshot(FdimNet& m, const std::string& prefix = "") {
  std::vector<torch::Tensor> out;
  for (const auto& p : m->named_parameters()) {
    if (p.key().rfind(prefix, 0) == 0) out.push_back(p.value().detach().clone());
  }
  return out;
}

bool all_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

TrainReport run(const TrainConfig& cfg, FdimNet& model, const std::filesystem::path& out) {
  TrainOptions opt;
  opt.out_dir = out;
  return net::train(model, corpus().rows, cfg, opt);
}

}  // namespace

TEST_CASE("toy training lowers the loss") {
  const TrainConfig cfg = toy_config();
  FdimNet model = make_model(toy_model(cfg), cfg.seed);
  testing::TempDir out;
  const TrainReport r = run(cfg, model, out.path());
  REQUIRE(r.steps.size() == 50u);
  CHECK(r.pairs == 100u);
  CHECK(r.homogeneous + r.heterogeneous == r.pairs);
  auto mean = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 10; ++i) s += r.steps[i].loss;
    return s / 10.0;
  };
  CHECK(mean(40) < mean(0));
  for (const auto& s : r.steps) {
    CHECK(s.loss >= 0.0);
    CHECK(s.loss <= 1.0);
  }

  CHECK(std::filesystem::exists(r.checkpoint));
  CHECK(std::filesystem::exists(r.loss_csv));
  const Checkpoint info = read_checkpoint_info(r.checkpoint);
  CHECK(info.metadata.at("config_fingerprint") == config_fingerprint(cfg));
  CHECK(info.metadata.at("steps") == 50);
  const std::string csv = testing::slurp(r.loss_csv);
  CHECK(csv.rfind("step,pairs_seen,loss,grad_norm,mean_sigma,mean_abs_z\n", 0) == 0u);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
}

TEST_CASE("identical seeds give identical runs") {
  TrainConfig cfg = toy_config();
  cfg.max_pairs = 12;
  FdimNet a = make_model(toy_model(cfg), 1), b = make_model(toy_model(cfg), 1);
  testing::TempDir o1, o2;
  const TrainReport ra = run(cfg, a, o1.path());
  const TrainReport rb = run(cfg, b, o2.path());
  CHECK(ra.pair_losses == rb.pair_losses);
  CHECK(all_equal(snapshot(a), snapshot(b)));
  CHECK(testing::slurp(ra.loss_csv) == testing::slurp(rb.loss_csv));

  cfg.seed = 12;
  FdimNet c = make_model(toy_model(cfg), 1);
  testing::TempDir o3;
  CHECK(run(cfg, c, o3.path()).pair_losses != ra.pair_losses);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  TrainConfig cfg = toy_config();
  cfg.max_pairs = 8;
  cfg.learning_rate = 0.0;
  FdimNet model = make_model(toy_model(cfg), 2);
  const auto before = snapshot(model);
  testing::TempDir out;
  run(cfg, model, out.path());
  CHECK(all_equal(before, snapshot(model)));
}

TEST_CASE("frozen backbone") {
  TrainConfig cfg = toy_config();
  cfg.max_pairs = 8;
  cfg.freeze_backbone = true;
  FdimNet model = make_model(toy_model(cfg), 3);
  const auto backbone = snapshot(model, "backbone.");
  const auto head = snapshot(model, "head.");
  torch::optim::Adam opt = make_optimizer(model, cfg);
  std::size_t n = 0;
  for (const auto& g : opt.param_groups()) n += g.params().size();
  CHECK(n == model->parameters().size() - backbone.size());
  testing::TempDir out;
  run(cfg, model, out.path());
  CHECK(all_equal(backbone, snapshot(model, "backbone.")));
  CHECK(!all_equal(head, snapshot(model, "head.")));
}

TEST_CASE("non-finite loss aborts with a diagnostic dump") {
  TrainConfig cfg = toy_config();
  cfg.max_pairs = 4;
  FdimNet model = make_model(toy_model(cfg), 4);
  {
    torch::NoGradGuard guard;
    model->head->fc3->bias.fill_(std::nan(""));
  }
  testing::TempDir out;
  CHECK_THROWS_AS(run(cfg, model, out.path()), NumericError);
  const auto dump = out / "diagnostic_dump.json";
  REQUIRE(std::filesystem::exists(dump));
  const auto j = nlohmann::json::parse(testing::slurp(dump));
  CHECK(j.contains("step"));
  CHECK(!std::filesystem::exists(out / "checkpoint.fdimw"));
}

TEST_CASE("training rejects a mismatched variant") {
  TrainConfig cfg = toy_config();
  FdimNet model = make_model(toy_model(cfg), 5);
  cfg.ablation.use_msf_attention = false;
  testing::TempDir out;
  CHECK_THROWS_AS(run(cfg, model, out.path()), ConfigError);
}
