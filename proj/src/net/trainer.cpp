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

#include "fdim/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fdim/errors.hpp"
#include "fdim/weights_io.hpp"

namespace fdimq::net {

torch::Tensor normal_cdf(const torch::Tensor& x) {
  return 0.5 * torch::erfc(-x / std::sqrt(2.0));
}

torch::Tensor predicted_preference(const torch::Tensor& q_i, const torch::Tensor& sigma_i,
                                   const torch::Tensor& q_j, const torch::Tensor& sigma_j) {
  return normal_cdf((q_i - q_j) / torch::sqrt(sigma_i.square() + sigma_j.square()));
}

torch::Tensor fidelity_loss(const torch::Tensor& target, const torch::Tensor& predicted) {
  return 1.0 - target * predicted - (1.0 - target) * (1.0 - predicted);
}

torch::Tensor pair_loss(const torch::Tensor& raw_i, const torch::Tensor& raw_j, double target) {
  const torch::Tensor p = predicted_preference(
      raw_i.select(-1, 0), positive_sigma(raw_i.select(-1, 1)), raw_j.select(-1, 0),
      positive_sigma(raw_j.select(-1, 1)));
  return fidelity_loss(torch::full_like(p, target), p).mean();
}

torch::optim::Adam make_optimizer(FdimNet& model, const TrainConfig& config) {
  std::vector<torch::Tensor> params;
  for (auto& p : model->named_parameters()) {
    const bool in_backbone = p.key().rfind("backbone.", 0) == 0;
    if (config.freeze_backbone && in_backbone) {
      p.value().set_requires_grad(false);
      continue;
    }
    params.push_back(p.value());
  }
  torch::optim::AdamOptions opts(config.learning_rate);
  opts.betas({config.beta1, config.beta2});
  opts.weight_decay(config.weight_decay);
  return torch::optim::Adam(params, opts);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,pairs_seen,loss,grad_norm,mean_sigma,mean_abs_z\n";
  char line[256];
  for (const auto& s : steps) {
    std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", s.step, s.pairs_seen,
                  s.loss, s.grad_norm, s.mean_sigma, s.mean_abs_z);
    out << line;
  }
}

namespace {

struct PairTensors {
  torch::Tensor refs;   // [1 or 2, 3, S, S]
  torch::Tensor dists;  // [2, 3, S, S]
  int frame_left = 0;
  int frame_right = 0;
};

struct RowLookup {
  std::map<std::string, std::size_t> by_dist;
  const std::vector<ManifestRow>* rows = nullptr;

  const ManifestRow& operator()(const train::SubjectiveRecord& r) const {
    if (r.source_row < rows->size() && (*rows)[r.source_row].dist_id() == r.dist_id) {
      return (*rows)[r.source_row];
    }
    auto it = by_dist.find(r.dist_id);
    if (it == by_dist.end()) throw ContractError("pair references unknown video " + r.dist_id);
    return (*rows)[it->second];
  }
};

int pick_frame(FrameCache& cache, const ManifestRow& row, const video::FrameSampleSpec& spec,
               std::mt19937_64& rng, int limit = -1) {
  int count = std::min(cache.frame_count(row.ref_path, row.reference_geometry()),
                       cache.frame_count(row.dist_path, row.geometry));
  if (limit > 0) count = std::min(count, limit);
  if (count <= 0) throw MalformedInputError(row.dist_path.string() + ": no frames");
  const std::vector<int> sampled = video::sample_frames(count, row.geometry.fps, spec);
  return sampled[std::uniform_int_distribution<std::size_t>(0, sampled.size() - 1)(rng)];
}

std::vector<video::RgbImage> crop_all(const std::vector<const video::RgbImage*>& images, int crop,
                                      double flip_p, std::mt19937_64& rng) {
  std::vector<video::RgbImage> padded;
  for (const auto* im : images) padded.push_back(video::reflect_pad(*im, crop, crop));
  for (const auto& p : padded) {
    if (p.width != padded[0].width || p.height != padded[0].height) {
      throw AlignmentError("frames of one training sample differ in size");
    }
  }
  const video::CropWindow window =
      video::draw_crop_window(padded[0].width, padded[0].height, crop, flip_p, rng);
  std::vector<video::RgbImage> out;
  for (const auto& p : padded) out.push_back(video::apply_crop(p, window));
  return out;
}

std::vector<const video::RgbImage*> raw_ptrs(
    const std::vector<std::shared_ptr<const video::RgbImage>>& v) {
  std::vector<const video::RgbImage*> out;
  for (const auto& p : v) out.push_back(p.get());
  return out;
}

PairTensors load_pair(const train::TrainPair& pair, const RowLookup& lookup, FrameCache& cache,
                      const TrainConfig& config, const FrameOptions& frame_options,
                      const video::FrameSampleSpec& spec, std::mt19937_64& rng) {
  const ManifestRow& a = lookup(pair.left);
  const ManifestRow& b = lookup(pair.right);
  auto fetch = [&](const ManifestRow& row, bool reference, int index) {
    const video::Geometry target = row.reference_geometry();
    return reference ? cache.get(row.ref_path, target, target, index, video::SignalFormat::kSdrSrgb,
                                 frame_options)
                     : cache.get(row.dist_path, row.geometry, target, index,
                                 video::SignalFormat::kSdrSrgb, frame_options);
  };
  PairTensors t;
  if (pair.kind == train::PairKind::kHomogeneous) {
    // Shared reference: one frame index and one crop for all three frames.
    const int limit = std::min(cache.frame_count(a.dist_path, a.geometry),
                               cache.frame_count(b.dist_path, b.geometry));
    const int index = pick_frame(cache, a, spec, rng, limit);
    t.frame_left = t.frame_right = index;
    auto crops = crop_all(raw_ptrs({fetch(a, true, index), fetch(a, false, index),
                                    fetch(b, false, index)}),
                          config.crop, config.flip_p, rng);
    t.refs = to_tensor(crops[0]);
    t.dists = torch::cat({to_tensor(crops[1]), to_tensor(crops[2])}, 0);
    return t;
  }
  t.frame_left = pick_frame(cache, a, spec, rng);
  t.frame_right = pick_frame(cache, b, spec, rng);
  auto left = crop_all(raw_ptrs({fetch(a, true, t.frame_left), fetch(a, false, t.frame_left)}),
                       config.crop, config.flip_p, rng);
  auto right = crop_all(raw_ptrs({fetch(b, true, t.frame_right), fetch(b, false, t.frame_right)}),
                        config.crop, config.flip_p, rng);
  t.refs = torch::cat({to_tensor(left[0]), to_tensor(right[0])}, 0);
  t.dists = torch::cat({to_tensor(left[1]), to_tensor(right[1])}, 0);
  return t;
}

[[noreturn]] void dump_and_abort(const std::filesystem::path& out_dir, const train::TrainPair& pair,
                                 const PairTensors& t, const torch::Tensor& raw, int step,
                                 std::size_t pair_index, double loss) {
  nlohmann::json dump;
  dump["step"] = step;
  dump["pair_index"] = pair_index;
  dump["loss"] = std::isnan(loss) ? "nan" : (loss > 0 ? "inf" : "-inf");
  dump["left"] = {{"dist_id", pair.left.dist_id}, {"ref_id", pair.left.ref_id},
                  {"mos", pair.left.mos}, {"frame", t.frame_left}};
  dump["right"] = {{"dist_id", pair.right.dist_id}, {"ref_id", pair.right.ref_id},
                   {"mos", pair.right.mos}, {"frame", t.frame_right}};
  dump["target"] = pair.target;
  std::vector<double> flat;
  const torch::Tensor r = raw.detach().to(torch::kDouble).contiguous();
  for (std::int64_t i = 0; i < r.numel(); ++i) flat.push_back(r.data_ptr<double>()[i]);
  dump["raw_outputs"] = flat;
  dump["input_finite"] = torch::isfinite(t.dists).all().item<bool>() &&
                         torch::isfinite(t.refs).all().item<bool>();
  std::string where = "(no output directory)";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / "diagnostic_dump.json";
    std::ofstream(path) << dump.dump(2) << '\n';
    where = path.string();
  }
  throw NumericError("non-finite loss at step " + std::to_string(step) + ", pair " +
                     std::to_string(pair_index) + "; diagnostics written to " + where);
}

double grad_norm(const std::vector<torch::Tensor>& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) total += p.grad().to(torch::kDouble).square().sum().item<double>();
  }
  return std::sqrt(total);
}

}  // namespace

TrainReport train_epoch(FdimNet& model, torch::optim::Adam& optimizer,
                        const std::vector<ManifestRow>& rows,
                        const std::vector<train::TrainPair>& pairs, const TrainConfig& config,
                        const TrainOptions& options, std::mt19937_64& rng, int step_offset) {
  if (pairs.empty()) throw ConfigError("train_epoch: no training pairs");
  config.validate();
  RowLookup lookup;
  lookup.rows = &rows;
  for (std::size_t i = 0; i < rows.size(); ++i) lookup.by_dist[rows[i].dist_id()] = i;
  FrameCache cache(options.cache_bytes);
  const video::FrameSampleSpec spec = video::parse_sample_spec(config.frame_sampling);

  std::vector<torch::Tensor> params;
  for (const auto& group : optimizer.param_groups()) {
    for (const auto& p : group.params()) params.push_back(p);
  }

  model->train();
  // Normalisation statistics stay fixed: pair batches hold 3-4 crops, too few
  // for batch statistics, and training and scoring then see the same encoder.
  model->backbone->eval();
  TrainReport report;
  const auto start = std::chrono::steady_clock::now();
  optimizer.zero_grad();
  const std::size_t batch = static_cast<std::size_t>(config.batch_pairs);
  double batch_loss = 0.0;
  double batch_sigma = 0.0;
  double batch_z = 0.0;
  std::size_t in_batch = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const train::TrainPair& pair = pairs[i];
    const PairTensors t = load_pair(pair, lookup, cache, config, options.frame, spec, rng);
    const torch::Tensor raw = model->forward(t.refs, t.dists);  // [2, 2]
    const torch::Tensor loss = pair_loss(raw[0], raw[1], pair.target);
    const double value = loss.item<double>();
    if (!std::isfinite(value)) {
      dump_and_abort(options.out_dir, pair, t, raw,
                     step_offset + static_cast<int>(report.steps.size()) + 1, i, value);
    }
    const std::size_t remaining = pairs.size() - (i - in_batch);
    const double scale = 1.0 / static_cast<double>(std::min(batch, remaining));
    (loss * scale).backward();
    report.pair_losses.push_back(value);
    batch_loss += value;
    {
      torch::NoGradGuard guard;
      const torch::Tensor r = raw.detach().to(torch::kDouble);
      const torch::Tensor s = positive_sigma(r.select(1, 1));
      batch_sigma += s.mean().item<double>();
      batch_z += ((r[0][0] - r[1][0]).abs() / (s.square().sum()).sqrt()).item<double>();
    }
    ++in_batch;
    if (in_batch == batch || i + 1 == pairs.size()) {
      StepRecord rec;
      rec.step = step_offset + static_cast<int>(report.steps.size()) + 1;
      rec.pairs_seen = static_cast<int>(i + 1);
      rec.loss = batch_loss / static_cast<double>(in_batch);
      rec.grad_norm = grad_norm(params);
      rec.mean_sigma = batch_sigma / static_cast<double>(in_batch);
      rec.mean_abs_z = batch_z / static_cast<double>(in_batch);
      if (!std::isfinite(rec.grad_norm)) {
        throw NumericError("non-finite gradient norm at step " + std::to_string(rec.step));
      }
      if (config.grad_clip_norm > 0.0) torch::nn::utils::clip_grad_norm_(params, config.grad_clip_norm);
      optimizer.step();
      optimizer.zero_grad();
      report.steps.push_back(rec);
      if (options.on_step) options.on_step(rec);
      batch_loss = 0.0;
      batch_sigma = 0.0;
      batch_z = 0.0;
      in_batch = 0;
    }
  }
  report.pairs = pairs.size();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  model->eval();
  return report;
}

TrainReport train(FdimNet& model, const std::vector<ManifestRow>& rows, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (!(model->config().ablation == config.ablation)) {
    throw ConfigError("model variant does not match the training config ablation keys");
  }
  at::globalContext().setDeterministicAlgorithms(true, false);
  torch::manual_seed(config.seed);
  std::mt19937_64 rng(config.seed);
  const auto records = train::records_from_manifest(rows);
  torch::optim::Adam optimizer = make_optimizer(model, config);

  TrainReport total;
  total.fingerprint = config_fingerprint(config);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const train::PairPlan plan = train::build_pairs(records, config, rng);
    if (epoch == 0) {
      total.selected_refs = plan.selected_refs;
    }
    TrainReport r = train_epoch(model, optimizer, rows, plan.pairs, config, options, rng,
                                static_cast<int>(total.steps.size()));
    total.steps.insert(total.steps.end(), r.steps.begin(), r.steps.end());
    total.pair_losses.insert(total.pair_losses.end(), r.pair_losses.begin(), r.pair_losses.end());
    total.pairs += r.pairs;
    total.homogeneous += plan.homogeneous;
    total.heterogeneous += plan.heterogeneous;
    total.seconds += r.seconds;
  }
  if (options.save && !options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    total.loss_csv = options.out_dir / "loss.csv";
    write_loss_csv(total.loss_csv, total.steps);
    Checkpoint info;
    info.config = model->config();
    info.metadata["config_fingerprint"] = total.fingerprint;
    info.metadata["train_config"] = config_entries(config);
    info.metadata["variant"] = model->config().to_json();
    info.metadata["pairs"] = total.pairs;
    info.metadata["steps"] = total.steps.size();
    info.metadata["selected_refs"] = total.selected_refs;
    total.checkpoint = options.out_dir / "checkpoint.fdimw";
    save_checkpoint(total.checkpoint, model, info);
  }
  return total;
}

}  // namespace fdimq::net
