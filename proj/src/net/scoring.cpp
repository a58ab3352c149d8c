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

#include "fdim/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fdim/errors.hpp"

namespace fdimq::net {

bool uses_hdr_path(video::SignalFormat signal, const FrameOptions& options) {
  return options.hdr || signal != video::SignalFormat::kSdrSrgb;
}

video::RgbImage prepare_frame(const video::Frame& frame, int bit_depth, video::SignalFormat signal,
                              const FrameOptions& options, std::size_t* clamped) {
  const bool hdr_path = uses_hdr_path(signal, options);
  const video::ColorMatrix matrix =
      hdr_path ? video::ColorMatrix::kBt2020 : video::default_matrix(signal);
  video::RgbImage rgb = video::frame_to_rgb(frame, bit_depth, matrix, options.range);
  if (!hdr_path) return rgb;
  hdr::DisplayModel display = options.display;
  if (signal == video::SignalFormat::kHdrPq) display.eotf = hdr::Eotf::kPq;
  if (signal == video::SignalFormat::kHdrHlg) display.eotf = hdr::Eotf::kHlg;
  hdr::PreprocessResult result = hdr::hdr_preprocess(rgb, display);
  if (clamped) *clamped += result.clamped_samples;
  return std::move(result.image);
}

torch::Tensor to_tensor(const video::RgbImage& image) {
  return image_to_tensor(image.data, image.width, image.height);
}

namespace {

QualityPrediction run_frames(FdimNet& model, int count,
                             const std::function<std::pair<video::RgbImage, video::RgbImage>(int)>& load,
                             std::vector<int> indices) {
  torch::NoGradGuard guard;
  model->eval();
  std::vector<double> scores;
  std::vector<double> raw_unc;
  for (int i = 0; i < count; ++i) {
    auto [ref, dist] = load(indices[i]);
    const torch::Tensor raw = model->forward(to_tensor(ref), to_tensor(dist)).to(torch::kDouble);
    const double s = raw[0][0].item<double>();
    const double u = raw[0][1].item<double>();
    if (!std::isfinite(s) || !std::isfinite(u)) {
      throw NumericError("non-finite network output at frame " + std::to_string(indices[i]));
    }
    scores.push_back(s);
    raw_unc.push_back(u);
  }
  QualityPrediction p = aggregate_video(scores, raw_unc);
  p.frame_indices = std::move(indices);
  return p;
}

}  // namespace

QualityPrediction score_deep(FdimNet& model, const video::VideoClip& ref,
                             const video::VideoClip& dist, const ScoreOptions& options) {
  if (ref.frames.empty()) throw ContractError("score_deep: empty reference clip");
  if (ref.frame_count() != dist.frame_count()) {
    throw AlignmentError("reference has " + std::to_string(ref.frame_count()) +
                         " frames, distorted has " + std::to_string(dist.frame_count()));
  }
  std::vector<int> indices = video::sample_frames(ref, options.sampling);
  const int bd_ref = ref.geometry.bit_depth;
  const int bd_dist = dist.geometry.bit_depth;
  auto load = [&](int t) {
    video::Frame d = dist.frames[t];
    if (!dist.geometry.same_size(ref.geometry)) {
      d = video::resample_frame(d, ref.geometry.width, ref.geometry.height, bd_dist);
    }
    return std::make_pair(prepare_frame(ref.frames[t], bd_ref, ref.signal, options.frame),
                          prepare_frame(d, bd_dist, dist.signal, options.frame));
  };
  const int count = static_cast<int>(indices.size());
  return run_frames(model, count, load, std::move(indices));
}

QualityPrediction score_deep_files(FdimNet& model, const std::filesystem::path& ref_path,
                                   const video::Geometry& ref_geometry,
                                   const std::filesystem::path& dist_path,
                                   const video::Geometry& dist_geometry,
                                   video::SignalFormat signal, const ScoreOptions& options) {
  video::RawVideoReader ref_reader(ref_path, ref_geometry);
  video::RawVideoReader dist_reader(dist_path, dist_geometry);
  if (ref_reader.frame_count() != dist_reader.frame_count()) {
    throw AlignmentError("reference has " + std::to_string(ref_reader.frame_count()) +
                         " frames, distorted has " + std::to_string(dist_reader.frame_count()));
  }
  if (ref_reader.frame_count() == 0) throw MalformedInputError(ref_path.string() + ": no frames");
  std::vector<int> indices =
      video::sample_frames(ref_reader.frame_count(), ref_geometry.fps, options.sampling);
  auto load = [&](int t) {
    video::Frame r = ref_reader.read_frame(t);
    video::Frame d = dist_reader.read_frame(t);
    if (!dist_geometry.same_size(ref_geometry)) {
      d = video::resample_frame(d, ref_geometry.width, ref_geometry.height, dist_geometry.bit_depth);
    }
    return std::make_pair(prepare_frame(r, ref_geometry.bit_depth, signal, options.frame),
                          prepare_frame(d, dist_geometry.bit_depth, signal, options.frame));
  };
  const int count = static_cast<int>(indices.size());
  return run_frames(model, count, load, std::move(indices));
}

int FrameCache::frame_count(const std::filesystem::path& path, const video::Geometry& geometry) {
  std::lock_guard lock(mutex_);
  auto& reader = readers_[path.string()];
  if (!reader) reader = std::make_unique<video::RawVideoReader>(path, geometry);
  return reader->frame_count();
}

std::shared_ptr<const video::RgbImage> FrameCache::get(const std::filesystem::path& path,
                                                       const video::Geometry& geometry,
                                                       const video::Geometry& target, int index,
                                                       video::SignalFormat signal,
                                                       const FrameOptions& options) {
  const std::string key = path.string() + "#" + std::to_string(index);
  std::lock_guard lock(mutex_);
  if (auto it = frames_.find(key); it != frames_.end()) return it->second;
  auto& reader = readers_[path.string()];
  if (!reader) reader = std::make_unique<video::RawVideoReader>(path, geometry);
  video::Frame frame = reader->read_frame(index);
  if (!geometry.same_size(target)) {
    frame = video::resample_frame(frame, target.width, target.height, geometry.bit_depth);
  }
  auto image = std::make_shared<const video::RgbImage>(
      prepare_frame(frame, geometry.bit_depth, signal, options));
  const std::size_t size = image->data.size() * sizeof(float);
  while (!order_.empty() && bytes_ + size > max_bytes_) {
    auto victim = frames_.find(order_.front());
    bytes_ -= victim->second->data.size() * sizeof(float);
    frames_.erase(victim);
    order_.erase(order_.begin());
  }
  frames_[key] = image;
  order_.push_back(key);
  bytes_ += size;
  return image;
}

}  // namespace fdimq::net
