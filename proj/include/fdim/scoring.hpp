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

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fdim/hdr.hpp"
#include "fdim/model.hpp"
#include "fdim/quality_head.hpp"
#include "fdim/video_io.hpp"

namespace fdimq::net {

// How decoded YUV frames become network input.
struct FrameOptions {
  bool hdr = false;  // PU21 path; implied by a PQ/HLG signal format
  hdr::DisplayModel display;
  video::Range range = video::Range::kFull;
};

bool uses_hdr_path(video::SignalFormat signal, const FrameOptions& options);

// SDR: R'G'B' in [0, 1]. HDR: display model -> PU21 -> [0, 1].
video::RgbImage prepare_frame(const video::Frame& frame, int bit_depth, video::SignalFormat signal,
                              const FrameOptions& options, std::size_t* clamped = nullptr);

struct ScoreOptions {
  video::FrameSampleSpec sampling;
  FrameOptions frame;
};

// Deep-branch score over the sampled frames. The distorted clip is resampled
// to the reference size first.
QualityPrediction score_deep(FdimNet& model, const video::VideoClip& ref,
                             const video::VideoClip& dist, const ScoreOptions& options);

// Reads only the sampled frames from disk.
QualityPrediction score_deep_files(FdimNet& model, const std::filesystem::path& ref_path,
                                   const video::Geometry& ref_geometry,
                                   const std::filesystem::path& dist_path,
                                   const video::Geometry& dist_geometry,
                                   video::SignalFormat signal, const ScoreOptions& options);

// Decoded, geometry-matched and converted frames keyed by (file, index).
// Oldest entries are evicted once the byte budget is exceeded.
class FrameCache {
 public:
  explicit FrameCache(std::size_t max_bytes = std::size_t{1} << 30) : max_bytes_(max_bytes) {}

  // `target` is the reference geometry; frames of other sizes are resampled.
  std::shared_ptr<const video::RgbImage> get(const std::filesystem::path& path,
                                             const video::Geometry& geometry,
                                             const video::Geometry& target, int index,
                                             video::SignalFormat signal,
                                             const FrameOptions& options);
  int frame_count(const std::filesystem::path& path, const video::Geometry& geometry);
  std::size_t bytes() const { return bytes_; }

 private:
  std::size_t max_bytes_;
  std::size_t bytes_ = 0;
  std::map<std::string, std::shared_ptr<const video::RgbImage>> frames_;
  std::vector<std::string> order_;
  std::map<std::string, std::unique_ptr<video::RawVideoReader>> readers_;
  std::mutex mutex_;
};

torch::Tensor to_tensor(const video::RgbImage& image);

}  // namespace fdimq::net
