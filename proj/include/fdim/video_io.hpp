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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fdimq::video {

enum class SignalFormat { kSdrSrgb, kHdrPq, kHdrHlg };

SignalFormat parse_signal_format(const std::string& name);
std::string to_string(SignalFormat format);

struct Geometry {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  double fps = 25.0;

  bool same_size(const Geometry& other) const {
    return width == other.width && height == other.height;
  }
};

// Bit depth from an ffmpeg-style pixel format name (yuv420p, yuv420p10le).
int bit_depth_from_pix_fmt(const std::string& pix_fmt);
std::string pix_fmt_from_bit_depth(int bit_depth);

// Bytes occupied by one 4:2:0 frame. Chroma planes are ceil(w/2) x ceil(h/2).
std::size_t frame_bytes(const Geometry& geometry);

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;

  Plane() = default;
  Plane(int w, int h, std::uint16_t fill = 0)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

  std::uint16_t& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const {
    return samples[static_cast<std::size_t>(y) * width + x];
  }
  bool operator==(const Plane&) const = default;
};

struct Frame {
  Plane y, u, v;
  bool operator==(const Frame&) const = default;
};

Frame make_frame(int width, int height, std::uint16_t luma, std::uint16_t chroma);

struct VideoClip {
  Geometry geometry;
  SignalFormat signal = SignalFormat::kSdrSrgb;
  std::vector<Frame> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

// Reads every frame of a headerless planar YUV 4:2:0 file. 10-bit samples are
// 16-bit little-endian words.
VideoClip read_raw_video(const std::filesystem::path& path, const Geometry& geometry,
                         SignalFormat signal = SignalFormat::kSdrSrgb);
void write_raw_video(const std::filesystem::path& path, const VideoClip& clip);
void append_raw_frame(std::ostream& out, const Frame& frame, int bit_depth);

// Random access to single frames without loading the whole clip.
class RawVideoReader {
 public:
  RawVideoReader(const std::filesystem::path& path, const Geometry& geometry);

  int frame_count() const { return frame_count_; }
  const Geometry& geometry() const { return geometry_; }
  Frame read_frame(int index);

 private:
  std::filesystem::path path_;
  Geometry geometry_;
  std::ifstream file_;
  int frame_count_ = 0;
};

enum class SampleStrategy { kOnePerSecond, kAll, kStride };

struct FrameSampleSpec {
  SampleStrategy strategy = SampleStrategy::kOnePerSecond;
  int stride = 1;  // used by kStride
  std::uint64_t seed = 0;
};

FrameSampleSpec parse_sample_spec(const std::string& text);

std::vector<int> sample_frames(int frame_count, double fps, const FrameSampleSpec& spec);
std::vector<int> sample_frames(const VideoClip& clip, const FrameSampleSpec& spec);

// Separable bicubic (Keys, a = -0.5) with pixel-centre alignment and edge clamping.
Plane resample_plane(const Plane& plane, int width, int height, int bit_depth);
Frame resample_frame(const Frame& frame, int width, int height, int bit_depth);

// Brings a distorted clip to the reference's spatial size. Pass-through when
// sizes already match.
VideoClip resample_to_reference(const VideoClip& dist, const VideoClip& ref);

// Planar float RGB in [0, 1], channel-major (c * H * W + y * W + x).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  RgbImage() = default;
  RgbImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, fill) {}

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const RgbImage&) const = default;
};

enum class ColorMatrix { kBt709, kBt2020 };
enum class Range { kFull, kLimited };

ColorMatrix default_matrix(SignalFormat signal);
Range parse_range(const std::string& name);

// Chroma is bicubically upsampled to luma size, then YCbCr -> R'G'B'.
// Full range normalises by 1 / (2^bit_depth - 1). Output is clamped to [0, 1].
RgbImage frame_to_rgb(const Frame& frame, int bit_depth, ColorMatrix matrix,
                      Range range = Range::kFull);

// Inverse of frame_to_rgb (chroma decimated by 2x2 averaging). Used by the
// synthetic corpus generator and tests.
Frame rgb_to_frame(const RgbImage& rgb, int bit_depth, ColorMatrix matrix,
                   Range range = Range::kFull);

struct CropWindow {
  int x = 0;
  int y = 0;
  int size = 0;
  bool flipped = false;
  bool operator==(const CropWindow&) const = default;
};

struct AugmentedPair {
  RgbImage ref;
  RgbImage dist;
  CropWindow window;
};

RgbImage reflect_pad(const RgbImage& image, int min_width, int min_height);

CropWindow draw_crop_window(int width, int height, int crop, double flip_p,
                            std::mt19937_64& rng);
RgbImage apply_crop(const RgbImage& image, const CropWindow& window);

// Same crop window and flip decision applied to both frames. Frames smaller
// than the crop are reflection-padded first.
AugmentedPair augment_crop_flip(const RgbImage& ref, const RgbImage& dist, int crop,
                                double flip_p, std::mt19937_64& rng);
AugmentedPair augment_crop_flip(const RgbImage& ref, const RgbImage& dist, std::uint64_t seed,
                                int crop = 512, double flip_p = 0.5);

}  // namespace fdimq::video
