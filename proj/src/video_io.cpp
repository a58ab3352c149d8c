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

#include "fdim/video_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "fdim/errors.hpp"

namespace fdimq::video {

namespace {

int chroma_dim(int luma) { return (luma + 1) / 2; }

void check_bit_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 10) {
    throw ConfigError("unsupported bit depth " + std::to_string(bit_depth) +
                      " (expected 8 or 10)");
  }
}

void read_plane(std::istream& in, Plane& plane, int bit_depth) {
  const std::size_t n = plane.samples.size();
  if (bit_depth == 8) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    std::copy(buf.begin(), buf.end(), plane.samples.begin());
  } else {
    std::vector<unsigned char> buf(2 * n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
      plane.samples[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
    }
  }
  if (!in) throw MalformedInputError("short read while decoding plane");
}

void write_plane(std::ostream& out, const Plane& plane, int bit_depth) {
  const std::size_t n = plane.samples.size();
  if (bit_depth == 8) {
    std::vector<unsigned char> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>(plane.samples[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n));
  } else {
    std::vector<unsigned char> buf(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      buf[2 * i] = static_cast<unsigned char>(plane.samples[i] & 0xff);
      buf[2 * i + 1] = static_cast<unsigned char>(plane.samples[i] >> 8);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(2 * n));
  }
}

Frame blank_frame(const Geometry& g) {
  Frame f;
  f.y = Plane(g.width, g.height);
  f.u = Plane(chroma_dim(g.width), chroma_dim(g.height));
  f.v = Plane(chroma_dim(g.width), chroma_dim(g.height));
  return f;
}

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::vector<int> index;     // 4 per output sample
  std::vector<double> weight; // 4 per output sample
};

Taps make_taps(int src, int dst) {
  Taps taps;
  taps.index.resize(static_cast<std::size_t>(dst) * 4);
  taps.weight.resize(static_cast<std::size_t>(dst) * 4);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double pos = (i + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(pos));
    const double frac = pos - base;
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double w = cubic_weight(frac - (k - 1));
      taps.index[i * 4 + k] = std::clamp(base + k - 1, 0, src - 1);
      taps.weight[i * 4 + k] = w;
      total += w;
    }
    for (int k = 0; k < 4; ++k) taps.weight[i * 4 + k] /= total;
  }
  return taps;
}

struct MatrixCoefficients {
  double kr, kb;
  double kg() const { return 1.0 - kr - kb; }
};

MatrixCoefficients coefficients(ColorMatrix m) {
  return m == ColorMatrix::kBt709 ? MatrixCoefficients{0.2126, 0.0722}
                                  : MatrixCoefficients{0.2627, 0.0593};
}

struct Quantizer {
  double luma_offset, luma_scale, chroma_offset, chroma_scale, max_code;
};

Quantizer quantizer(int bit_depth, Range range) {
  const double max_code = std::ldexp(1.0, bit_depth) - 1.0;
  if (range == Range::kFull) {
    return {0.0, max_code, std::ldexp(1.0, bit_depth - 1), max_code, max_code};
  }
  const double s = std::ldexp(1.0, bit_depth - 8);
  return {16.0 * s, 219.0 * s, 128.0 * s, 224.0 * s, max_code};
}

// Reflect index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

SignalFormat parse_signal_format(const std::string& name) {
  if (name == "sdr-srgb" || name == "srgb" || name == "sdr") return SignalFormat::kSdrSrgb;
  if (name == "hdr-pq" || name == "pq") return SignalFormat::kHdrPq;
  if (name == "hdr-hlg" || name == "hlg") return SignalFormat::kHdrHlg;
  throw ConfigError("unknown signal format '" + name + "'");
}

std::string to_string(SignalFormat format) {
  switch (format) {
    case SignalFormat::kSdrSrgb: return "sdr-srgb";
    case SignalFormat::kHdrPq: return "hdr-pq";
    case SignalFormat::kHdrHlg: return "hdr-hlg";
  }
  return "sdr-srgb";
}

int bit_depth_from_pix_fmt(const std::string& pix_fmt) {
  if (pix_fmt == "yuv420p" || pix_fmt.empty()) return 8;
  if (pix_fmt == "yuv420p10le" || pix_fmt == "yuv420p10") return 10;
  throw ConfigError("unsupported pixel format '" + pix_fmt + "'");
}

std::string pix_fmt_from_bit_depth(int bit_depth) {
  check_bit_depth(bit_depth);
  return bit_depth == 8 ? "yuv420p" : "yuv420p10le";
}

std::size_t frame_bytes(const Geometry& g) {
  check_bit_depth(g.bit_depth);
  const std::size_t luma = static_cast<std::size_t>(g.width) * g.height;
  const std::size_t chroma = static_cast<std::size_t>(chroma_dim(g.width)) * chroma_dim(g.height);
  return (luma + 2 * chroma) * (g.bit_depth == 8 ? 1 : 2);
}

Frame make_frame(int width, int height, std::uint16_t luma, std::uint16_t chroma) {
  Frame f;
  f.y = Plane(width, height, luma);
  f.u = Plane(chroma_dim(width), chroma_dim(height), chroma);
  f.v = Plane(chroma_dim(width), chroma_dim(height), chroma);
  return f;
}

VideoClip read_raw_video(const std::filesystem::path& path, const Geometry& geometry,
                         SignalFormat signal) {
  RawVideoReader reader(path, geometry);
  VideoClip clip;
  clip.geometry = geometry;
  clip.signal = signal;
  clip.frames.reserve(reader.frame_count());
  for (int i = 0; i < reader.frame_count(); ++i) clip.frames.push_back(reader.read_frame(i));
  return clip;
}

void append_raw_frame(std::ostream& out, const Frame& frame, int bit_depth) {
  write_plane(out, frame.y, bit_depth);
  write_plane(out, frame.u, bit_depth);
  write_plane(out, frame.v, bit_depth);
}

void write_raw_video(const std::filesystem::path& path, const VideoClip& clip) {
  check_bit_depth(clip.geometry.bit_depth);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const Frame& f : clip.frames) append_raw_frame(out, f, clip.geometry.bit_depth);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RawVideoReader::RawVideoReader(const std::filesystem::path& path, const Geometry& geometry)
    : path_(path), geometry_(geometry) {
  if (geometry.width <= 0 || geometry.height <= 0) {
    throw ConfigError("video geometry must be positive");
  }
  const std::size_t per_frame = frame_bytes(geometry);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat '" + path.string() + "': " + ec.message());
  if (size == 0 || size % per_frame != 0) {
    std::ostringstream msg;
    msg << "'" << path.string() << "' is " << size << " bytes, not a multiple of the "
        << per_frame << "-byte frame size for " << geometry.width << "x" << geometry.height
        << " " << geometry.bit_depth << "-bit 4:2:0 (expected "
        << (size / per_frame + 1) * per_frame << " or " << (size / per_frame) * per_frame
        << " bytes)";
    throw MalformedInputError(msg.str());
  }
  frame_count_ = static_cast<int>(size / per_frame);
  file_.open(path, std::ios::binary);
  if (!file_) throw IoError("cannot open '" + path.string() + "'");
}

Frame RawVideoReader::read_frame(int index) {
  if (index < 0 || index >= frame_count_) {
    throw ContractError("frame index " + std::to_string(index) + " out of range [0, " +
                        std::to_string(frame_count_) + ")");
  }
  file_.clear();
  file_.seekg(static_cast<std::streamoff>(frame_bytes(geometry_)) * index);
  Frame f = blank_frame(geometry_);
  read_plane(file_, f.y, geometry_.bit_depth);
  read_plane(file_, f.u, geometry_.bit_depth);
  read_plane(file_, f.v, geometry_.bit_depth);
  return f;
}

FrameSampleSpec parse_sample_spec(const std::string& text) {
  FrameSampleSpec spec;
  if (text == "one-per-second") {
    spec.strategy = SampleStrategy::kOnePerSecond;
  } else if (text == "all") {
    spec.strategy = SampleStrategy::kAll;
  } else if (text.rfind("stride-", 0) == 0) {
    spec.strategy = SampleStrategy::kStride;
    try {
      spec.stride = std::stoi(text.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("bad frame stride in '" + text + "'");
    }
    if (spec.stride < 1) throw ConfigError("frame stride must be >= 1");
  } else {
    throw ConfigError("unknown frame sampling strategy '" + text + "'");
  }
  return spec;
}

std::vector<int> sample_frames(int frame_count, double fps, const FrameSampleSpec& spec) {
  if (frame_count <= 0) throw ContractError("cannot sample frames from an empty clip");
  int step = 1;
  switch (spec.strategy) {
    case SampleStrategy::kAll:
      step = 1;
      break;
    case SampleStrategy::kStride:
      step = std::max(1, spec.stride);
      break;
    case SampleStrategy::kOnePerSecond:
      step = std::max(1, static_cast<int>(std::lround(fps)));
      break;
  }
  std::vector<int> indices;
  for (int i = 0; i < frame_count; i += step) indices.push_back(i);
  return indices;
}

std::vector<int> sample_frames(const VideoClip& clip, const FrameSampleSpec& spec) {
  return sample_frames(clip.frame_count(), clip.geometry.fps, spec);
}

Plane resample_plane(const Plane& plane, int width, int height, int bit_depth) {
  if (plane.width == width && plane.height == height) return plane;
  if (width <= 0 || height <= 0) throw ContractError("resample target must be positive");
  const Taps tx = make_taps(plane.width, width);
  const Taps ty = make_taps(plane.height, height);
  const double max_code = std::ldexp(1.0, bit_depth) - 1.0;

  // Horizontal pass keeps full precision; vertical pass rounds once.
  std::vector<double> tmp(static_cast<std::size_t>(width) * plane.height);
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += tx.weight[x * 4 + k] * plane.at(tx.index[x * 4 + k], y);
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += ty.weight[y * 4 + k] * tmp[static_cast<std::size_t>(ty.index[y * 4 + k]) * width + x];
      }
      out.at(x, y) = static_cast<std::uint16_t>(std::clamp(std::round(acc), 0.0, max_code));
    }
  }
  return out;
}

Frame resample_frame(const Frame& frame, int width, int height, int bit_depth) {
  Frame out;
  out.y = resample_plane(frame.y, width, height, bit_depth);
  out.u = resample_plane(frame.u, chroma_dim(width), chroma_dim(height), bit_depth);
  out.v = resample_plane(frame.v, chroma_dim(width), chroma_dim(height), bit_depth);
  return out;
}

VideoClip resample_to_reference(const VideoClip& dist, const VideoClip& ref) {
  if (dist.frame_count() != ref.frame_count()) {
    throw AlignmentError("distorted clip has " + std::to_string(dist.frame_count()) +
                         " frames, reference has " + std::to_string(ref.frame_count()));
  }
  if (dist.geometry.same_size(ref.geometry)) return dist;
  VideoClip out;
  out.geometry = dist.geometry;
  out.geometry.width = ref.geometry.width;
  out.geometry.height = ref.geometry.height;
  out.signal = dist.signal;
  out.frames.reserve(dist.frames.size());
  for (const Frame& f : dist.frames) {
    out.frames.push_back(
        resample_frame(f, ref.geometry.width, ref.geometry.height, dist.geometry.bit_depth));
  }
  return out;
}

ColorMatrix default_matrix(SignalFormat signal) {
  return signal == SignalFormat::kSdrSrgb ? ColorMatrix::kBt709 : ColorMatrix::kBt2020;
}

Range parse_range(const std::string& name) {
  if (name == "full" || name == "pc") return Range::kFull;
  if (name == "limited" || name == "tv") return Range::kLimited;
  throw ConfigError("unknown sample range '" + name + "'");
}

RgbImage frame_to_rgb(const Frame& frame, int bit_depth, ColorMatrix matrix, Range range) {
  check_bit_depth(bit_depth);
  const int w = frame.y.width;
  const int h = frame.y.height;
  const Plane u = resample_plane(frame.u, w, h, bit_depth);
  const Plane v = resample_plane(frame.v, w, h, bit_depth);
  const MatrixCoefficients mc = coefficients(matrix);
  const Quantizer q = quantizer(bit_depth, range);

  RgbImage rgb(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double luma = (frame.y.at(x, y) - q.luma_offset) / q.luma_scale;
      const double cb = (u.at(x, y) - q.chroma_offset) / q.chroma_scale;
      const double cr = (v.at(x, y) - q.chroma_offset) / q.chroma_scale;
      const double r = luma + 2.0 * (1.0 - mc.kr) * cr;
      const double b = luma + 2.0 * (1.0 - mc.kb) * cb;
      const double g = (luma - mc.kr * r - mc.kb * b) / mc.kg();
      rgb.at(0, y, x) = static_cast<float>(std::clamp(r, 0.0, 1.0));
      rgb.at(1, y, x) = static_cast<float>(std::clamp(g, 0.0, 1.0));
      rgb.at(2, y, x) = static_cast<float>(std::clamp(b, 0.0, 1.0));
    }
  }
  return rgb;
}

Frame rgb_to_frame(const RgbImage& rgb, int bit_depth, ColorMatrix matrix, Range range) {
  check_bit_depth(bit_depth);
  const int w = rgb.width;
  const int h = rgb.height;
  const MatrixCoefficients mc = coefficients(matrix);
  const Quantizer q = quantizer(bit_depth, range);
  const int cw = chroma_dim(w);
  const int ch = chroma_dim(h);

  Frame f;
  f.y = Plane(w, h);
  f.u = Plane(cw, ch);
  f.v = Plane(cw, ch);
  std::vector<double> cb_sum(static_cast<std::size_t>(cw) * ch, 0.0);
  std::vector<double> cr_sum(cb_sum.size(), 0.0);
  std::vector<int> count(cb_sum.size(), 0);
  auto code = [&](double value) {
    return static_cast<std::uint16_t>(std::clamp(std::round(value), 0.0, q.max_code));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = rgb.at(0, y, x);
      const double g = rgb.at(1, y, x);
      const double b = rgb.at(2, y, x);
      const double luma = mc.kr * r + mc.kg() * g + mc.kb * b;
      f.y.at(x, y) = code(luma * q.luma_scale + q.luma_offset);
      const std::size_t ci = static_cast<std::size_t>(y / 2) * cw + x / 2;
      cb_sum[ci] += (b - luma) / (2.0 * (1.0 - mc.kb));
      cr_sum[ci] += (r - luma) / (2.0 * (1.0 - mc.kr));
      ++count[ci];
    }
  }
  for (std::size_t i = 0; i < cb_sum.size(); ++i) {
    f.u.samples[i] = code(cb_sum[i] / count[i] * q.chroma_scale + q.chroma_offset);
    f.v.samples[i] = code(cr_sum[i] / count[i] * q.chroma_scale + q.chroma_offset);
  }
  return f;
}

RgbImage reflect_pad(const RgbImage& image, int min_width, int min_height) {
  if (image.width >= min_width && image.height >= min_height) return image;
  const int w = std::max(image.width, min_width);
  const int h = std::max(image.height, min_height);
  const int pad_x = (w - image.width) / 2;
  const int pad_y = (h - image.height) / 2;
  RgbImage out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = reflect_index(y - pad_y, image.height);
      for (int x = 0; x < w; ++x) {
        out.at(c, y, x) = image.at(c, sy, reflect_index(x - pad_x, image.width));
      }
    }
  }
  return out;
}

CropWindow draw_crop_window(int width, int height, int crop, double flip_p,
                            std::mt19937_64& rng) {
  CropWindow window;
  window.size = crop;
  window.x = std::uniform_int_distribution<int>(0, std::max(0, width - crop))(rng);
  window.y = std::uniform_int_distribution<int>(0, std::max(0, height - crop))(rng);
  window.flipped = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < flip_p;
  return window;
}

RgbImage apply_crop(const RgbImage& image, const CropWindow& window) {
  if (window.x + window.size > image.width || window.y + window.size > image.height) {
    throw ContractError("crop window exceeds image bounds");
  }
  RgbImage out(window.size, window.size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < window.size; ++y) {
      for (int x = 0; x < window.size; ++x) {
        const int sx = window.flipped ? window.x + window.size - 1 - x : window.x + x;
        out.at(c, y, x) = image.at(c, window.y + y, sx);
      }
    }
  }
  return out;
}

AugmentedPair augment_crop_flip(const RgbImage& ref, const RgbImage& dist, int crop,
                                double flip_p, std::mt19937_64& rng) {
  if (ref.width != dist.width || ref.height != dist.height) {
    throw AlignmentError("reference and distorted frames differ in size");
  }
  if (crop <= 0) throw ConfigError("crop size must be positive");
  const RgbImage ref_padded = reflect_pad(ref, crop, crop);
  const RgbImage dist_padded = reflect_pad(dist, crop, crop);
  AugmentedPair pair;
  pair.window = draw_crop_window(ref_padded.width, ref_padded.height, crop, flip_p, rng);
  pair.ref = apply_crop(ref_padded, pair.window);
  pair.dist = apply_crop(dist_padded, pair.window);
  return pair;
}

AugmentedPair augment_crop_flip(const RgbImage& ref, const RgbImage& dist, std::uint64_t seed,
                                int crop, double flip_p) {
  std::mt19937_64 rng(seed);
  return augment_crop_flip(ref, dist, crop, flip_p, rng);
}

}  // namespace fdimq::video
