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

#include "fdim/inspect.hpp"

#include <png.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>

#include "fdim/errors.hpp"
#include "fdim/synth.hpp"

namespace fdimq::net {

namespace {

FeatureMap to_map(const torch::Tensor& f, int scale, const char* kind, int width, int height) {
  namespace F = torch::nn::functional;
  torch::Tensor m = f.detach().to(torch::kFloat32).mean(1, true);
  m = F::interpolate(m, F::InterpolateFuncOptions()
                            .size(std::vector<std::int64_t>{height, width})
                            .mode(torch::kBilinear)
                            .align_corners(false));
  m = m.contiguous().view({-1});
  FeatureMap out;
  out.scale = scale;
  out.kind = kind;
  out.width = width;
  out.height = height;
  const float lo = m.min().item<float>();
  const float hi = m.max().item<float>();
  const float range = hi - lo;
  out.values.assign(static_cast<std::size_t>(m.numel()), 0.0f);
  if (!(range > 1e-12f * std::max(1.0f, std::abs(hi)))) {
    out.constant = true;
    return out;
  }
  const float* p = m.data_ptr<float>();
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = (p[i] - lo) / range;
  return out;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* file = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ContractError("write_png: pixel buffer size mismatch");
  }
  PngWriter w;
  w.file = std::fopen(path.c_str(), "wb");
  if (!w.file) throw IoError("cannot write " + path.string());
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw IoError("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw IoError("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw IoError("libpng error writing " + path.string());
  png_init_io(w.png, w.file);
  png_set_IHDR(w.png, w.info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < height; ++y) {
    png_write_row(w.png, const_cast<png_bytep>(pixels.data() +
                                               static_cast<std::size_t>(y) * width * channels));
  }
  png_write_end(w.png, nullptr);
}

}  // namespace

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
  write_png(path, width, height, 1, pixels);
}

void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels) {
  write_png(path, width, height, 3, pixels);
}

PngImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read png " + path.string());
  }
  PngImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  out.channels = gray ? 1 : 3;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode png " + path.string());
  }
  return out;
}

std::vector<FeatureMap> compute_feature_maps(FdimNet& model, const video::RgbImage& ref,
                                             const video::RgbImage& dist) {
  if (ref.width != dist.width || ref.height != dist.height) {
    throw AlignmentError("feature maps need equally sized frames");
  }
  torch::NoGradGuard guard;
  model->eval();
  const ForwardDetail d = model->forward_detailed(to_tensor(ref), to_tensor(dist));
  std::vector<FeatureMap> maps;
  for (int s = 0; s < 4; ++s) {
    maps.push_back(to_map(d.refined[s].h_refined, s + 1, "refined", ref.width, ref.height));
    if (d.cafm[s].e.defined()) {
      maps.push_back(to_map(d.cafm[s].e, s + 1, "discrepancy", ref.width, ref.height));
    }
  }
  return maps;
}

std::vector<ExportedMap> export_feature_maps(FdimNet& model, const video::RgbImage& ref,
                                             const video::RgbImage& dist,
                                             const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::vector<FeatureMap> maps = compute_feature_maps(model, ref, dist);
  const std::size_t n = static_cast<std::size_t>(dist.width) * dist.height;
  // Overlay base: luma of the distorted frame.
  std::vector<float> luma(n);
  for (std::size_t i = 0; i < n; ++i) {
    luma[i] = 0.2126f * dist.data[i] + 0.7152f * dist.data[n + i] + 0.0722f * dist.data[2 * n + i];
  }
  std::vector<ExportedMap> written;
  for (const FeatureMap& m : maps) {
    const std::string stem = m.kind + "_s" + std::to_string(m.scale);
    ExportedMap e{m.scale, m.kind, out_dir / (stem + ".png"), out_dir / (stem + "_overlay.png")};
    std::vector<std::uint8_t> gray(n), overlay(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const float v = m.values[i];
      gray[i] = to_byte(v);
      // Blue-to-red ramp blended half-and-half with the frame.
      const float heat[3] = {v, 1.0f - std::abs(2.0f * v - 1.0f), 1.0f - v};
      for (int c = 0; c < 3; ++c) overlay[3 * i + c] = to_byte(0.5f * luma[i] + 0.5f * heat[c]);
    }
    write_png_gray(e.grayscale, m.width, m.height, gray);
    write_png_rgb(e.overlay, m.width, m.height, overlay);
    written.push_back(std::move(e));
  }
  return written;
}

double estimate_flops(const ModelConfig& config, int width, int height) {
  auto down = [](std::int64_t v, int stride) { return (v + stride - 1) / stride; };
  double macs = 0.0;
  // Encoder, applied to both frames.
  double encoder = 0.0;
  const auto& bc = config.backbone;
  std::int64_t h = down(height, 2), w = down(width, 2);
  encoder += static_cast<double>(h * w) * 3 * 49 * bc.widths[0];
  h = down(h, 2);
  w = down(w, 2);
  int in_c = bc.widths[0];
  std::array<std::int64_t, 4> stage_hw{};
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < bc.blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      if (stride == 2) {
        h = down(h, 2);
        w = down(w, 2);
      }
      const double p = static_cast<double>(h * w);
      const int out_c = bc.widths[s];
      encoder += p * in_c * 9 * out_c + p * out_c * 9 * out_c;
      if (stride != 1 || in_c != out_c) encoder += p * in_c * out_c;
      in_c = out_c;
    }
    stage_hw[s] = h * w;
  }
  macs += 2.0 * encoder;
  const auto& ab = config.ablation;
  const int k2 = config.cafm_kernel * config.cafm_kernel;
  for (int s = 0; s < 4; ++s) {
    const double p = static_cast<double>(stage_hw[s]);
    const int c = bc.widths[s];
    const int cin = ab.use_discrepancy_map ? 3 * c : 2 * c;
    if (ab.use_discrepancy_map) macs += p * c;  // squared difference
    if (ab.use_deformable) {
      const int src = ab.offset_source == OffsetSource::kConcatenated ? cin : c;
      macs += p * src * 9 * 2 * k2;   // offset generator
      macs += p * cin * k2 * 4;       // bilinear sampling
    }
    macs += p * cin * k2 * c;         // aggregation
    if (ab.use_msf_attention) {
      const int hidden = std::max(1, c / config.msf_reduction);
      macs += 2.0 * (c * hidden + hidden * c);                        // shared MLP, two paths
      macs += p * c;                                                  // channel gating
      macs += p * 2 * config.spatial_kernel * config.spatial_kernel;  // spatial conv
      macs += p * c;                                                  // spatial gating
    }
    macs += p * c;  // global average pool
  }
  macs += static_cast<double>(config.fused_width()) * config.head_hidden1 +
          static_cast<double>(config.head_hidden1) * config.head_hidden2 + config.head_hidden2 * 2.0;
  return 2.0 * macs;
}

ComplexityReport measure_complexity(FdimNet& model, int width, int height, int frames, double fps,
                                    const ScoreOptions& options) {
  ComplexityReport report;
  report.parameters = model->parameter_count();
  report.width = width;
  report.height = height;
  report.frames = frames;
  const std::vector<int> indices = video::sample_frames(frames, fps, options.sampling);
  synth::CorpusOptions corpus;
  corpus.width = width;
  corpus.height = height;
  corpus.frames = frames;
  corpus.fps = fps;
  const synth::DistortionRecipe recipe{synth::DistortionKind::kGaussianBlur, 3, 1};
  // Decoded frames stand in for file input, so generation is not timed.
  std::vector<std::pair<video::Frame, video::Frame>> decoded;
  for (int t : indices) {
    video::Frame ref = synth::generate_reference_frame(0, corpus, t);
    video::Frame dist = synth::apply_distortion(ref, corpus.bit_depth, recipe, t);
    decoded.emplace_back(std::move(ref), std::move(dist));
  }
  torch::NoGradGuard guard;
  model->eval();
  std::vector<double> scores, raw;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& [ref, dist] : decoded) {
    const auto r = prepare_frame(ref, corpus.bit_depth, video::SignalFormat::kSdrSrgb, options.frame);
    const auto d = prepare_frame(dist, corpus.bit_depth, video::SignalFormat::kSdrSrgb, options.frame);
    const torch::Tensor out = model->forward(to_tensor(r), to_tensor(d)).to(torch::kDouble);
    scores.push_back(out[0][0].item<double>());
    raw.push_back(out[0][1].item<double>());
  }
  aggregate_video(scores, raw);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.frames_scored = static_cast<int>(indices.size());
  report.flops_per_frame = estimate_flops(model->config(), width, height);
  report.flops = report.flops_per_frame * report.frames_scored;
  return report;
}

}  // namespace fdimq::net
