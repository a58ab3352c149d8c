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

#include "fdim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fdim/errors.hpp"

namespace fdimq::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Grating {
  double fx, fy, phase, speed, amplitude;
};

struct Shape {
  double cx, cy, radius, vx, vy, level;
  bool square;
};

struct ContentParams {
  double grad_angle, grad_speed, grad_amp;
  std::vector<Grating> gratings;
  std::vector<Shape> shapes;
  std::vector<double> noise_grid;  // value-noise lattice
  int grid_w, grid_h;
  double noise_amp, noise_vx, noise_vy;
  double base;
  double chroma_angle, chroma_amp_u, chroma_amp_v;
};

ContentParams draw_content(int index, const CorpusOptions& o) {
  std::mt19937_64 rng(o.seed * 1000003ull + static_cast<std::uint64_t>(index) * 7919ull + 17ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ContentParams p;
  p.grad_angle = u(rng) * kTwoPi;
  p.grad_speed = 0.5 + 2.0 * u(rng);
  p.grad_amp = 0.15 + 0.25 * u(rng);
  p.base = 0.35 + 0.3 * u(rng);
  const int n_gratings = 2 + static_cast<int>(u(rng) * 3);
  for (int i = 0; i < n_gratings; ++i) {
    const double freq = 0.02 + 0.2 * u(rng);  // cycles per pixel
    const double angle = u(rng) * std::numbers::pi;
    p.gratings.push_back({freq * std::cos(angle), freq * std::sin(angle), u(rng) * kTwoPi,
                          0.2 + u(rng), 0.03 + 0.07 * u(rng)});
  }
  const int n_shapes = 3 + static_cast<int>(u(rng) * 5);
  for (int i = 0; i < n_shapes; ++i) {
    p.shapes.push_back({u(rng) * o.width, u(rng) * o.height, 8.0 + 40.0 * u(rng),
                        (u(rng) - 0.5) * 6.0, (u(rng) - 0.5) * 6.0, (u(rng) - 0.5) * 0.5,
                        u(rng) < 0.5});
  }
  p.grid_w = o.width / 16 + 4;
  p.grid_h = o.height / 16 + 4;
  p.noise_grid.resize(static_cast<std::size_t>(p.grid_w) * p.grid_h);
  for (double& v : p.noise_grid) v = u(rng) - 0.5;
  p.noise_amp = 0.1 + 0.25 * u(rng);
  p.noise_vx = (u(rng) - 0.5) * 2.0;
  p.noise_vy = (u(rng) - 0.5) * 2.0;
  p.chroma_angle = u(rng) * kTwoPi;
  p.chroma_amp_u = 0.05 + 0.1 * u(rng);
  p.chroma_amp_v = 0.05 + 0.1 * u(rng);
  return p;
}

double value_noise(const ContentParams& p, double x, double y) {
  // Bilinear lattice interpolation with 16-pixel cells, wrapping.
  const double gx = x / 16.0;
  const double gy = y / 16.0;
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0;
  const double fy = gy - y0;
  auto at = [&](int xi, int yi) {
    xi = ((xi % p.grid_w) + p.grid_w) % p.grid_w;
    yi = ((yi % p.grid_h) + p.grid_h) % p.grid_h;
    return p.noise_grid[static_cast<std::size_t>(yi) * p.grid_w + xi];
  };
  const double sx = fx * fx * (3.0 - 2.0 * fx);
  const double sy = fy * fy * (3.0 - 2.0 * fy);
  const double top = at(x0, y0) * (1 - sx) + at(x0 + 1, y0) * sx;
  const double bottom = at(x0, y0 + 1) * (1 - sx) + at(x0 + 1, y0 + 1) * sx;
  return top * (1 - sy) + bottom * sy;
}

std::uint16_t to_code(double v, double max_code) {
  return static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, max_code));
}

video::Plane add_noise(const video::Plane& plane, double std_dev, std::mt19937_64& rng,
                       int bit_depth) {
  const double max_code = std::ldexp(1.0, bit_depth) - 1.0;
  std::normal_distribution<double> n(0.0, std_dev);
  video::Plane out = plane;
  for (auto& s : out.samples) s = to_code(s + n(rng), max_code);
  return out;
}

video::Plane block_quantize(const video::Plane& plane, double step, int block, int bit_depth) {
  const double max_code = std::ldexp(1.0, bit_depth) - 1.0;
  video::Plane out = plane;
  for (int by = 0; by < plane.height; by += block) {
    for (int bx = 0; bx < plane.width; bx += block) {
      const int ex = std::min(bx + block, plane.width);
      const int ey = std::min(by + block, plane.height);
      double mean = 0.0;
      for (int y = by; y < ey; ++y)
        for (int x = bx; x < ex; ++x) mean += plane.at(x, y);
      mean /= static_cast<double>((ex - bx) * (ey - by));
      const double half = step / 2.0;
      const double qmean = std::round(mean / half) * half;
      for (int y = by; y < ey; ++y) {
        for (int x = bx; x < ex; ++x) {
          const double r = plane.at(x, y) - mean;
          out.at(x, y) = to_code(qmean + std::round(r / step) * step, max_code);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kGaussianBlur: return "gaussian-blur";
    case DistortionKind::kAdditiveNoise: return "additive-noise";
    case DistortionKind::kBlockQuantization: return "block-quantization";
    case DistortionKind::kCombined: return "combined";
  }
  return "gaussian-blur";
}

DistortionKind parse_distortion_kind(const std::string& name) {
  if (name == "gaussian-blur" || name == "blur") return DistortionKind::kGaussianBlur;
  if (name == "additive-noise" || name == "noise") return DistortionKind::kAdditiveNoise;
  if (name == "block-quantization" || name == "quant") return DistortionKind::kBlockQuantization;
  if (name == "combined") return DistortionKind::kCombined;
  throw ConfigError("unknown distortion kind '" + name + "'");
}

std::string codec_group(DistortionKind kind) {
  return kind == DistortionKind::kGaussianBlur || kind == DistortionKind::kCombined ? "neural"
                                                                                    : "traditional";
}

SeverityParams severity(const DistortionRecipe& recipe) {
  if (recipe.level < 1 || recipe.level > 5) throw ConfigError("distortion level must be 1..5");
  static constexpr double kBlur[] = {0.6, 1.0, 1.6, 2.4, 3.6};
  static constexpr double kNoise[] = {2.0, 4.0, 7.0, 11.0, 16.0};
  static constexpr double kQuant[] = {4.0, 8.0, 16.0, 28.0, 44.0};
  const int i = recipe.level - 1;
  SeverityParams p;
  switch (recipe.kind) {
    case DistortionKind::kGaussianBlur: p.blur_sigma = kBlur[i]; break;
    case DistortionKind::kAdditiveNoise: p.noise_std = kNoise[i]; break;
    case DistortionKind::kBlockQuantization: p.quant_step = kQuant[i]; break;
    case DistortionKind::kCombined:
      p.blur_sigma = 0.7 * kBlur[i];
      p.noise_std = 0.7 * kNoise[i];
      break;
  }
  return p;
}

std::pair<double, double> pseudo_mos(const DistortionRecipe& recipe) {
  if (recipe.level < 1 || recipe.level > 5) throw ConfigError("distortion level must be 1..5");
  return {4.9 - 0.85 * (recipe.level - 1), 0.3};
}

video::Plane gaussian_blur(const video::Plane& plane, double sigma, int bit_depth) {
  if (sigma <= 0.0) return plane;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  const int w = plane.width;
  const int h = plane.height;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * plane.at(std::clamp(x + k, 0, w - 1), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  const double max_code = std::ldexp(1.0, bit_depth) - 1.0;
  video::Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      }
      out.at(x, y) = to_code(acc, max_code);
    }
  }
  return out;
}

video::Frame generate_reference_frame(int index, const CorpusOptions& o, int t) {
  if (o.width < 16 || o.height < 16 || o.frames < 1) {
    throw ConfigError("corpus geometry too small");
  }
  const ContentParams p = draw_content(index, o);
  const double max_code = std::ldexp(1.0, o.bit_depth) - 1.0;
  const double ca = std::cos(p.grad_angle);
  const double sa = std::sin(p.grad_angle);
  video::Frame f = video::make_frame(o.width, o.height, 0, 0);
  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      double v = p.base;
      const double along = (x * ca + y * sa + p.grad_speed * t) / std::max(o.width, o.height);
      v += p.grad_amp * (along - 0.5);
      for (const Grating& g : p.gratings) {
        v += g.amplitude * std::sin(kTwoPi * (g.fx * x + g.fy * y) + g.phase + g.speed * t);
      }
      v += p.noise_amp * value_noise(p, x + p.noise_vx * t, y + p.noise_vy * t);
      for (const Shape& s : p.shapes) {
        const double dx = x - (s.cx + s.vx * t);
        const double dy = y - (s.cy + s.vy * t);
        const bool inside = s.square ? std::max(std::abs(dx), std::abs(dy)) < s.radius
                                     : dx * dx + dy * dy < s.radius * s.radius;
        if (inside) v += s.level;
      }
      f.y.at(x, y) = to_code((0.05 + 0.9 * std::clamp(v, 0.0, 1.0)) * max_code, max_code);
    }
  }
  const double half = std::ldexp(1.0, o.bit_depth - 1);
  for (int y = 0; y < f.u.height; ++y) {
    for (int x = 0; x < f.u.width; ++x) {
      const double phase =
          (2.0 * x * std::cos(p.chroma_angle) + 2.0 * y * std::sin(p.chroma_angle)) /
              std::max(o.width, o.height) +
          0.02 * t;
      f.u.at(x, y) = to_code(half + p.chroma_amp_u * max_code * std::sin(kTwoPi * phase), max_code);
      f.v.at(x, y) = to_code(half + p.chroma_amp_v * max_code * std::cos(kTwoPi * phase), max_code);
    }
  }
  return f;
}

video::VideoClip generate_reference(int index, const CorpusOptions& o) {
  video::VideoClip clip;
  clip.geometry = {o.width, o.height, o.bit_depth, o.fps};
  for (int t = 0; t < o.frames; ++t) clip.frames.push_back(generate_reference_frame(index, o, t));
  return clip;
}

video::Frame apply_distortion(const video::Frame& frame, int bit_depth,
                              const DistortionRecipe& recipe, int frame_index) {
  const SeverityParams s = severity(recipe);
  const double scale = std::ldexp(1.0, bit_depth - 8);
  std::mt19937_64 rng(recipe.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(recipe.level)) ^
                      (static_cast<std::uint64_t>(frame_index) * 0xbf58476d1ce4e5b9ull));
  video::Frame f = frame;
  const int bd = bit_depth;
  if (s.blur_sigma > 0.0) {
    f.y = gaussian_blur(f.y, s.blur_sigma, bd);
    f.u = gaussian_blur(f.u, s.blur_sigma / 2.0, bd);
    f.v = gaussian_blur(f.v, s.blur_sigma / 2.0, bd);
  }
  if (s.quant_step > 0.0) {
    f.y = block_quantize(f.y, s.quant_step * scale, 8, bd);
    f.u = block_quantize(f.u, s.quant_step * scale, 4, bd);
    f.v = block_quantize(f.v, s.quant_step * scale, 4, bd);
  }
  if (s.noise_std > 0.0) {
    f.y = add_noise(f.y, s.noise_std * scale, rng, bd);
    f.u = add_noise(f.u, 0.5 * s.noise_std * scale, rng, bd);
    f.v = add_noise(f.v, 0.5 * s.noise_std * scale, rng, bd);
  }
  return f;
}

video::VideoClip apply_distortion(const video::VideoClip& clip, const DistortionRecipe& recipe) {
  video::VideoClip out = clip;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    out.frames[t] = apply_distortion(clip.frames[t], clip.geometry.bit_depth, recipe, static_cast<int>(t));
  }
  return out;
}

std::vector<ManifestRow> generate_corpus(const CorpusOptions& options,
                                         const std::filesystem::path& out_dir) {
  if (options.n_refs < 2) throw ConfigError("generate_corpus: n_refs must be >= 2");
  if (options.levels < 1 || options.levels > 5) throw ConfigError("levels must be 1..5");
  if (options.kinds.empty()) throw ConfigError("generate_corpus: no distortion kinds");
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestRow> rows;
  char name[128];
  for (int r = 0; r < options.n_refs; ++r) {
    const video::VideoClip ref = generate_reference(r, options);
    std::snprintf(name, sizeof(name), "ref_%03d.yuv", r);
    const std::filesystem::path ref_path = out_dir / name;
    video::write_raw_video(ref_path, ref);
    for (std::size_t k = 0; k < options.kinds.size(); ++k) {
      for (int level = 1; level <= options.levels; ++level) {
        DistortionRecipe recipe{options.kinds[k], level,
                                options.seed * 0x100000001b3ull + static_cast<std::uint64_t>(r) * 131ull +
                                    k * 7ull + 1ull};
        const video::VideoClip dist = apply_distortion(ref, recipe);
        std::snprintf(name, sizeof(name), "ref_%03d_%s_L%d.yuv", r, to_string(recipe.kind).c_str(),
                      level);
        const std::filesystem::path dist_path = out_dir / name;
        video::write_raw_video(dist_path, dist);
        const auto [mu, sigma] = pseudo_mos(recipe);
        ManifestRow row;
        row.ref_path = ref_path;
        row.dist_path = dist_path;
        row.geometry = ref.geometry;
        row.mos = mu;
        row.mos_std = sigma;
        row.codec = to_string(recipe.kind);
        row.codec_group = codec_group(recipe.kind);
        row.dataset = "synthetic";
        row.extra["level"] = std::to_string(level);
        rows.push_back(std::move(row));
      }
    }
  }
  write_manifest(out_dir / "manifest.csv", rows);
  return rows;
}

}  // namespace fdimq::synth
