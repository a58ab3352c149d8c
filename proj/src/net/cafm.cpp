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

#include "fdim/cafm.hpp"

#include <algorithm>

#include "fdim/errors.hpp"

namespace fdimq::net {

namespace nn = torch::nn;

namespace {

// Column buffers above this many elements are built in spatial chunks.
constexpr std::int64_t kMaxColumnElements = 24ll << 20;

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes()) {
    throw ContractError(std::string(what) + ": feature maps must have identical shapes");
  }
}

}  // namespace

torch::Tensor discrepancy_map(const torch::Tensor& f_ref, const torch::Tensor& f_dist) {
  require_same_shape(f_ref, f_dist, "discrepancy_map");
  return (f_ref - f_dist).square();
}

torch::Tensor assemble_comparison(const torch::Tensor& f_ref, const torch::Tensor& f_dist,
                                  const torch::Tensor& e) {
  require_same_shape(f_ref, f_dist, "assemble_comparison");
  if (!e.defined()) return torch::cat({f_ref, f_dist}, 1);
  require_same_shape(f_ref, e, "assemble_comparison");
  return torch::cat({f_ref, f_dist, e}, 1);
}

namespace {

// Bilinear samples for output rows [row0, row0 + offsets.size(2)) of a
// same-size deformable convolution: [N, C, K*K, rows*W].
torch::Tensor sample_rows(const torch::Tensor& input, const torch::Tensor& offsets, int kernel,
                          std::int64_t row0) {
  const std::int64_t n = input.size(0);
  const std::int64_t c = input.size(1);
  const std::int64_t h = input.size(2);
  const std::int64_t w = input.size(3);
  const std::int64_t rows = offsets.size(2);
  const std::int64_t taps = static_cast<std::int64_t>(kernel) * kernel;
  const std::int64_t m = taps * rows * w;
  const int half = kernel / 2;
  const auto opts = input.options();
  const auto dtype = input.scalar_type();

  const torch::Tensor ys = torch::arange(row0, row0 + rows, opts).view({1, rows, 1});
  const torch::Tensor xs = torch::arange(w, opts).view({1, 1, w});
  const torch::Tensor tap = torch::arange(taps, opts.dtype(torch::kLong));
  const torch::Tensor ky = (tap.div(kernel, "floor") - half).to(dtype).view({taps, 1, 1});
  const torch::Tensor kx = (tap.remainder(kernel) - half).to(dtype).view({taps, 1, 1});

  const torch::Tensor off = offsets.reshape({n, taps, 2, rows, w});
  const torch::Tensor py = off.select(2, 0) + (ys + ky).unsqueeze(0);  // [N, taps, rows, W]
  const torch::Tensor px = off.select(2, 1) + (xs + kx).unsqueeze(0);
  const torch::Tensor y0f = torch::floor(py).detach();
  const torch::Tensor x0f = torch::floor(px).detach();
  const torch::Tensor ly = py - y0f;
  const torch::Tensor lx = px - x0f;
  const torch::Tensor y0 = y0f.to(torch::kLong);
  const torch::Tensor x0 = x0f.to(torch::kLong);

  const torch::Tensor flat = input.reshape({n, c, h * w});
  torch::Tensor columns;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const torch::Tensor yi = y0 + dy;
      const torch::Tensor xi = x0 + dx;
      const torch::Tensor valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w);
      const torch::Tensor index =
          (yi.clamp(0, h - 1) * w + xi.clamp(0, w - 1)).reshape({n, 1, m});
      const torch::Tensor weight =
          ((dy ? ly : 1 - ly) * (dx ? lx : 1 - lx) * valid.to(dtype)).reshape({n, 1, m});
      const torch::Tensor term = flat.gather(2, index.expand({n, c, m})) * weight;
      columns = columns.defined() ? columns + term : term;
    }
  }
  return columns.view({n, c, taps, rows * w});
}

}  // namespace

torch::Tensor deformable_columns(const torch::Tensor& input, const torch::Tensor& offsets,
                                 int kernel) {
  return sample_rows(input, offsets, kernel, 0);
}

torch::Tensor deform_conv2d(const torch::Tensor& input, const torch::Tensor& offsets,
                            const torch::Tensor& weight, const torch::Tensor& bias) {
  if (input.dim() != 4 || weight.dim() != 4 || weight.size(2) != weight.size(3) ||
      weight.size(2) % 2 == 0) {
    throw ContractError("deform_conv2d: expected 4-d input and an odd square kernel");
  }
  const std::int64_t n = input.size(0);
  const std::int64_t c = input.size(1);
  const std::int64_t h = input.size(2);
  const std::int64_t w = input.size(3);
  const int kernel = static_cast<int>(weight.size(2));
  const std::int64_t taps = static_cast<std::int64_t>(kernel) * kernel;
  if (weight.size(1) != c) throw ContractError("deform_conv2d: weight/input channel mismatch");
  if (offsets.dim() != 4 || offsets.size(0) != n || offsets.size(1) != 2 * taps ||
      offsets.size(2) != h || offsets.size(3) != w) {
    throw ContractError("deform_conv2d: offsets must be [N, 2*K*K, H, W]");
  }
  if (!torch::isfinite(offsets).all().item<bool>()) {
    throw NumericError("deform_conv2d: non-finite offsets");
  }
  const std::int64_t c_out = weight.size(0);
  const torch::Tensor w2 = weight.reshape({c_out, c * taps});

  // Row chunks keep the column buffer bounded on large frames.
  const std::int64_t per_row = std::max<std::int64_t>(1, n * c * taps * w);
  const std::int64_t step = std::clamp<std::int64_t>(kMaxColumnElements / per_row, 1, h);
  std::vector<torch::Tensor> chunks;
  for (std::int64_t r0 = 0; r0 < h; r0 += step) {
    const std::int64_t r1 = std::min(h, r0 + step);
    const torch::Tensor cols = sample_rows(input, offsets.slice(2, r0, r1), kernel, r0);
    chunks.push_back(torch::matmul(w2, cols.reshape({n, c * taps, (r1 - r0) * w})));
  }
  torch::Tensor out = chunks.size() == 1 ? chunks[0] : torch::cat(chunks, 2);
  out = out.view({n, c_out, h, w});
  if (bias.defined()) out = out + bias.view({1, c_out, 1, 1});
  return out;
}

CafmBlockImpl::CafmBlockImpl(int channels, const AblationConfig& ablation, int kernel)
    : channels_(channels), kernel_(kernel), ablation_(ablation) {
  ablation_.validate();
  if (kernel % 2 == 0) throw ConfigError("CAFM kernel size must be odd");
  aggregate = register_module(
      "aggregate", nn::Conv2d(nn::Conv2dOptions(comparison_channels(), channels, kernel)
                                  .padding(kernel / 2)));
  if (ablation_.use_deformable) {
    offset_gen = register_module(
        "offset_gen", nn::Conv2d(nn::Conv2dOptions(offset_channels(), 2 * kernel * kernel, 3)
                                     .padding(1)));
    torch::NoGradGuard guard;
    offset_gen->weight.zero_();
    offset_gen->bias.zero_();
  }
}

int CafmBlockImpl::offset_channels() const {
  return ablation_.offset_source == OffsetSource::kConcatenated ? comparison_channels() : channels_;
}

torch::Tensor CafmBlockImpl::generate_offsets(const torch::Tensor& source) {
  if (!offset_gen) throw ContractError("generate_offsets: block was built without deformable aggregation");
  return offset_gen->forward(source);
}

CafmOutput CafmBlockImpl::forward(const torch::Tensor& f_ref, const torch::Tensor& f_dist) {
  CafmOutput out;
  if (ablation_.use_discrepancy_map) out.e = discrepancy_map(f_ref, f_dist);
  out.c = assemble_comparison(f_ref, f_dist, out.e);
  if (!ablation_.use_deformable) {
    out.h = aggregate->forward(out.c);
    return out;
  }
  const torch::Tensor* source = &f_ref;
  switch (ablation_.offset_source) {
    case OffsetSource::kReference: source = &f_ref; break;
    case OffsetSource::kDistorted: source = &f_dist; break;
    case OffsetSource::kDiscrepancy: source = &out.e; break;
    case OffsetSource::kConcatenated: source = &out.c; break;
  }
  out.offsets = generate_offsets(*source);
  out.h = deform_conv2d(out.c, out.offsets, aggregate->weight, aggregate->bias);
  return out;
}

}  // namespace fdimq::net
