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

#include "fdim/hdr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdim/errors.hpp"

namespace fdimq::hdr {

namespace {

// SMPTE ST 2084 constants.
constexpr double kPqM1 = 2610.0 / 16384.0;
constexpr double kPqM2 = 2523.0 / 4096.0 * 128.0;
constexpr double kPqC1 = 3424.0 / 4096.0;
constexpr double kPqC2 = 2413.0 / 4096.0 * 32.0;
constexpr double kPqC3 = 2392.0 / 4096.0 * 32.0;

// ARIB STD-B67 constants.
constexpr double kHlgA = 0.17883277;
constexpr double kHlgB = 0.28466892;
constexpr double kHlgC = 0.55991073;

}  // namespace

Eotf parse_eotf(const std::string& name) {
  if (name == "srgb") return Eotf::kSrgb;
  if (name == "pq") return Eotf::kPq;
  if (name == "hlg") return Eotf::kHlg;
  throw ConfigError("unknown EOTF '" + name + "' (expected srgb, pq or hlg)");
}

std::string to_string(Eotf eotf) {
  switch (eotf) {
    case Eotf::kSrgb: return "srgb";
    case Eotf::kPq: return "pq";
    case Eotf::kHlg: return "hlg";
  }
  return "srgb";
}

void DisplayModel::validate() const {
  if (!(peak > black) || black < 0.0) {
    throw ConfigError("display model needs peak > black >= 0");
  }
  if (reflectivity < 0.0 || ambient_lux < 0.0) {
    throw ConfigError("reflectivity and ambient illuminance must be non-negative");
  }
}

double ambient_luminance(double reflectivity, double ambient_lux) {
  if (reflectivity < 0.0 || ambient_lux < 0.0) {
    throw ContractError("ambient_luminance: inputs must be non-negative");
  }
  return reflectivity * ambient_lux / std::numbers::pi;
}

double srgb_eotf(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double pq_eotf(double v) {
  const double vp = std::pow(v, 1.0 / kPqM2);
  const double num = std::max(vp - kPqC1, 0.0);
  return 10000.0 * std::pow(num / (kPqC2 - kPqC3 * vp), 1.0 / kPqM1);
}

double pq_inverse_eotf(double luminance) {
  const double y = std::pow(std::clamp(luminance / 10000.0, 0.0, 1.0), kPqM1);
  return std::pow((kPqC1 + kPqC2 * y) / (1.0 + kPqC3 * y), kPqM2);
}

double hlg_eotf(double v, double peak) {
  const double scene = v <= 0.5 ? v * v / 3.0 : (std::exp((v - kHlgC) / kHlgA) + kHlgB) / 12.0;
  // Per-channel approximation of the OOTF: the system gamma is applied to each
  // component rather than to scene luminance.
  const double gamma = 1.2 + 0.42 * std::log10(peak / 1000.0);
  return std::pow(scene, gamma);
}

LinearResult display_to_linear(double encoded, const DisplayModel& model) {
  LinearResult result;
  if (!std::isfinite(encoded)) throw NumericError("display_to_linear: non-finite input");
  double v = encoded;
  if (v < 0.0 || v > 1.0) {
    v = std::clamp(v, 0.0, 1.0);
    result.clamped = true;
  }
  const double refl = ambient_luminance(model.reflectivity, model.ambient_lux);
  double emitted = 0.0;
  switch (model.eotf) {
    case Eotf::kPq:
      emitted = std::min(pq_eotf(v), model.peak);
      break;
    case Eotf::kSrgb:
      emitted = std::min((model.peak - model.black) * srgb_eotf(v) + model.black, model.peak);
      break;
    case Eotf::kHlg:
      emitted = std::min((model.peak - model.black) * hlg_eotf(v, model.peak) + model.black,
                         model.peak);
      break;
  }
  result.value = emitted + refl;
  return result;
}

Pu21Codec::Pu21Codec(Pu21Variant variant) : variant_(variant) {
  switch (variant) {
    case Pu21Variant::kBanding:
      p_ = {1.070275272, 0.4088273932, 0.153224308, 0.2520326168, 1.063512885, 1.14115047,
            521.4527484};
      break;
    case Pu21Variant::kBandingGlare:
      p_ = {0.353487901, 0.3734658629, 8.277049286e-05, 0.9062562627, 0.09150303166,
            0.9099517204, 596.3148142};
      break;
    case Pu21Variant::kPeaks:
      p_ = {1.043882782, 0.6459495343, 0.3194584211, 0.374025247, 1.114783422, 1.095360363,
            384.9217577};
      break;
    case Pu21Variant::kPeaksGlare:
      p_ = {816.885024, 1479.463946, 0.001253215609, 0.9329636822, 0.06746643971,
            1.573435413, 419.6006374};
      break;
  }
}

double Pu21Codec::encode(double luminance) const {
  if (!std::isfinite(luminance)) throw NumericError("pu21_encode: non-finite luminance");
  const double y = std::clamp(luminance, kMinLuminance, kMaxLuminance);
  const double yp = std::pow(y, p_[3]);
  const double ratio = (p_[0] + p_[1] * yp) / (1.0 + p_[2] * yp);
  return std::max(p_[6] * (std::pow(ratio, p_[4]) - p_[5]), 0.0);
}

double Pu21Codec::decode(double value) const {
  const double vp = std::pow(value / p_[6] + p_[5], 1.0 / p_[4]);
  return std::pow(std::max(vp - p_[0], 0.0) / (p_[1] - p_[2] * vp), 1.0 / p_[3]);
}

double pu21_encode(double luminance) {
  static const Pu21Codec codec;
  return codec.encode(luminance);
}

PreprocessResult hdr_preprocess(const video::RgbImage& encoded, const DisplayModel& model,
                                const Pu21Codec& codec) {
  model.validate();
  const double refl = ambient_luminance(model.reflectivity, model.ambient_lux);
  const double norm = codec.encode(model.peak + refl);
  PreprocessResult result;
  result.image = video::RgbImage(encoded.width, encoded.height);
  for (std::size_t i = 0; i < encoded.data.size(); ++i) {
    const LinearResult lin = display_to_linear(encoded.data[i], model);
    if (lin.clamped) ++result.clamped_samples;
    result.image.data[i] = static_cast<float>(std::clamp(codec.encode(lin.value) / norm, 0.0, 1.0));
  }
  return result;
}

}  // namespace fdimq::hdr
