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

#include <array>
#include <cstddef>
#include <string>

#include "fdim/video_io.hpp"

namespace fdimq::hdr {

enum class Eotf { kSrgb, kPq, kHlg };

Eotf parse_eotf(const std::string& name);
std::string to_string(Eotf eotf);

// Viewing conditions for converting display-encoded values to absolute light.
struct DisplayModel {
  double peak = 1000.0;        // cd/m^2
  double black = 0.005;        // cd/m^2
  double reflectivity = 0.005; // unitless
  double ambient_lux = 10.0;
  Eotf eotf = Eotf::kPq;

  void validate() const;
};

// Luminance reflected off the screen: k * E / pi.
double ambient_luminance(double reflectivity, double ambient_lux);

// Normalised transfer functions. srgb/hlg return relative light in [0, 1],
// pq returns absolute luminance in cd/m^2.
double srgb_eotf(double encoded);
double pq_eotf(double encoded);
double pq_inverse_eotf(double luminance);
double hlg_eotf(double encoded, double peak);

struct LinearResult {
  double value = 0.0;
  bool clamped = false;
};

// Encoded value in [0, 1] -> display luminance in cd/m^2 including the
// reflected ambient term. Out-of-range inputs are clamped and flagged.
LinearResult display_to_linear(double encoded, const DisplayModel& model);

// PU21 coefficient sets from the reference encoder.
enum class Pu21Variant { kBanding, kBandingGlare, kPeaks, kPeaksGlare };

class Pu21Codec {
 public:
  static constexpr double kMinLuminance = 0.005;
  static constexpr double kMaxLuminance = 10000.0;

  explicit Pu21Codec(Pu21Variant variant = Pu21Variant::kBandingGlare);

  // Luminance is clamped to [kMinLuminance, kMaxLuminance]. Throws NumericError
  // on NaN/inf.
  double encode(double luminance) const;
  double decode(double value) const;

  const std::array<double, 7>& coefficients() const { return p_; }
  Pu21Variant variant() const { return variant_; }

 private:
  Pu21Variant variant_;
  std::array<double, 7> p_;
};

double pu21_encode(double luminance);

struct PreprocessResult {
  video::RgbImage image;
  std::size_t clamped_samples = 0;
};

// display_to_linear -> PU21 -> divide by PU21(peak + L_refl), per channel.
PreprocessResult hdr_preprocess(const video::RgbImage& encoded, const DisplayModel& model,
                                const Pu21Codec& codec = Pu21Codec());

}  // namespace fdimq::hdr
