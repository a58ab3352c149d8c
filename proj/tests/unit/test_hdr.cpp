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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fdim/errors.hpp"
#include "fdim/hdr.hpp"
#include "fdim/util.hpp"
#include "test_paths.hpp"

using namespace fdimq;
using namespace fdimq::hdr;

namespace {

DisplayModel dark_room(Eotf eotf, double peak = 1000.0, double black = 0.0) {
  DisplayModel m;
  m.eotf = eotf;
  m.peak = peak;
  m.black = black;
  m.ambient_lux = 0.0;
  return m;
}

}  // namespace

TEST_CASE("ambient luminance") {
  CHECK(ambient_luminance(0.005, 10.0) == doctest::Approx(0.0159155).epsilon(1e-5));
  CHECK(ambient_luminance(0.3, 0.0) == 0.0);
  CHECK(ambient_luminance(0.0, 500.0) == 0.0);
  CHECK_THROWS_AS(ambient_luminance(-0.1, 1.0), ContractError);
  CHECK_THROWS_AS(ambient_luminance(0.1, -1.0), ContractError);
}

TEST_CASE("display model validation") {
  DisplayModel m;
  CHECK_NOTHROW(m.validate());
  m.black = m.peak;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = DisplayModel{};
  m.reflectivity = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  CHECK(parse_eotf("hlg") == Eotf::kHlg);
  CHECK_THROWS_AS(parse_eotf("gamma"), ConfigError);
}

TEST_CASE("display to linear") {
  const DisplayModel srgb = dark_room(Eotf::kSrgb, 100.0, 0.1);
  CHECK(display_to_linear(0.0, srgb).value == doctest::Approx(0.1));
  CHECK(display_to_linear(1.0, srgb).value == doctest::Approx(100.0));

  const DisplayModel pq = dark_room(Eotf::kPq, 1000.0);
  CHECK(display_to_linear(pq_inverse_eotf(2000.0), pq).value == doctest::Approx(1000.0));
  CHECK(display_to_linear(pq_inverse_eotf(400.0), pq).value == doctest::Approx(400.0).epsilon(1e-9));

  const LinearResult over = display_to_linear(1.2, srgb);
  CHECK(over.clamped);
  CHECK(over.value == doctest::Approx(100.0));
  CHECK(!display_to_linear(0.5, srgb).clamped);
  CHECK_THROWS_AS(display_to_linear(std::nan(""), srgb), NumericError);

  for (Eotf e : {Eotf::kSrgb, Eotf::kPq, Eotf::kHlg}) {
    DisplayModel m = dark_room(e, 1000.0, 0.005);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = display_to_linear(i / 1000.0, m).value;
      CHECK(v >= prev);
      prev = v;
    }
    // More ambient light never lowers the displayed luminance.
    DisplayModel lit = m;
    lit.ambient_lux = 200.0;
    for (int i = 0; i <= 20; ++i) {
      CHECK(display_to_linear(i / 20.0, lit).value > display_to_linear(i / 20.0, m).value);
    }
  }
}

TEST_CASE("PQ transfer function") {
  CHECK(pq_eotf(0.0) == doctest::Approx(0.0));
  CHECK(pq_eotf(1.0) == doctest::Approx(10000.0));
  CHECK(pq_eotf(0.5) == doctest::Approx(92.2457).epsilon(1e-5));
  for (double l : {0.01, 1.0, 100.0, 1000.0, 4000.0}) {
    CHECK(pq_eotf(pq_inverse_eotf(l)) == doctest::Approx(l).epsilon(1e-9));
  }
}

TEST_CASE("PU21 anchors and inverse") {
  CHECK(pu21_encode(100.0) == doctest::Approx(256.0).epsilon(0.005));
  CHECK(std::abs(pu21_encode(0.005)) < 1e-6);
  CHECK(pu21_encode(0.0) == pu21_encode(0.005));
  CHECK(pu21_encode(1e6) == pu21_encode(10000.0));
  CHECK_THROWS_AS(pu21_encode(INFINITY), NumericError);
  CHECK_THROWS_AS(pu21_encode(std::nan("")), NumericError);

  for (Pu21Variant v : {Pu21Variant::kBanding, Pu21Variant::kBandingGlare, Pu21Variant::kPeaks,
                        Pu21Variant::kPeaksGlare}) {
    const Pu21Codec codec(v);
    double prev = -1.0;
    for (int i = 0; i <= 2000; ++i) {
      const double l = 0.005 * std::pow(2e6, i / 2000.0);
      const double e = codec.encode(l);
      CHECK(e > prev);
      prev = e;
      if (i % 50 == 25) CHECK(codec.decode(e) == doctest::Approx(l).epsilon(1e-6));
    }
  }
}

TEST_CASE("PU21 agrees with the reference table") {
  const CsvTable t = read_csv(std::string(FDIM_TEST_DATA_DIR) + "/pu21_reference.csv");
  REQUIRE(t.rows.size() == 1000u);
  double worst = 0.0;
  for (const auto& row : t.rows) {
    worst = std::max(worst, std::abs(pu21_encode(std::stod(row[0])) - std::stod(row[1])));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("HDR preprocessing") {
  DisplayModel pq = dark_room(Eotf::kPq, 1000.0, 0.0);
  video::RgbImage black(8, 4, 0.0f);
  const PreprocessResult r = hdr_preprocess(black, pq);
  const double expect = pu21_encode(0.005) / pu21_encode(1000.0);
  for (float v : r.image.data) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
  CHECK(r.clamped_samples == 0u);

  video::RgbImage brighter = black;
  brighter.at(1, 2, 3) = 0.6f;
  const PreprocessResult b = hdr_preprocess(brighter, pq);
  CHECK(b.image.at(1, 2, 3) > r.image.at(1, 2, 3));
  CHECK(b.image.at(0, 2, 3) == r.image.at(0, 2, 3));

  video::RgbImage full(6, 6, 1.0f);
  full.at(0, 0, 0) = 1.5f;
  full.at(2, 5, 5) = -0.25f;
  for (Eotf e : {Eotf::kSrgb, Eotf::kPq, Eotf::kHlg}) {
    DisplayModel m;
    m.eotf = e;
    const PreprocessResult p = hdr_preprocess(full, m);
    CHECK(p.clamped_samples == 2u);
    for (float v : p.image.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(p.image.at(1, 1, 1) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("HDR preprocessing is strictly increasing per channel") {
  for (Eotf e : {Eotf::kSrgb, Eotf::kPq, Eotf::kHlg}) {
    DisplayModel m;
    m.eotf = e;
    video::RgbImage ramp(1024, 1);
    for (int c = 0; c < 3; ++c) {
      for (int x = 0; x < 1024; ++x) ramp.at(c, 0, x) = static_cast<float>(x) / 1023.0f;
    }
    const PreprocessResult p = hdr_preprocess(ramp, m);
    for (int c = 0; c < 3; ++c) {
      for (int x = 1; x < 1024; ++x) {
        // PQ is flat once the signal exceeds the display peak.
        const bool clipped = e == Eotf::kPq && pq_eotf(ramp.at(c, 0, x - 1)) >= m.peak;
        if (clipped) {
          CHECK(p.image.at(c, 0, x) == p.image.at(c, 0, x - 1));
        } else {
          CHECK(p.image.at(c, 0, x) > p.image.at(c, 0, x - 1));
        }
      }
    }
  }
}
