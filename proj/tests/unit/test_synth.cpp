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
#include <set>

#include "fdim/errors.hpp"
#include "fdim/manifest.hpp"
#include "fdim/synth.hpp"
#include "support.hpp"

using namespace fdimq;
using namespace fdimq::synth;

namespace {

CorpusOptions small_corpus() {
  CorpusOptions o;
  o.width = 64;
  o.height = 48;
  o.frames = 3;
  return o;
}

// Energy of the discrete Laplacian over the luma plane.
double laplacian_energy(const video::Plane& p) {
  double e = 0.0;
  for (int y = 1; y + 1 < p.height; ++y) {
    for (int x = 1; x + 1 < p.width; ++x) {
      const double l = 4.0 * p.at(x, y) - p.at(x - 1, y) - p.at(x + 1, y) - p.at(x, y - 1) -
                       p.at(x, y + 1);
      e += l * l;
    }
  }
  return e;
}

double mse(const video::Plane& a, const video::Plane& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - b.samples[i];
    s += d * d;
  }
  return s / static_cast<double>(a.samples.size());
}

}  // namespace

TEST_CASE("severity tables and pseudo-MOS") {
  for (DistortionKind k : {DistortionKind::kGaussianBlur, DistortionKind::kAdditiveNoise,
                           DistortionKind::kBlockQuantization, DistortionKind::kCombined}) {
    CHECK(parse_distortion_kind(to_string(k)) == k);
    for (int level = 1; level < 5; ++level) {
      const SeverityParams a = severity({k, level, 0});
      const SeverityParams b = severity({k, level + 1, 0});
      CHECK(a.blur_sigma <= b.blur_sigma);
      CHECK(a.noise_std <= b.noise_std);
      CHECK(a.quant_step <= b.quant_step);
      CHECK((a.blur_sigma < b.blur_sigma || a.noise_std < b.noise_std || a.quant_step < b.quant_step));
      CHECK(pseudo_mos({k, level, 0}).first > pseudo_mos({k, level + 1, 0}).first);
    }
    for (int level = 1; level <= 5; ++level) {
      const auto [mu, sigma] = pseudo_mos({k, level, 0});
      CHECK(mu > 1.0);
      CHECK(mu <= 5.0);
      CHECK(sigma == 0.3);
    }
    CHECK(pseudo_mos({k, 1, 0}).first >= 4.8);
  }
  CHECK(codec_group(DistortionKind::kGaussianBlur) == "neural");
  CHECK(codec_group(DistortionKind::kBlockQuantization) == "traditional");
  CHECK_THROWS_AS(severity({DistortionKind::kAdditiveNoise, 6, 0}), ConfigError);
  CHECK_THROWS_AS(parse_distortion_kind("smear"), ConfigError);
}

TEST_CASE("corpus layout and manifest") {
  testing::TempDir dir("synth");
  const CorpusOptions o = small_corpus();
  const auto rows = generate_corpus(o, dir.path());
  CHECK(rows.size() == 40u);
  std::set<std::string> refs, dists;
  for (const auto& r : rows) {
    refs.insert(r.ref_path.string());
    dists.insert(r.dist_path.string());
    CHECK(std::filesystem::exists(r.dist_path));
    CHECK(r.geometry.width == 64);
    CHECK(r.mos_std == 0.3);
    CHECK(r.dataset == "synthetic");
    CHECK(r.extra.count("level") == 1u);
  }
  CHECK(refs.size() == 4u);
  CHECK(dists.size() == 40u);
  const auto back = read_manifest(dir / "manifest.csv");
  REQUIRE(back.size() == rows.size());
  CHECK(back[0].dist_path == rows[0].dist_path);
  CHECK(back[7].mos == rows[7].mos);

  CorpusOptions one = o;
  one.n_refs = 1;
  CHECK_THROWS_AS(generate_corpus(one, dir / "x"), ConfigError);
}

TEST_CASE("corpus regeneration is byte-identical") {
  testing::TempDir a("synth"), b("synth");
  CorpusOptions o = small_corpus();
  o.n_refs = 2;
  o.kinds = {DistortionKind::kBlockQuantization, DistortionKind::kCombined,
             DistortionKind::kAdditiveNoise};
  generate_corpus(o, a.path());
  generate_corpus(o, b.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    const auto other = b.path() / e.path().filename();
    REQUIRE(std::filesystem::exists(other));
    if (e.path().extension() == ".yuv") {
      CHECK(testing::slurp(e.path()) == testing::slurp(other));
      ++files;
    }
  }
  CHECK(files == 2u + 2u * 3u * 5u);

  o.seed = 1;
  testing::TempDir c("synth");
  generate_corpus(o, c.path());
  CHECK(testing::slurp(a / "ref_000_additive-noise_L3.yuv") !=
        testing::slurp(c / "ref_000_additive-noise_L3.yuv"));
}

TEST_CASE("distortion strength follows the level") {
  CorpusOptions o = small_corpus();
  o.width = 128;
  o.height = 96;
  for (int index = 0; index < 4; ++index) {
    const video::VideoClip ref = generate_reference(index, o);
    CHECK(ref.frame_count() == 3);
    std::vector<double> blur_energy, noise_err, quant_err;
    for (int level = 1; level <= 5; ++level) {
      blur_energy.push_back(laplacian_energy(
          apply_distortion(ref, {DistortionKind::kGaussianBlur, level, 0}).frames[1].y));
      noise_err.push_back(
          mse(apply_distortion(ref, {DistortionKind::kAdditiveNoise, level, 0}).frames[1].y,
              ref.frames[1].y));
      quant_err.push_back(
          mse(apply_distortion(ref, {DistortionKind::kBlockQuantization, level, 0}).frames[1].y,
              ref.frames[1].y));
    }
    CHECK(blur_energy[4] < blur_energy[0]);
    CHECK(blur_energy[0] < laplacian_energy(ref.frames[1].y));
    for (int i = 0; i < 4; ++i) {
      CHECK(blur_energy[i + 1] < blur_energy[i]);
      CHECK(noise_err[i + 1] > noise_err[i]);
      CHECK(quant_err[i + 1] > quant_err[i]);
    }
  }
  // Different content indices give different pictures.
  CHECK(!(generate_reference_frame(0, o, 0) == generate_reference_frame(1, o, 0)));
  // Content moves over time.
  CHECK(!(generate_reference_frame(2, o, 0) == generate_reference_frame(2, o, 1)));
}

TEST_CASE("gaussian blur keeps constants and mean") {
  const video::Plane flat(20, 10, 321);
  CHECK(gaussian_blur(flat, 2.0, 10) == flat);
  video::Plane spike(31, 31, 0);
  spike.at(15, 15) = 1000;
  const video::Plane b = gaussian_blur(spike, 1.5, 10);
  double sum = 0.0;
  for (auto s : b.samples) sum += s;
  CHECK(sum == doctest::Approx(1000.0).epsilon(0.02));
  CHECK(b.at(15, 15) < 1000);
  CHECK(b.at(14, 15) == b.at(16, 15));
}
