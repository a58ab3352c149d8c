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

#include <numeric>

#include "fdim/errors.hpp"
#include "fdim/video_io.hpp"
#include "support.hpp"

using namespace fdimq;
using namespace fdimq::video;

namespace {

Frame random_frame(int w, int h, int bit_depth, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, (1 << bit_depth) - 1);
  Frame f = make_frame(w, h, 0, 0);
  for (Plane* p : {&f.y, &f.u, &f.v}) {
    for (auto& s : p->samples) s = static_cast<std::uint16_t>(dist(rng));
  }
  return f;
}

RgbImage random_rgb(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RgbImage img(w, h);
  for (auto& v : img.data) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("frame byte counts and clip length") {
  const Geometry g{1920, 1080, 8, 25.0};
  CHECK(frame_bytes(g) == 3110400u);
  CHECK(frame_bytes(Geometry{1920, 1080, 10, 25.0}) == 6220800u);
  CHECK(frame_bytes(Geometry{5, 3, 8, 25.0}) == 15u + 2u * 3u * 2u);

  testing::TempDir dir("vio");
  testing::write_zeros(dir / "one.yuv", 3110400);
  CHECK(read_raw_video(dir / "one.yuv", g).frame_count() == 1);
  testing::write_zeros(dir / "two.yuv", 6220800);
  CHECK(read_raw_video(dir / "two.yuv", g).frame_count() == 2);
  testing::write_zeros(dir / "bad.yuv", 3110401);
  CHECK_THROWS_AS(read_raw_video(dir / "bad.yuv", g), MalformedInputError);
  try {
    read_raw_video(dir / "bad.yuv", g);
  } catch (const MalformedInputError& e) {
    CHECK(std::string(e.what()).find("3110400") != std::string::npos);
  }
  CHECK_THROWS_AS(read_raw_video(dir / "one.yuv", Geometry{1920, 1080, 12, 25.0}), ConfigError);
}

TEST_CASE("pixel format names") {
  CHECK(bit_depth_from_pix_fmt("yuv420p") == 8);
  CHECK(bit_depth_from_pix_fmt("yuv420p10le") == 10);
  CHECK(pix_fmt_from_bit_depth(10) == "yuv420p10le");
  CHECK_THROWS_AS(bit_depth_from_pix_fmt("rgb24"), ConfigError);
  CHECK(parse_signal_format(to_string(SignalFormat::kHdrPq)) == SignalFormat::kHdrPq);
}

TEST_CASE("raw video write/read round trip is byte-identical") {
  std::mt19937_64 rng(3);
  testing::TempDir dir("vio");
  for (int bit_depth : {8, 10}) {
    VideoClip clip;
    clip.geometry = Geometry{37, 21, bit_depth, 25.0};
    for (int i = 0; i < 3; ++i) clip.frames.push_back(random_frame(37, 21, bit_depth, rng));
    write_raw_video(dir / "a.yuv", clip);
    const VideoClip back = read_raw_video(dir / "a.yuv", clip.geometry);
    REQUIRE(back.frame_count() == 3);
    CHECK(back.frames == clip.frames);
    write_raw_video(dir / "b.yuv", back);
    CHECK(testing::slurp(dir / "a.yuv") == testing::slurp(dir / "b.yuv"));
    CHECK(back.frames[0].u.width == 19);
    CHECK(back.frames[0].u.height == 11);

    RawVideoReader reader(dir / "a.yuv", clip.geometry);
    CHECK(reader.frame_count() == 3);
    CHECK(reader.read_frame(2) == clip.frames[2]);
    CHECK(reader.read_frame(0) == clip.frames[0]);
    CHECK_THROWS_AS(reader.read_frame(3), ContractError);
  }
}

TEST_CASE("one-per-second sampling") {
  const FrameSampleSpec spec;
  std::vector<int> expected(8);
  for (int i = 0; i < 8; ++i) expected[i] = 25 * i;
  CHECK(sample_frames(200, 25.0, spec) == expected);
  CHECK(sample_frames(25, 25.0, spec) == std::vector<int>{0});
  CHECK(sample_frames(1, 25.0, spec) == std::vector<int>{0});
  CHECK(sample_frames(26, 25.0, spec) == std::vector<int>{0, 25});

  FrameSampleSpec stride1 = parse_sample_spec("stride-1");
  CHECK(sample_frames(150, 25.0, stride1).size() == 150u);
  CHECK(sample_frames(150, 25.0, parse_sample_spec("all")).size() == 150u);
  CHECK(sample_frames(10, 25.0, parse_sample_spec("stride-4")) == std::vector<int>{0, 4, 8});
  CHECK_THROWS_AS(parse_sample_spec("sometimes"), ConfigError);
  CHECK_THROWS_AS(sample_frames(0, 25.0, spec), ContractError);
}

TEST_CASE("sampled indices are strictly increasing and in range") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 400);
    const double fps = 1.0 + static_cast<double>(rng() % 6000) / 100.0;
    for (const char* s : {"one-per-second", "all", "stride-3", "stride-7"}) {
      const auto idx = sample_frames(n, fps, parse_sample_spec(s));
      REQUIRE(!idx.empty());
      CHECK(idx.front() == 0);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        CHECK(idx[i] < n);
        if (i > 0) CHECK(idx[i] > idx[i - 1]);
      }
    }
  }
}

TEST_CASE("resampling to the reference geometry") {
  std::mt19937_64 rng(5);
  VideoClip ref, dist;
  ref.geometry = Geometry{1920, 1080, 8, 25.0};
  dist.geometry = Geometry{960, 540, 8, 25.0};
  ref.frames.push_back(make_frame(1920, 1080, 16, 128));
  dist.frames.push_back(random_frame(960, 540, 8, rng));
  const VideoClip up = resample_to_reference(dist, ref);
  CHECK(up.geometry.width == 1920);
  CHECK(up.geometry.height == 1080);
  CHECK(up.frames[0].y.width == 1920);
  CHECK(up.frames[0].u.width == 960);
  CHECK(up.frames[0].u.height == 540);

  VideoClip same;
  same.geometry = ref.geometry;
  same.frames.push_back(random_frame(1920, 1080, 8, rng));
  CHECK(resample_to_reference(same, ref).frames == same.frames);

  VideoClip two = dist;
  two.frames.push_back(dist.frames[0]);
  CHECK_THROWS_AS(resample_to_reference(two, ref), AlignmentError);
}

TEST_CASE("constant planes stay constant under resampling") {
  for (int bit_depth : {8, 10}) {
    for (std::uint16_t value : {0, 1, 77, 200}) {
      const Plane small(4, 4, value);
      const Plane big = resample_plane(small, 8, 8, bit_depth);
      CHECK(big.width == 8);
      CHECK(big == Plane(8, 8, value));
      CHECK(resample_plane(Plane(13, 7, value), 5, 11, bit_depth) == Plane(5, 11, value));
    }
  }
}

TEST_CASE("colour conversion round trip") {
  std::mt19937_64 rng(9);
  const RgbImage rgb = random_rgb(16, 12, rng);
  for (ColorMatrix m : {ColorMatrix::kBt709, ColorMatrix::kBt2020}) {
    const Frame f = rgb_to_frame(rgb, 10, m);
    const RgbImage back = frame_to_rgb(f, 10, m);
    // Chroma decimation loses detail; luma-weighted error stays small on average.
    double err = 0.0;
    for (std::size_t i = 0; i < rgb.data.size(); ++i) err += std::abs(rgb.data[i] - back.data[i]);
    CHECK(err / rgb.data.size() < 0.2);
    for (float v : back.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  // Grey survives exactly up to quantisation.
  const Frame grey = make_frame(8, 8, 512, 512);
  const RgbImage g = frame_to_rgb(grey, 10, ColorMatrix::kBt709);
  for (float v : g.data) CHECK(v == doctest::Approx(512.0 / 1023.0).epsilon(1e-6));
  const RgbImage lim = frame_to_rgb(make_frame(4, 4, 16, 128), 8, ColorMatrix::kBt709, Range::kLimited);
  for (float v : lim.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("crop and flip augmentation") {
  std::mt19937_64 rng(1);
  const RgbImage ref = random_rgb(1920, 1080, rng);
  const RgbImage dist = random_rgb(1920, 1080, rng);
  const AugmentedPair a = augment_crop_flip(ref, dist, 7);
  CHECK(a.ref.width == 512);
  CHECK(a.ref.height == 512);
  CHECK(a.dist.width == 512);
  CHECK(a.ref == apply_crop(ref, a.window));
  CHECK(a.dist == apply_crop(dist, a.window));

  const AugmentedPair b = augment_crop_flip(ref, dist, 7);
  CHECK(a.window == b.window);
  CHECK(a.ref == b.ref);
  CHECK(a.dist == b.dist);

  const AugmentedPair same = augment_crop_flip(ref, ref, 123);
  CHECK(same.ref == same.dist);

  int flips = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    std::mt19937_64 r(seed);
    const CropWindow w = draw_crop_window(1920, 1080, 512, 0.5, r);
    CHECK(w.x >= 0);
    CHECK(w.y >= 0);
    CHECK(w.x + 512 <= 1920);
    CHECK(w.y + 512 <= 1080);
    flips += w.flipped ? 1 : 0;
  }
  CHECK(flips > 140);
  CHECK(flips < 260);
}

TEST_CASE("small frames are reflection padded before cropping") {
  std::mt19937_64 rng(2);
  const RgbImage small = random_rgb(320, 256, rng);
  // Centred: (512 - 320) / 2 columns and (512 - 256) / 2 rows on each side.
  const RgbImage padded = reflect_pad(small, 512, 512);
  CHECK(padded.width == 512);
  CHECK(padded.height == 512);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 256; y += 17) {
      for (int x = 0; x < 320; x += 13) CHECK(padded.at(c, y + 128, x + 96) == small.at(c, y, x));
    }
  }
  const AugmentedPair p = augment_crop_flip(small, small, 4);
  CHECK(p.ref.width == 512);
  CHECK(p.ref == p.dist);
  CHECK_THROWS_AS(augment_crop_flip(small, random_rgb(300, 256, rng), 4), AlignmentError);
}
