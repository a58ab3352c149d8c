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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdim/video_io.hpp"

namespace fdimq {

// One row of a training/evaluation manifest:
//   ref_path,dist_path,width,height,fps,pix_fmt,mos,mos_std,codec,codec_group
// plus optional dataset/subset columns. Unknown columns are kept in `extra`.
struct ManifestRow {
  std::filesystem::path ref_path;
  std::filesystem::path dist_path;
  video::Geometry geometry;          // distorted clip geometry
  std::optional<video::Geometry> ref_geometry;  // ref_width/ref_height columns, if present
  double mos = 0.0;
  double mos_std = 0.0;
  std::string codec;
  std::string codec_group;
  std::string dataset;
  std::string subset;
  std::map<std::string, std::string> extra;

  std::string ref_id() const { return ref_path.string(); }
  std::string dist_id() const { return dist_path.string(); }
  video::Geometry reference_geometry() const { return ref_geometry.value_or(geometry); }
};

inline const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> kColumns{"ref_path", "dist_path", "width",   "height",
                                                 "fps",      "pix_fmt",   "mos",     "mos_std",
                                                 "codec",    "codec_group"};
  return kColumns;
}

// Relative paths are resolved against the manifest's directory.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

}  // namespace fdimq
