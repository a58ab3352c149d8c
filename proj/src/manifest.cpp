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

#include "fdim/manifest.hpp"

#include <set>

#include "fdim/errors.hpp"
#include "fdim/util.hpp"

namespace fdimq {

namespace {

double parse_number(const std::string& text, const std::string& column, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw MalformedInputError("manifest row " + std::to_string(row + 1) + ": bad " + column +
                              " value '" + text + "'");
  }
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  for (const auto& col : manifest_columns()) csv.require_column(col);
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() || base.empty() ? fp : base / fp;
  };
  static const std::set<std::string> kKnown{"ref_path", "dist_path", "width",      "height",
                                            "fps",      "pix_fmt",   "mos",        "mos_std",
                                            "codec",    "codec_group", "dataset",  "subset",
                                            "ref_width", "ref_height"};
  std::vector<ManifestRow> rows;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& fields = csv.rows[r];
    auto get = [&](const char* name) { return fields[csv.require_column(name)]; };
    ManifestRow row;
    row.ref_path = resolve(get("ref_path"));
    row.dist_path = resolve(get("dist_path"));
    row.geometry.width = static_cast<int>(parse_number(get("width"), "width", r));
    row.geometry.height = static_cast<int>(parse_number(get("height"), "height", r));
    row.geometry.fps = parse_number(get("fps"), "fps", r);
    row.geometry.bit_depth = video::bit_depth_from_pix_fmt(get("pix_fmt"));
    row.mos = parse_number(get("mos"), "mos", r);
    row.mos_std = parse_number(get("mos_std"), "mos_std", r);
    if (row.mos_std < 0.0) {
      throw MalformedInputError("manifest row " + std::to_string(r + 1) + ": negative mos_std");
    }
    row.codec = get("codec");
    row.codec_group = get("codec_group");
    if (auto c = csv.column("dataset")) row.dataset = fields[*c];
    if (auto c = csv.column("subset")) row.subset = fields[*c];
    if (auto cw = csv.column("ref_width"), ch = csv.column("ref_height"); cw && ch &&
                                                                           !fields[*cw].empty()) {
      video::Geometry g = row.geometry;
      g.width = static_cast<int>(parse_number(fields[*cw], "ref_width", r));
      g.height = static_cast<int>(parse_number(fields[*ch], "ref_height", r));
      row.ref_geometry = g;
    }
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
      if (!kKnown.count(csv.header[c])) row.extra[csv.header[c]] = fields[c];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  CsvTable table;
  table.header = manifest_columns();
  table.header.push_back("dataset");
  table.header.push_back("subset");
  std::set<std::string> extra;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.extra) extra.insert(k);
  }
  table.header.insert(table.header.end(), extra.begin(), extra.end());
  const std::filesystem::path base = path.parent_path();
  auto relative = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.string();
    std::error_code ec;
    auto rel = std::filesystem::relative(p, base, ec);
    return ec || rel.empty() ? p.string() : rel.string();
  };
  for (const auto& r : rows) {
    std::vector<std::string> f{relative(r.ref_path),
                               relative(r.dist_path),
                               std::to_string(r.geometry.width),
                               std::to_string(r.geometry.height),
                               format_number(r.geometry.fps),
                               video::pix_fmt_from_bit_depth(r.geometry.bit_depth),
                               format_number(r.mos),
                               format_number(r.mos_std),
                               r.codec,
                               r.codec_group,
                               r.dataset,
                               r.subset};
    for (const auto& k : extra) {
      auto it = r.extra.find(k);
      f.push_back(it == r.extra.end() ? "" : it->second);
    }
    table.rows.push_back(std::move(f));
  }
  write_csv(path, table);
}

}  // namespace fdimq
