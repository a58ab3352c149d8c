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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdimq {

// FNV-1a, used for config and data fingerprints.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

// RFC 4180-ish: quoted fields with doubled quotes, CRLF tolerated, no
// embedded newlines.
CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::string trim(std::string_view s);

}  // namespace fdimq
