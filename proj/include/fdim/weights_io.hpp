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
#include <optional>
#include <string>

#include <json.hpp>

#include "fdim/calibration.hpp"
#include "fdim/model.hpp"

namespace fdimq::net {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

// Layout: "FDIMW\0\0\0" | u32 version | u64 header bytes | JSON header |
// raw little-endian tensor data. The header lists every tensor's name,
// dtype, shape and byte offset plus model config and free-form metadata.
struct Checkpoint {
  ModelConfig config;
  nlohmann::json metadata = nlohmann::json::object();  // train config, fingerprint, ...
  std::optional<calib::Calibration> calibration;
};

void save_checkpoint(const std::filesystem::path& path, FdimNet& model, const Checkpoint& info);

struct LoadedModel {
  FdimNet model{nullptr};
  Checkpoint info;
};

// Rebuilds the model from the header; every parameter and buffer must be
// present with a matching shape.
LoadedModel load_checkpoint(const std::filesystem::path& path);

// Header only; no tensors are materialised.
Checkpoint read_checkpoint_info(const std::filesystem::path& path);

// Loads matching tensors into an existing model; returns names that were not found.
std::vector<std::string> load_state(FdimNet& model, const std::filesystem::path& path,
                                    bool strict);

}  // namespace fdimq::net
