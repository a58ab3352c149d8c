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

#include "fdim/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "fdim/errors.hpp"

namespace fdimq::net {

namespace {

constexpr char kMagic[8] = {'F', 'D', 'I', 'M', 'W', 0, 0, 0};

static_assert(std::endian::native == std::endian::little,
              "weight files are written in native little-endian order");

struct RawHeader {
  nlohmann::json json;
  std::uint64_t data_start = 0;
};

RawHeader read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header_bytes = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_bytes), sizeof(header_bytes));
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw MalformedInputError(path.string() + ": not an FDIM weight file");
  }
  if (version != kWeightFormatVersion) {
    throw MalformedInputError(path.string() + ": unsupported weight format version " +
                              std::to_string(version) + " (expected " +
                              std::to_string(kWeightFormatVersion) + ")");
  }
  if (header_bytes > (64u << 20)) throw MalformedInputError(path.string() + ": header too large");
  std::string text(header_bytes, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_bytes));
  if (!in) throw MalformedInputError(path.string() + ": truncated header");
  RawHeader h;
  try {
    h.json = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(path.string() + ": bad header: " + e.what());
  }
  h.data_start = 8 + sizeof(version) + sizeof(header_bytes) + header_bytes;
  return h;
}

std::map<std::string, torch::Tensor> named_state(FdimNet& model) {
  std::map<std::string, torch::Tensor> state;
  for (const auto& p : model->named_parameters()) state[p.key()] = p.value();
  for (const auto& b : model->named_buffers()) state[b.key()] = b.value();
  return state;
}

Checkpoint info_from_header(const nlohmann::json& j) {
  Checkpoint info;
  info.config = ModelConfig::from_json(j.at("model"));
  info.metadata = j.value("metadata", nlohmann::json::object());
  if (j.contains("calibration") && !j["calibration"].is_null()) {
    info.calibration = calib::Calibration::from_json(j["calibration"]);
  }
  return info;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, FdimNet& model, const Checkpoint& info) {
  nlohmann::json header;
  header["model"] = info.config.to_json();
  header["metadata"] = info.metadata;
  header["calibration"] = info.calibration ? info.calibration->to_json() : nlohmann::json(nullptr);
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<torch::Tensor> payload;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : named_state(model)) {
    torch::Tensor c = t.detach().contiguous();
    std::string dtype;
    if (c.scalar_type() == torch::kLong) {
      dtype = "i64";
    } else {
      c = c.to(torch::kFloat32);
      dtype = "f32";
    }
    const std::uint64_t bytes = c.numel() * c.element_size();
    tensors.push_back({{"name", name}, {"dtype", dtype}, {"shape", c.sizes().vec()},
                       {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
    payload.push_back(c);
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint32_t version = kWeightFormatVersion;
  const std::uint64_t header_bytes = text.size();
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&header_bytes), sizeof(header_bytes));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& c : payload) {
    out.write(static_cast<const char*>(c.data_ptr()),
              static_cast<std::streamsize>(c.numel() * c.element_size()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  return info_from_header(read_header(in, path).json);
}

std::vector<std::string> load_state(FdimNet& model, const std::filesystem::path& path,
                                    bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  const RawHeader h = read_header(in, path);
  std::map<std::string, nlohmann::json> entries;
  for (const auto& t : h.json.at("tensors")) entries[t.at("name").get<std::string>()] = t;

  torch::NoGradGuard guard;
  std::vector<std::string> missing;
  for (auto& [name, target] : named_state(model)) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      missing.push_back(name);
      continue;
    }
    const auto& e = it->second;
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    if (shape != target.sizes().vec()) {
      throw MalformedInputError(path.string() + ": shape mismatch for " + name);
    }
    const std::string dtype = e.at("dtype").get<std::string>();
    const auto scalar = dtype == "i64" ? torch::kLong : torch::kFloat32;
    torch::Tensor buffer = torch::empty(shape, torch::TensorOptions().dtype(scalar));
    const std::uint64_t bytes = e.at("bytes").get<std::uint64_t>();
    if (bytes != static_cast<std::uint64_t>(buffer.numel() * buffer.element_size())) {
      throw MalformedInputError(path.string() + ": byte count mismatch for " + name);
    }
    in.seekg(static_cast<std::streamoff>(h.data_start + e.at("offset").get<std::uint64_t>()));
    in.read(static_cast<char*>(buffer.data_ptr()), static_cast<std::streamsize>(bytes));
    if (!in) throw MalformedInputError(path.string() + ": truncated tensor data for " + name);
    target.copy_(buffer.to(target.scalar_type()));
  }
  if (strict && !missing.empty()) {
    throw MalformedInputError(path.string() + ": missing tensor " + missing.front() + " (" +
                              std::to_string(missing.size()) + " missing)");
  }
  return missing;
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  LoadedModel loaded;
  loaded.info = read_checkpoint_info(path);
  loaded.model = FdimNet(loaded.info.config);
  load_state(loaded.model, path, /*strict=*/true);
  loaded.model->eval();
  return loaded;
}

}  // namespace fdimq::net
