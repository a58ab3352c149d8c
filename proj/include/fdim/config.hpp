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
#include <map>
#include <string>

namespace fdimq {

enum class OffsetSource { kReference, kDistorted, kDiscrepancy, kConcatenated };

std::string to_string(OffsetSource source);
OffsetSource parse_offset_source(const std::string& name);

// Architecture switches for the ablation variants. Defaults build the full model.
struct AblationConfig {
  OffsetSource offset_source = OffsetSource::kReference;
  bool use_discrepancy_map = true;
  bool use_deformable = true;
  bool use_msf_attention = true;

  void validate() const;
  bool operator==(const AblationConfig&) const = default;
};

enum class CodecMix { kMixed, kTraditionalOnly };

std::string to_string(CodecMix mix);
CodecMix parse_codec_mix(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 5e-4;
  int batch_pairs = 8;
  int epochs = 1;
  int crop = 512;
  double flip_p = 0.5;
  std::string frame_sampling = "one-per-second";
  int pairs_per_video = 20;
  double data_fraction = 1.0;
  CodecMix codec_mix = CodecMix::kMixed;
  double heterogeneous_fraction = 0.5;  // share of pairs drawn across references
  double grad_clip_norm = 5.0;
  int max_pairs = 0;                    // 0 = no cap
  bool freeze_backbone = false;
  std::uint64_t seed = 0;
  AblationConfig ablation;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Applies one override. Keys are the TrainConfig field names plus the ablation
// keys (offset_source, use_discrepancy_map, use_deformable, use_msf_attention).
// Unknown keys raise ConfigError.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

// Ablation-only overrides: offset_source, use_discrepancy_map, use_deformable,
// use_msf_attention, codec_mix, data_fraction.
void apply_ablation_overrides(TrainConfig& config, const std::map<std::string, std::string>& kv);

// Flat "key = value" text, one entry per line, '#' comments.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string serialize_train_config(const TrainConfig& config);
std::map<std::string, std::string> config_entries(const TrainConfig& config);

// Stable hash of the serialised config.
std::string config_fingerprint(const TrainConfig& config);

bool parse_bool(const std::string& text);

}  // namespace fdimq
