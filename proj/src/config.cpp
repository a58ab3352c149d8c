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

#include "fdim/config.hpp"

#include <fstream>
#include <sstream>

#include "fdim/errors.hpp"
#include "fdim/util.hpp"

namespace fdimq {

std::string to_string(OffsetSource source) {
  switch (source) {
    case OffsetSource::kReference: return "reference";
    case OffsetSource::kDistorted: return "distorted";
    case OffsetSource::kDiscrepancy: return "discrepancy";
    case OffsetSource::kConcatenated: return "concatenated";
  }
  return "reference";
}

OffsetSource parse_offset_source(const std::string& name) {
  if (name == "reference") return OffsetSource::kReference;
  if (name == "distorted") return OffsetSource::kDistorted;
  if (name == "discrepancy") return OffsetSource::kDiscrepancy;
  if (name == "concatenated") return OffsetSource::kConcatenated;
  throw ConfigError("unknown offset_source '" + name + "'");
}

void AblationConfig::validate() const {
  if (offset_source == OffsetSource::kDiscrepancy && !use_discrepancy_map) {
    throw ConfigError("offset_source=discrepancy requires use_discrepancy_map=true");
  }
}

std::string to_string(CodecMix mix) {
  return mix == CodecMix::kMixed ? "mixed" : "traditional-only";
}

CodecMix parse_codec_mix(const std::string& name) {
  if (name == "mixed") return CodecMix::kMixed;
  if (name == "traditional-only") return CodecMix::kTraditionalOnly;
  throw ConfigError("unknown codec_mix '" + name + "'");
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("expected a boolean, got '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (batch_pairs < 1 || epochs < 1 || crop < 32 || pairs_per_video < 1) {
    throw ConfigError("batch_pairs, epochs, pairs_per_video must be >= 1 and crop >= 32");
  }
  if (!(flip_p >= 0.0 && flip_p <= 1.0)) throw ConfigError("flip_p must lie in [0, 1]");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
    throw ConfigError("data_fraction must lie in (0, 1]");
  }
  if (!(heterogeneous_fraction >= 0.0 && heterogeneous_fraction <= 1.0)) {
    throw ConfigError("heterogeneous_fraction must lie in [0, 1]");
  }
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (max_pairs < 0) throw ConfigError("max_pairs must be >= 0");
  ablation.validate();
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d))) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return static_cast<int>(d);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "learning_rate" || key == "lr") c.learning_rate = to_double(key, value);
  else if (key == "beta1") c.beta1 = to_double(key, value);
  else if (key == "beta2") c.beta2 = to_double(key, value);
  else if (key == "weight_decay") c.weight_decay = to_double(key, value);
  else if (key == "batch_pairs" || key == "batch") c.batch_pairs = to_int(key, value);
  else if (key == "epochs") c.epochs = to_int(key, value);
  else if (key == "crop") c.crop = to_int(key, value);
  else if (key == "flip_p") c.flip_p = to_double(key, value);
  else if (key == "frame_sampling") c.frame_sampling = value;
  else if (key == "pairs_per_video") c.pairs_per_video = to_int(key, value);
  else if (key == "data_fraction") c.data_fraction = to_double(key, value);
  else if (key == "codec_mix") c.codec_mix = parse_codec_mix(value);
  else if (key == "heterogeneous_fraction") c.heterogeneous_fraction = to_double(key, value);
  else if (key == "grad_clip_norm") c.grad_clip_norm = to_double(key, value);
  else if (key == "max_pairs") c.max_pairs = to_int(key, value);
  else if (key == "freeze_backbone") c.freeze_backbone = parse_bool(value);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "offset_source") c.ablation.offset_source = parse_offset_source(value);
  else if (key == "use_discrepancy_map") c.ablation.use_discrepancy_map = parse_bool(value);
  else if (key == "use_deformable") c.ablation.use_deformable = parse_bool(value);
  else if (key == "use_msf_attention") c.ablation.use_msf_attention = parse_bool(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_ablation_overrides(TrainConfig& config, const std::map<std::string, std::string>& kv) {
  static const char* kAllowed[] = {"offset_source",     "use_discrepancy_map", "use_deformable",
                                   "use_msf_attention", "codec_mix",           "data_fraction"};
  for (const auto& [key, value] : kv) {
    bool ok = false;
    for (const char* a : kAllowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown ablation key '" + key + "'");
    set_config_value(config, key, value);
  }
  config.validate();
}

std::map<std::string, std::string> config_entries(const TrainConfig& c) {
  return {{"learning_rate", fmt(c.learning_rate)},
          {"beta1", fmt(c.beta1)},
          {"beta2", fmt(c.beta2)},
          {"weight_decay", fmt(c.weight_decay)},
          {"batch_pairs", std::to_string(c.batch_pairs)},
          {"epochs", std::to_string(c.epochs)},
          {"crop", std::to_string(c.crop)},
          {"flip_p", fmt(c.flip_p)},
          {"frame_sampling", c.frame_sampling},
          {"pairs_per_video", std::to_string(c.pairs_per_video)},
          {"data_fraction", fmt(c.data_fraction)},
          {"codec_mix", to_string(c.codec_mix)},
          {"heterogeneous_fraction", fmt(c.heterogeneous_fraction)},
          {"grad_clip_norm", fmt(c.grad_clip_norm)},
          {"max_pairs", std::to_string(c.max_pairs)},
          {"freeze_backbone", c.freeze_backbone ? "true" : "false"},
          {"seed", std::to_string(c.seed)},
          {"offset_source", to_string(c.ablation.offset_source)},
          {"use_discrepancy_map", c.ablation.use_discrepancy_map ? "true" : "false"},
          {"use_deformable", c.ablation.use_deformable ? "true" : "false"},
          {"use_msf_attention", c.ablation.use_msf_attention ? "true" : "false"}};
}

std::string serialize_train_config(const TrainConfig& config) {
  std::ostringstream out;
  for (const auto& [k, v] : config_entries(config)) out << k << " = " << v << '\n';
  return out.str();
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  config.validate();
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string config_fingerprint(const TrainConfig& config) {
  return hex64(fnv1a64(serialize_train_config(config)));
}

}  // namespace fdimq
