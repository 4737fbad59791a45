// Copyright 2026 The usrc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "usrc/train/train_config.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

#include "usrc/dsp/audio.h"
#include "usrc/error.h"

namespace usrc::train {
namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value) {
  Fail(ErrorClass::kConfig, "bad value '" + value + "' for key '" + key + "'");
}

double ToDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) BadValue(key, v);
    return d;
  } catch (const std::logic_error&) {
    BadValue(key, v);
  }
}

long long ToInt(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) BadValue(key, v);
  return out;
}

bool ToBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  BadValue(key, v);
}

std::vector<int> ToList(const std::string& key, const std::string& v) {
  std::string s = v;
  std::erase(s, '[');
  std::erase(s, ']');
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = Trim(item);
    if (t.empty()) BadValue(key, v);
    out.push_back(static_cast<int>(ToInt(key, t)));
  }
  if (out.empty()) BadValue(key, v);
  return out;
}

}  // namespace

double TrainConfig::LearningRateAt(long long step) const {
  if (!use_scheduler) return lr;
  return lr * std::pow(scheduler_rate, static_cast<double>(step));
}

void TrainConfig::Validate() const {
  if (!(lr >= 0) || !std::isfinite(lr)) {
    Fail(ErrorClass::kConfig, "lr must be finite and >= 0");
  }
  if (batch_size < 1) Fail(ErrorClass::kConfig, "batch_size must be >= 1");
  if (total_steps < 0) Fail(ErrorClass::kConfig, "total_steps must be >= 0");
  if (checkpoint_every < 1) {
    Fail(ErrorClass::kConfig, "checkpoint_every must be >= 1");
  }
  if (!(scheduler_rate > 0 && scheduler_rate <= 1)) {
    Fail(ErrorClass::kConfig, "scheduler_rate must be in (0, 1]");
  }
  if (!(ema_decay >= 0 && ema_decay < 1)) {
    Fail(ErrorClass::kConfig, "ema_decay must be in [0, 1)");
  }
  if (crop_samples < 1) Fail(ErrorClass::kConfig, "crop_samples must be >= 1");
  weights.Validate();
  disc.Validate();
}

TrainSetup ParseTrainConfig(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = Trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorClass::kConfig,
           "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = Trim(std::string_view(t).substr(0, eq));
    const std::string value = Trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      Fail(ErrorClass::kConfig, "line " + std::to_string(lineno) + ": empty key");
    }
    if (!kv.count(key)) order.push_back(key);
    kv[key] = value;
  }

  TrainSetup s;
  if (auto it = kv.find("variant"); it != kv.end()) {
    s.codec = model::CodecConfig::Preset(it->second);
  }
  model::CodecConfig& c = s.codec;
  TrainConfig& tc = s.train;
  bool channels_changed = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"variant", [](auto&, auto&) {}},
      {"data", [&](auto&, auto& v) { s.data_dir = v; }},
      {"out", [&](auto&, auto& v) { s.out_dir = v; }},
      {"lr", [&](auto& k, auto& v) { tc.lr = ToDouble(k, v); }},
      {"beta1", [&](auto& k, auto& v) { tc.adam.beta1 = ToDouble(k, v); }},
      {"beta2", [&](auto& k, auto& v) { tc.adam.beta2 = ToDouble(k, v); }},
      {"adam_eps", [&](auto& k, auto& v) { tc.adam.eps = ToDouble(k, v); }},
      {"weight_decay",
       [&](auto& k, auto& v) { tc.adam.weight_decay = ToDouble(k, v); }},
      {"batch_size",
       [&](auto& k, auto& v) { tc.batch_size = static_cast<int>(ToInt(k, v)); }},
      {"total_steps", [&](auto& k, auto& v) { tc.total_steps = ToInt(k, v); }},
      {"seed", [&](auto& k, auto& v) {
         tc.seed = static_cast<std::uint64_t>(ToInt(k, v));
       }},
      {"use_subband", [&](auto& k, auto& v) { tc.use_subband = ToBool(k, v); }},
      {"use_discriminator",
       [&](auto& k, auto& v) { tc.use_discriminator = ToBool(k, v); }},
      {"use_scheduler",
       [&](auto& k, auto& v) { tc.use_scheduler = ToBool(k, v); }},
      {"scheduler_rate",
       [&](auto& k, auto& v) { tc.scheduler_rate = ToDouble(k, v); }},
      {"flatten_order",
       [&](auto&, auto& v) { c.quantizer.order = model::ParseFlattenOrder(v); }},
      {"checkpoint_every",
       [&](auto& k, auto& v) { tc.checkpoint_every = ToInt(k, v); }},
      {"ema_decay", [&](auto& k, auto& v) { tc.ema_decay = ToDouble(k, v); }},
      {"crop_samples", [&](auto& k, auto& v) {
         tc.crop_samples = static_cast<int>(ToInt(k, v));
       }},
      {"filter_bandwidth",
       [&](auto& k, auto& v) { tc.filter_bandwidth = ToBool(k, v); }},
      {"bandwidth_threshold_db",
       [&](auto& k, auto& v) { tc.bandwidth_threshold_db = ToDouble(k, v); }},
      {"alpha_low",
       [&](auto& k, auto& v) { tc.weights.alpha_low = ToDouble(k, v); }},
      {"alpha_high",
       [&](auto& k, auto& v) { tc.weights.alpha_high = ToDouble(k, v); }},
      {"lambda_sr",
       [&](auto& k, auto& v) { tc.weights.lambda_sr = ToDouble(k, v); }},
      {"lambda_disc",
       [&](auto& k, auto& v) { tc.weights.lambda_disc = ToDouble(k, v); }},
      {"lambda_adv",
       [&](auto& k, auto& v) { tc.weights.lambda_adv = ToDouble(k, v); }},
      {"lambda_fm",
       [&](auto& k, auto& v) { tc.weights.lambda_fm = ToDouble(k, v); }},
      {"lambda_cm",
       [&](auto& k, auto& v) { tc.weights.lambda_cm = ToDouble(k, v); }},
      {"disc_channels",
       [&](auto& k, auto& v) { tc.disc.channels = ToList(k, v); }},
      {"channels", [&](auto& k, auto& v) {
         c.encoder.channel_schedule = ToList(k, v);
         channels_changed = true;
       }},
      {"time_down", [&](auto& k, auto& v) {
         c.encoder.time_down = ToList(k, v);
         channels_changed = true;
       }},
      {"freq_down", [&](auto& k, auto& v) {
         c.encoder.freq_down = ToList(k, v);
         channels_changed = true;
       }},
      {"resblocks_per_stage", [&](auto& k, auto& v) {
         c.encoder.resblocks_per_stage = static_cast<int>(ToInt(k, v));
         channels_changed = true;
       }},
      {"groupnorm_groups", [&](auto& k, auto& v) {
         c.encoder.groupnorm_groups = static_cast<int>(ToInt(k, v));
         channels_changed = true;
       }},
      {"latent_channels", [&](auto& k, auto& v) {
         c.encoder.latent_channels = static_cast<int>(ToInt(k, v));
         channels_changed = true;
       }},
      {"codebook_size", [&](auto& k, auto& v) {
         c.quantizer.codebook_size = static_cast<int>(ToInt(k, v));
       }},
      {"sample_rate", [&](auto& k, auto& v) {
         c.spectral.sample_rate = static_cast<int>(ToInt(k, v));
       }},
      {"n_fft",
       [&](auto& k, auto& v) { c.spectral.n_fft = static_cast<int>(ToInt(k, v)); }},
      {"hop",
       [&](auto& k, auto& v) { c.spectral.hop = static_cast<int>(ToInt(k, v)); }},
      {"win_length", [&](auto& k, auto& v) {
         c.spectral.win_length = static_cast<int>(ToInt(k, v));
       }},
      {"n_mels", [&](auto& k, auto& v) {
         c.spectral.n_mels = static_cast<int>(ToInt(k, v));
       }},
      {"log_floor",
       [&](auto& k, auto& v) { c.spectral.log_floor = ToDouble(k, v); }},
  };
  for (const std::string& key : order) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      Fail(ErrorClass::kConfig, "unknown config key '" + key + "'");
    }
    it->second(key, kv[key]);
  }
  if (channels_changed) {
    c.variant = model::Variant::kCustom;
    c.decoder = model::DecoderConfig::MirrorOf(c.encoder);
  }
  c.Validate();
  tc.Validate();
  return s;
}

TrainSetup LoadTrainConfig(const std::string& path) {
  const std::vector<std::uint8_t> bytes = dsp::ReadFileBytes(path);
  return ParseTrainConfig(std::string(bytes.begin(), bytes.end()));
}

}  // namespace usrc::train
