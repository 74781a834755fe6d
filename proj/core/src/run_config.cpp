// Copyright 2026 The AIDD Authors
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

#include "aidd/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "aidd/errors.hpp"

namespace aidd {

namespace {

const std::map<std::string, std::string> kDeskDefaults = {
    {"codec.sample_rate", "16000"},
    {"codec.frame_length", "1024"},
    {"codec.hop_length", "256"},
    {"codec.codebook_size", "256"},
    {"schedule.kind", "log_linear"},
    {"schedule.sigma_min", "0.001"},
    {"schedule.sigma_max", "7.0"},
    {"schedule.sigma_const", "6.907755278982137"},
    {"schedule.terminal_survival", "0.001"},
    {"model.dim", "128"},
    {"model.depth", "4"},
    {"model.heads", "4"},
    {"model.context_length", "256"},
    {"train.batch_size", "16"},
    {"train.sequence_length", "256"},
    {"train.learning_rate", "0.0003"},
    {"train.weight_decay", "0.01"},
    {"train.beta1", "0.9"},
    {"train.beta2", "0.999"},
    {"train.warmup_steps", "1000"},
    {"train.total_steps", "10000"},
    {"train.checkpoint_interval", "1000"},
    {"train.loop_pad", "false"},
    {"train.span_corruption", "false"},
    {"train.time_samples", "1"},
    {"inpaint.steps", "128"},
    {"inpaint.context_tokens", "256"},
    {"inpaint.crossfade_ms", "10"},
    {"metrics.stft_window", "2048"},
    {"metrics.stft_hop", "512"},
};

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

RunConfig::RunConfig(const std::string& profile) {
  values_ = kDeskDefaults;
  if (profile == "desk") {
    // defaults as-is
  } else if (profile == "paper") {
    values_["train.batch_size"] = "128";
    values_["train.sequence_length"] = "1024";
    values_["train.learning_rate"] = "1e-6";
    values_["train.warmup_steps"] = "0";
    values_["train.total_steps"] = "400000";
    values_["model.context_length"] = "1024";
    values_["inpaint.context_tokens"] = "1024";
  } else {
    raise(errc::invalid_config, "unknown profile '" + profile + "'");
  }
}

RunConfig RunConfig::from_file(const std::string& path,
                               const std::string& profile) {
  std::ifstream is(path);
  if (!is) raise(errc::io_error, "cannot open config file: " + path);
  RunConfig config(profile);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      raise(errc::invalid_config, path + ":" + std::to_string(line_no) +
                                      ": expected 'key = value'");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void RunConfig::set(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    raise(errc::invalid_config,
          "override '" + assignment + "' must look like key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    raise(errc::invalid_config, "unknown config key '" + key + "'");
  }
  if (value.empty()) {
    raise(errc::invalid_config, "empty value for config key '" + key + "'");
  }
  it->second = value;
}

std::string RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    raise(errc::invalid_config, "unknown config key '" + key + "'");
  }
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    raise(errc::invalid_config, "config key '" + key + "' is not a number: " + v);
  }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    raise(errc::invalid_config, "config key '" + key + "' is not an integer: " + v);
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  raise(errc::invalid_config, "config key '" + key + "' is not a boolean: " + v);
}

CodecParams RunConfig::codec_params() const {
  CodecParams p;
  p.frame_length = static_cast<int>(get_int("codec.frame_length"));
  p.hop_length = static_cast<int>(get_int("codec.hop_length"));
  p.codebook_size = static_cast<int>(get_int("codec.codebook_size"));
  return p;
}

int RunConfig::codec_sample_rate() const {
  return static_cast<int>(get_int("codec.sample_rate"));
}

NoiseSchedule RunConfig::schedule() const {
  const std::string kind = get("schedule.kind");
  if (kind == "log_linear") {
    return NoiseSchedule::log_linear(get_double("schedule.sigma_min"),
                                     get_double("schedule.sigma_max"),
                                     get_double("schedule.terminal_survival"));
  }
  if (kind == "constant") {
    return NoiseSchedule::constant(get_double("schedule.sigma_const"));
  }
  raise(errc::invalid_config, "schedule.kind must be log_linear or constant");
}

ModelConfig RunConfig::model_config() const {
  ModelConfig c;
  c.vocab_size = static_cast<int>(get_int("codec.codebook_size"));
  c.dim = static_cast<int>(get_int("model.dim"));
  c.depth = static_cast<int>(get_int("model.depth"));
  c.heads = static_cast<int>(get_int("model.heads"));
  c.context_length = static_cast<int>(get_int("model.context_length"));
  c.validate();
  return c;
}

TrainConfig RunConfig::train_config(std::uint64_t seed, int threads) const {
  TrainConfig t;
  t.batch_size = static_cast<int>(get_int("train.batch_size"));
  t.sequence_length = static_cast<int>(get_int("train.sequence_length"));
  t.learning_rate = get_double("train.learning_rate");
  t.weight_decay = get_double("train.weight_decay");
  t.beta1 = get_double("train.beta1");
  t.beta2 = get_double("train.beta2");
  t.warmup_steps = get_int("train.warmup_steps");
  t.total_steps = get_int("train.total_steps");
  t.checkpoint_interval = get_int("train.checkpoint_interval");
  t.loop_pad = get_bool("train.loop_pad");
  t.span_corruption = get_bool("train.span_corruption");
  t.time_samples = static_cast<int>(get_int("train.time_samples"));
  t.seed = seed;
  t.threads = threads;
  t.validate();
  return t;
}

InpaintParams RunConfig::inpaint_params() const {
  InpaintParams p;
  p.steps = static_cast<int>(get_int("inpaint.steps"));
  p.context_tokens = static_cast<int>(get_int("inpaint.context_tokens"));
  p.crossfade_ms = get_double("inpaint.crossfade_ms");
  return p;
}

std::string RunConfig::resolved() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) {
    os << key << " = " << value << "\n";
  }
  return os.str();
}

}  // namespace aidd
