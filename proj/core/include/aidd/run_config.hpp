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
//
// Run configuration: a flat `key = value` text file over a fixed schema.
// Precedence (lowest to highest): profile defaults, config file, --set
// overrides. Unknown keys are rejected and every command writes its fully
// resolved configuration next to its outputs.

#ifndef AIDD_RUN_CONFIG_HPP
#define AIDD_RUN_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "aidd/inpaint.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_net.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/trainer.hpp"

namespace aidd {

class RunConfig {
 public:
  // profile: "desk" (default) or "paper" (batch 128, 1024-token sequences,
  // context 1024, learning rate 1e-6).
  explicit RunConfig(const std::string& profile = "desk");

  static RunConfig from_file(const std::string& path,
                             const std::string& profile = "desk");

  // Applies one "key=value" override (the --set flag syntax).
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  CodecParams codec_params() const;
  int codec_sample_rate() const;
  NoiseSchedule schedule() const;
  ModelConfig model_config() const;
  TrainConfig train_config(std::uint64_t seed, int threads) const;
  InpaintParams inpaint_params() const;

  // All keys with final values, sorted, in config-file syntax.
  std::string resolved() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace aidd

#endif  // AIDD_RUN_CONFIG_HPP
