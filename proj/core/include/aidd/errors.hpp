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

#ifndef AIDD_ERRORS_HPP
#define AIDD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aidd {

enum class errc {
  // codec
  corpus_too_small,
  invalid_audio,
  audio_too_short,
  masked_token_in_decode,
  malformed_token_stream,
  invalid_parameter,
  // diffusion
  invalid_time,
  invalid_clean_token,
  inconsistent_corruption,
  invalid_score,
  numerical_failure,
  step_too_large,
  // model
  invalid_config,
  context_overflow,
  incompatible_checkpoint,
  // trainer
  empty_corpus,
  sequence_too_short,
  // inpaint
  invalid_gap,
  gap_too_wide,
  invalid_model,
  // metrics
  length_mismatch,
  dimension_mismatch,
  invalid_stats,
  pairing_error,
  // io
  io_error,
};

// Exit-code category used by the CLI: 2 usage, 3 data, 4 numerical.
enum class error_category { usage = 2, data = 3, numerical = 4 };

const char* errc_name(errc code) noexcept;
error_category errc_exit_category(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }
  error_category category() const noexcept { return errc_exit_category(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace aidd

#endif  // AIDD_ERRORS_HPP
