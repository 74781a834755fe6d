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

#include "aidd/errors.hpp"

namespace aidd {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::corpus_too_small: return "CorpusTooSmall";
    case errc::invalid_audio: return "InvalidAudio";
    case errc::audio_too_short: return "AudioTooShort";
    case errc::masked_token_in_decode: return "MaskedTokenInDecode";
    case errc::malformed_token_stream: return "MalformedTokenStream";
    case errc::invalid_parameter: return "InvalidParameter";
    case errc::invalid_time: return "InvalidTime";
    case errc::invalid_clean_token: return "InvalidCleanToken";
    case errc::inconsistent_corruption: return "InconsistentCorruption";
    case errc::invalid_score: return "InvalidScore";
    case errc::numerical_failure: return "NumericalFailure";
    case errc::step_too_large: return "StepTooLarge";
    case errc::invalid_config: return "InvalidConfig";
    case errc::context_overflow: return "ContextOverflow";
    case errc::incompatible_checkpoint: return "IncompatibleCheckpoint";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::sequence_too_short: return "SequenceTooShort";
    case errc::invalid_gap: return "InvalidGap";
    case errc::gap_too_wide: return "GapTooWide";
    case errc::invalid_model: return "InvalidModel";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::invalid_stats: return "InvalidStats";
    case errc::pairing_error: return "PairingError";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

error_category errc_exit_category(errc code) noexcept {
  switch (code) {
    case errc::invalid_parameter:
    case errc::invalid_config:
      return error_category::usage;
    case errc::numerical_failure:
    case errc::invalid_score:
    case errc::step_too_large:
    case errc::invalid_stats:
      return error_category::numerical;
    default:
      return error_category::data;
  }
}

}  // namespace aidd
