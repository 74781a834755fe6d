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

#include "aidd/score_net.hpp"

#include <cstring>
#include <fstream>

namespace aidd {

namespace {

constexpr char kCheckpointMagic[4] = {'A', 'I', 'D', 'D'};
constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void put_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    raise(errc::incompatible_checkpoint,
          std::string("truncated while reading ") + what);
  }
  return v;
}

}  // namespace

void write_model_section(std::ostream& os, const ScoreNet& net) {
  os.write(kCheckpointMagic, 4);
  put_raw(os, kCheckpointVersion);
  const ModelConfig& c = net.config();
  put_raw(os, static_cast<std::uint32_t>(c.vocab_size));
  put_raw(os, static_cast<std::uint32_t>(c.dim));
  put_raw(os, static_cast<std::uint32_t>(c.depth));
  put_raw(os, static_cast<std::uint32_t>(c.heads));
  put_raw(os, static_cast<std::uint32_t>(c.context_length));
  put_raw(os, static_cast<std::uint32_t>(c.time_mode));

  auto refs = const_cast<ScoreNet&>(net).params().tensors();
  put_raw(os, static_cast<std::uint32_t>(refs.size()));
  for (const auto& ref : refs) {
    put_raw(os, static_cast<std::uint16_t>(ref.name.size()));
    os.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
    put_raw(os, static_cast<std::uint32_t>(ref.mat->rows()));
    put_raw(os, static_cast<std::uint32_t>(ref.mat->cols()));
  }
  for (const auto& ref : refs) {
    os.write(reinterpret_cast<const char*>(ref.mat->data()),
             static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
  }
}

ScoreNet read_model_section(std::istream& is, const char* what) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    raise(errc::incompatible_checkpoint, std::string("bad magic in ") + what);
  }
  const auto version = get_raw<std::uint16_t>(is, "version");
  if (version != kCheckpointVersion) {
    raise(errc::incompatible_checkpoint,
          "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.vocab_size = static_cast<int>(get_raw<std::uint32_t>(is, "vocab"));
  c.dim = static_cast<int>(get_raw<std::uint32_t>(is, "dim"));
  c.depth = static_cast<int>(get_raw<std::uint32_t>(is, "depth"));
  c.heads = static_cast<int>(get_raw<std::uint32_t>(is, "heads"));
  c.context_length = static_cast<int>(get_raw<std::uint32_t>(is, "context"));
  c.time_mode =
      static_cast<TimeConditioning>(get_raw<std::uint32_t>(is, "time mode"));
  if (c.time_mode != TimeConditioning::adaln) {
    raise(errc::incompatible_checkpoint, "unknown time conditioning mode");
  }
  try {
    c.validate();
  } catch (const Error&) {
    raise(errc::incompatible_checkpoint, "invalid model config in checkpoint");
  }

  ScoreNet net(c, /*seed=*/0);
  auto refs = net.params().tensors();
  const auto count = get_raw<std::uint32_t>(is, "manifest count");
  if (count != refs.size()) {
    raise(errc::incompatible_checkpoint, "tensor manifest size mismatch");
  }
  for (const auto& ref : refs) {
    const auto name_len = get_raw<std::uint16_t>(is, "tensor name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is || name != ref.name) {
      raise(errc::incompatible_checkpoint, "tensor manifest entry mismatch");
    }
    const auto rows = get_raw<std::uint32_t>(is, "tensor rows");
    const auto cols = get_raw<std::uint32_t>(is, "tensor cols");
    if (rows != static_cast<std::uint32_t>(ref.mat->rows()) ||
        cols != static_cast<std::uint32_t>(ref.mat->cols())) {
      raise(errc::incompatible_checkpoint, "tensor shape mismatch for " + name);
    }
  }
  for (auto& ref : refs) {
    is.read(reinterpret_cast<char*>(ref.mat->data()),
            static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
    if (!is) {
      raise(errc::incompatible_checkpoint, "truncated payload at " + ref.name);
    }
  }
  if (!net.params().all_finite()) {
    raise(errc::invalid_model, std::string(what) + " contains non-finite weights");
  }
  return net;
}

void save_checkpoint(const ScoreNet& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write checkpoint: " + path);
  write_model_section(os, net);
  if (!os) raise(errc::io_error, "short write to " + path);
}

ScoreNet load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io_error, "cannot open checkpoint: " + path);
  return read_model_section(is, path.c_str());
}

}  // namespace aidd
