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
// aidd: token-diffusion audio inpainting toolchain.
//
// Subcommands: train-codec, encode, decode, train, corrupt, inpaint, eval,
// embed. All randomness flows from --seed through counter-based stream
// splitting, so every command is deterministic given (inputs, config, seed).
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "aidd/errors.hpp"
#include "aidd/inpaint.hpp"
#include "aidd/metrics.hpp"
#include "aidd/run_config.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/trainer.hpp"
#include "aidd/waveform.hpp"

namespace fs = std::filesystem;
using namespace aidd;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string profile = "desk";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run-config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--profile", opts.profile, "config profile: desk or paper");
  cmd->add_option("--set", opts.overrides,
                  "config override key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "master random seed");
  cmd->add_option("--threads", opts.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config = opts.config_path.empty()
                         ? RunConfig(opts.profile)
                         : RunConfig::from_file(opts.config_path, opts.profile);
  for (const auto& assignment : opts.overrides) config.set(assignment);
  return config;
}

// The resolved configuration is written next to each command's primary
// output (<file>.config, or resolved.config inside output directories).
void write_resolved(const RunConfig& config, const CommonOpts& opts,
                    const std::string& primary_output, bool is_dir) {
  const fs::path path = is_dir ? fs::path(primary_output) / "resolved.config"
                               : fs::path(primary_output + ".config");
  std::ofstream os(path, std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write " + path.string());
  os << "# resolved configuration\n";
  os << "seed = " << opts.seed << "\n";
  os << "threads = " << opts.threads << "\n";
  os << config.resolved();
}

std::vector<std::string> sorted_files(const std::string& dir,
                                      const std::string& extension) {
  if (!fs::is_directory(dir)) {
    raise(errc::io_error, "not a directory: " + dir);
  }
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_train_codec(const CommonOpts& opts, const std::string& corpus_dir,
                    const std::string& out_path) {
  const RunConfig config = resolve_config(opts);
  const auto wavs = sorted_files(corpus_dir, ".wav");
  if (wavs.empty()) {
    raise(errc::corpus_too_small, "no .wav files in " + corpus_dir);
  }
  std::vector<Waveform> corpus;
  corpus.reserve(wavs.size());
  for (const auto& path : wavs) corpus.push_back(read_wav(path));
  const CodecSpec codec =
      train_codebook(corpus, config.codec_params(), opts.seed, opts.threads);
  save_codec(codec, out_path);
  write_resolved(config, opts, out_path, /*is_dir=*/false);
  std::cout << "trained codec on " << corpus.size() << " files -> " << out_path
            << "\n";
  return 0;
}

int cmd_encode(const std::string& codec_path, const std::string& in_path,
               const std::string& out_path) {
  const CodecSpec codec = load_codec(codec_path);
  const TokenSequence tokens = encode(read_wav(in_path), codec);
  export_tokens(tokens, out_path);
  std::cout << "encoded " << tokens.size() << " tokens -> " << out_path << "\n";
  return 0;
}

int cmd_decode(const std::string& codec_path, const std::string& in_path,
               const std::string& out_path) {
  const CodecSpec codec = load_codec(codec_path);
  const Waveform w = decode(import_tokens(in_path), codec);
  write_wav(out_path, w);
  std::cout << "decoded " << w.size() << " samples -> " << out_path << "\n";
  return 0;
}

std::vector<TokenSequence> load_token_corpus(const std::string& corpus_dir,
                                             const std::string& codec_path) {
  const auto tok_files = sorted_files(corpus_dir, ".tok");
  std::vector<TokenSequence> corpus;
  if (!tok_files.empty()) {
    for (const auto& path : tok_files) corpus.push_back(import_tokens(path));
    return corpus;
  }
  const auto wavs = sorted_files(corpus_dir, ".wav");
  if (wavs.empty()) {
    raise(errc::empty_corpus,
          "no .tok or .wav files in corpus dir " + corpus_dir);
  }
  if (codec_path.empty()) {
    raise(errc::invalid_parameter,
          "--codec is required for a .wav corpus");
  }
  const CodecSpec codec = load_codec(codec_path);
  for (const auto& path : wavs) {
    corpus.push_back(encode(read_wav(path), codec));
  }
  return corpus;
}

int cmd_train(const CommonOpts& opts, const std::string& corpus_dir,
              const std::string& codec_path, const std::string& out_dir,
              const std::string& resume_path) {
  fs::create_directories(out_dir);
  const auto corpus = load_token_corpus(corpus_dir, codec_path);

  RunConfig run = resolve_config(opts);
  TrainConfig tconfig = run.train_config(opts.seed, opts.threads);
  NoiseSchedule schedule = run.schedule();

  std::unique_ptr<ScoreNet> net;
  TrainState state;
  if (resume_path.empty()) {
    ModelConfig mconfig = run.model_config();
    mconfig.vocab_size = corpus.front().vocab_size;
    net = std::make_unique<ScoreNet>(mconfig, opts.seed);
    state.seed = tconfig.seed;
  } else {
    auto resumed = resume_train_checkpoint(resume_path);
    net = std::make_unique<ScoreNet>(std::move(resumed.net));
    state = std::move(resumed.state);
    tconfig = resumed.config;
    tconfig.threads = opts.threads;
    schedule = resumed.schedule;
  }

  BatchSampler sampler(corpus, tconfig);
  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  const bool append = !resume_path.empty() && fs::exists(metrics_path);
  std::ofstream metrics(metrics_path,
                        append ? std::ios::app : std::ios::trunc);
  if (!metrics) raise(errc::io_error, "cannot write " + metrics_path);
  if (!append) metrics << "step,loss_ema,wall_time_s\n";
  const auto t0 = std::chrono::steady_clock::now();

  TrainLoopHooks hooks;
  hooks.on_metrics = [&](std::int64_t step, double ema) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    metrics << step << ',' << ema << ',' << wall << "\n";
    metrics.flush();
  };
  std::int64_t last_saved = -1;
  hooks.on_checkpoint = [&](std::int64_t step) {
    if (step == last_saved) return;
    last_saved = step;
    const std::string tag = std::to_string(step);
    save_checkpoint(*net, (fs::path(out_dir) / ("model_step" + tag + ".aidd")).string());
    save_train_checkpoint(
        (fs::path(out_dir) / ("state_step" + tag + ".aidt")).string(), *net,
        state, tconfig, schedule);
  };

  train_loop(*net, state, sampler, schedule, tconfig, hooks);

  save_checkpoint(*net, (fs::path(out_dir) / "model_final.aidd").string());
  save_train_checkpoint((fs::path(out_dir) / "state_final.aidt").string(),
                        *net, state, tconfig, schedule);
  write_resolved(run, opts, out_dir, /*is_dir=*/true);
  std::cout << "trained to step " << state.step << ", loss EMA "
            << state.loss_ema << " -> " << out_dir << "\n";
  return 0;
}

int cmd_corrupt(const CommonOpts& opts, const std::string& in_path,
                double gap_ms, int n_gaps, const std::string& out_path,
                const std::string& gapspec_path) {
  const RunConfig config = resolve_config(opts);
  const Waveform w = read_wav(in_path);
  const CorruptionResult result = make_corrupted(w, gap_ms, n_gaps);
  write_wav(out_path, result.corrupted);
  save_gapspec(result.gaps, gapspec_path);
  write_resolved(config, opts, out_path, /*is_dir=*/false);
  std::cout << "corrupted " << n_gaps << " gaps of " << gap_ms << " ms -> "
            << out_path << "\n";
  return 0;
}

int cmd_inpaint(const CommonOpts& opts, const std::string& in_path,
                const std::string& gapspec_path, const std::string& codec_path,
                const std::string& model_path, int steps,
                const std::string& out_path) {
  RunConfig config = resolve_config(opts);
  if (steps > 0) config.set("inpaint.steps", std::to_string(steps));
  const Waveform w = read_wav(in_path);
  const GapSpec gaps = load_gapspec(gapspec_path);
  const CodecSpec codec = load_codec(codec_path);
  ScoreNet net = load_checkpoint(model_path);
  const InpaintResult result = inpaint(w, gaps, codec, net, config.schedule(),
                                       config.inpaint_params(), opts.seed);
  write_wav(out_path, result.output);
  write_resolved(config, opts, out_path, /*is_dir=*/false);
  std::cout << "inpainted " << gaps.gaps.size() << " gaps -> " << out_path
            << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& clean_dir,
             const std::string& restored_dir, const std::string& gaps_csv,
             const std::string& out_csv, const std::string& embeddings_dir) {
  const RunConfig config = resolve_config(opts);
  std::vector<int> gap_list;
  std::stringstream ss(gaps_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) gap_list.push_back(std::stoi(item));
  }
  if (gap_list.empty()) {
    raise(errc::invalid_parameter, "--gaps must list at least one gap length");
  }
  ProtocolOptions options;
  options.embeddings_dir = embeddings_dir;
  const auto rows = evaluate_protocol(clean_dir, restored_dir, gap_list, options);
  std::ofstream os(out_csv, std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write " + out_csv);
  os << protocol_csv(rows);
  write_resolved(config, opts, out_csv, /*is_dir=*/false);
  std::cout << protocol_csv(rows);
  return 0;
}

int cmd_embed(const std::string& in_path, const std::string& out_path) {
  const Waveform w = read_wav(in_path);
  export_embeddings(embed(w), out_path, in_path);
  std::cout << "embedded -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"token-diffusion audio inpainting toolchain"};
  app.require_subcommand(1);

  CommonOpts opts;

  // train-codec
  auto* train_codec = app.add_subcommand("train-codec", "fit a codec codebook");
  std::string corpus_dir, out_path;
  train_codec->add_option("--corpus", corpus_dir, "directory of .wav files")
      ->required();
  train_codec->add_option("--out", out_path, "output codec file")->required();
  add_common(train_codec, opts);

  // encode / decode
  auto* enc = app.add_subcommand("encode", "waveform -> token stream");
  std::string enc_codec, enc_in, enc_out;
  enc->add_option("--codec", enc_codec)->required()->check(CLI::ExistingFile);
  enc->add_option("--in", enc_in)->required()->check(CLI::ExistingFile);
  enc->add_option("--out", enc_out)->required();

  auto* dec = app.add_subcommand("decode", "token stream -> waveform");
  std::string dec_codec, dec_in, dec_out;
  dec->add_option("--codec", dec_codec)->required()->check(CLI::ExistingFile);
  dec->add_option("--in", dec_in)->required()->check(CLI::ExistingFile);
  dec->add_option("--out", dec_out)->required();

  // train
  auto* train = app.add_subcommand("train", "train the score model");
  std::string train_corpus, train_codec_path, train_out, resume_path;
  train->add_option("--corpus", train_corpus, "directory of .tok or .wav files")
      ->required();
  train->add_option("--codec", train_codec_path, "codec for .wav corpora");
  train->add_option("--out-dir", train_out)->required();
  train->add_option("--resume", resume_path, "trainer checkpoint to resume")
      ->check(CLI::ExistingFile);
  add_common(train, opts);

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "silence evenly spaced gaps");
  std::string cor_in, cor_out, cor_spec;
  double cor_gap_ms = 300.0;
  int cor_n = 4;
  corrupt_cmd->add_option("--in", cor_in)->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--gap-ms", cor_gap_ms)->required();
  corrupt_cmd->add_option("--n-gaps", cor_n)->required();
  corrupt_cmd->add_option("--out", cor_out)->required();
  corrupt_cmd->add_option("--gapspec", cor_spec, "output gap JSON")->required();
  add_common(corrupt_cmd, opts);

  // inpaint
  auto* inp = app.add_subcommand("inpaint", "restore gaps by reverse diffusion");
  std::string inp_in, inp_spec, inp_codec, inp_model, inp_out;
  int inp_steps = 0;
  inp->add_option("--in", inp_in)->required()->check(CLI::ExistingFile);
  inp->add_option("--gapspec", inp_spec)->required()->check(CLI::ExistingFile);
  inp->add_option("--codec", inp_codec)->required()->check(CLI::ExistingFile);
  inp->add_option("--model", inp_model)->required()->check(CLI::ExistingFile);
  inp->add_option("--steps", inp_steps, "reverse steps (overrides config)");
  inp->add_option("--out", inp_out)->required();
  add_common(inp, opts);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "gap-length evaluation table");
  std::string eval_clean, eval_restored, eval_gaps, eval_out, eval_embeddings;
  eval_cmd->add_option("--clean", eval_clean)->required();
  eval_cmd->add_option("--restored", eval_restored)->required();
  eval_cmd->add_option("--gaps", eval_gaps, "comma-separated gap lengths (ms)")
      ->required();
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--embeddings", eval_embeddings,
                       "directory of precomputed .emb files");
  add_common(eval_cmd, opts);

  // embed
  auto* emb = app.add_subcommand("embed", "export audio embeddings");
  std::string emb_in, emb_out;
  emb->add_option("--in", emb_in)->required()->check(CLI::ExistingFile);
  emb->add_option("--out", emb_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (train_codec->parsed()) return cmd_train_codec(opts, corpus_dir, out_path);
    if (enc->parsed()) return cmd_encode(enc_codec, enc_in, enc_out);
    if (dec->parsed()) return cmd_decode(dec_codec, dec_in, dec_out);
    if (train->parsed()) {
      return cmd_train(opts, train_corpus, train_codec_path, train_out,
                       resume_path);
    }
    if (corrupt_cmd->parsed()) {
      return cmd_corrupt(opts, cor_in, cor_gap_ms, cor_n, cor_out, cor_spec);
    }
    if (inp->parsed()) {
      return cmd_inpaint(opts, inp_in, inp_spec, inp_codec, inp_model,
                         inp_steps, inp_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(opts, eval_clean, eval_restored, eval_gaps, eval_out,
                      eval_embeddings);
    }
    if (emb->parsed()) return cmd_embed(emb_in, emb_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
