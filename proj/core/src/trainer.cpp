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

#include "aidd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aidd/dwdse.hpp"
#include "aidd/errors.hpp"
#include "aidd/parallel.hpp"
#include "aidd/transition.hpp"

namespace aidd {

namespace {

constexpr char kTrainMagic[4] = {'A', 'I', 'D', 'T'};
constexpr std::uint16_t kTrainVersion = 1;
constexpr double kEmaDecay = 0.99;
constexpr std::int64_t kMetricsInterval = 50;

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

// A sequence-local score adapter so batch items can run on worker threads
// with private tapes and gradient buffers.
class WorkerScore : public ScoreFunction {
 public:
  WorkerScore(const ScoreNet& net, NetParams& grads)
      : net_(net), grads_(grads) {}

  int vocab_size() const override { return net_.config().vocab_size; }
  void evaluate(std::span<const std::int32_t> tokens, double t,
                ScoreGrid& out) override {
    net_.forward(tokens, t, 0, tape_, out);
  }
  void accumulate_grad(std::span<const std::int32_t> tokens, double t,
                       const ScoreGrid& dscores) override {
    (void)tokens;
    (void)t;
    net_.backward(tape_, dscores, grads_);
  }

 private:
  const ScoreNet& net_;
  Tape tape_;
  NetParams& grads_;
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) raise(errc::invalid_config, "batch_size must be >= 1");
  if (sequence_length < 1) {
    raise(errc::invalid_config, "sequence_length must be >= 1");
  }
  if (!(learning_rate >= 0.0)) {
    raise(errc::invalid_config, "learning_rate must be >= 0");
  }
  if (!(weight_decay >= 0.0)) {
    raise(errc::invalid_config, "weight_decay must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    raise(errc::invalid_config, "betas must lie in [0, 1)");
  }
  if (total_steps < 1) raise(errc::invalid_config, "total_steps must be >= 1");
  if (time_samples < 1) raise(errc::invalid_config, "time_samples must be >= 1");
  if (checkpoint_interval < 1) {
    raise(errc::invalid_config, "checkpoint_interval must be >= 1");
  }
}

BatchSampler::BatchSampler(std::vector<TokenSequence> corpus,
                           const TrainConfig& config)
    : corpus_(std::move(corpus)), config_(config) {
  if (corpus_.empty()) {
    raise(errc::empty_corpus, "training corpus has no sequences");
  }
  vocab_size_ = corpus_.front().vocab_size;
  for (const auto& seq : corpus_) {
    seq.validate();
    if (seq.has_mask()) {
      raise(errc::invalid_clean_token, "corpus sequences must be MASK-free");
    }
    if (seq.vocab_size != vocab_size_) {
      raise(errc::invalid_parameter, "corpus vocab sizes disagree");
    }
    if (seq.size() < config_.sequence_length && !config_.loop_pad) {
      raise(errc::sequence_too_short,
            "sequence of " + std::to_string(seq.size()) +
                " tokens is shorter than the crop length " +
                std::to_string(config_.sequence_length) +
                " (enable loop padding to keep it)");
    }
    if (seq.size() == 0) {
      raise(errc::empty_corpus, "corpus contains an empty sequence");
    }
  }
}

std::vector<TokenSequence> BatchSampler::sample(std::uint64_t master_seed,
                                                std::int64_t step) const {
  RngStream rng = RngStream(master_seed)
                      .child("batch", static_cast<std::uint64_t>(step));
  std::vector<TokenSequence> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  const std::int64_t crop = config_.sequence_length;
  for (int b = 0; b < config_.batch_size; ++b) {
    const auto& src = corpus_[rng.uniform_below(corpus_.size())];
    TokenSequence out;
    out.vocab_size = src.vocab_size;
    out.token_rate_hz = src.token_rate_hz;
    out.ids.resize(static_cast<std::size_t>(crop));
    if (src.size() >= crop) {
      const std::int64_t max_offset = src.size() - crop;
      const std::int64_t offset = static_cast<std::int64_t>(
          rng.uniform_below(static_cast<std::uint64_t>(max_offset + 1)));
      std::copy_n(src.ids.begin() + offset, crop, out.ids.begin());
    } else {
      // Loop padding: tile the sequence from a random phase.
      const std::int64_t phase = static_cast<std::int64_t>(
          rng.uniform_below(static_cast<std::uint64_t>(src.size())));
      for (std::int64_t i = 0; i < crop; ++i) {
        out.ids[static_cast<std::size_t>(i)] =
            src.ids[static_cast<std::size_t>((phase + i) % src.size())];
      }
    }
    batch.push_back(std::move(out));
  }
  return batch;
}

StepResult train_step(ScoreNet& net, TrainState& state,
                      const std::vector<TokenSequence>& batch,
                      const NoiseSchedule& schedule, const TrainConfig& config) {
  config.validate();
  if (batch.empty()) raise(errc::empty_corpus, "empty batch");
  const int vocab = net.config().vocab_size;
  if (batch.front().vocab_size != vocab) {
    raise(errc::invalid_parameter, "batch vocab does not match the model");
  }
  if (batch.front().size() > net.config().context_length) {
    raise(errc::context_overflow, "batch sequences exceed the model context");
  }
  if (state.m.blocks.empty()) {
    state.m.setup(net.config());
    state.v.setup(net.config());
  }

  const TransitionModel model(vocab);
  const std::size_t n = batch.size();
  std::vector<NetParams> grads(n);
  std::vector<DwdseResult> results(n);
  const double grad_scale = 1.0 / static_cast<double>(n);

  parallel_for(static_cast<std::int64_t>(n), config.threads, [&](std::int64_t i) {
    grads[static_cast<std::size_t>(i)].setup(net.config());
    WorkerScore score(net, grads[static_cast<std::size_t>(i)]);
    RngStream rng = RngStream(state.seed)
                        .child("corrupt", static_cast<std::uint64_t>(state.step),
                               static_cast<std::uint64_t>(i));
    results[static_cast<std::size_t>(i)] = dwdse_loss<float>(
        batch[static_cast<std::size_t>(i)], score, schedule, model,
        config.time_samples, rng, grad_scale, config.span_corruption);
  });

  StepResult out;
  for (const auto& r : results) {
    out.loss += r.value / static_cast<double>(n);
    out.time_samples.insert(out.time_samples.end(), r.time_samples.begin(),
                            r.time_samples.end());
  }
  if (!std::isfinite(out.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << state.step << "; t samples:";
    for (double t : out.time_samples) msg << ' ' << t;
    raise(errc::numerical_failure, msg.str());
  }

  // Reduce per-sequence gradients in sequence order (thread-count invariant).
  NetParams& total = grads[0];
  auto total_refs = total.tensors();
  for (std::size_t i = 1; i < n; ++i) {
    auto refs = grads[i].tensors();
    for (std::size_t k = 0; k < refs.size(); ++k) {
      *total_refs[k].mat += *refs[k].mat;
    }
  }

  // AdamW with linear warmup on the learning rate.
  state.step += 1;
  const double warm =
      config.warmup_steps > 0
          ? std::min(1.0, static_cast<double>(state.step) /
                              static_cast<double>(config.warmup_steps))
          : 1.0;
  const double lr = config.learning_rate * warm;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  auto params = net.params().tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    float* p = params[k].mat->data();
    float* g = total_refs[k].mat->data();
    float* m = ms[k].mat->data();
    float* v = vs[k].mat->data();
    const Eigen::Index count = params[k].mat->size();
    for (Eigen::Index j = 0; j < count; ++j) {
      const double gj = static_cast<double>(g[j]);
      if (!std::isfinite(gj)) {
        raise(errc::numerical_failure,
              "non-finite gradient in " + params[k].name);
      }
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / bias1;
      const double v_hat = vj / bias2;
      const double update =
          m_hat / (std::sqrt(v_hat) + config.adam_eps) +
          config.weight_decay * static_cast<double>(p[j]);
      p[j] = static_cast<float>(static_cast<double>(p[j]) - lr * update);
    }
  }

  if (!state.loss_ema_init) {
    state.loss_ema = out.loss;
    state.loss_ema_init = true;
  } else {
    state.loss_ema = kEmaDecay * state.loss_ema + (1.0 - kEmaDecay) * out.loss;
  }
  return out;
}

void save_train_checkpoint(const std::string& path, const ScoreNet& net,
                           const TrainState& state, const TrainConfig& config,
                           const NoiseSchedule& schedule) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write train checkpoint: " + path);
  os.write(kTrainMagic, 4);
  put_raw(os, kTrainVersion);
  put_raw(os, static_cast<std::uint8_t>(schedule.kind()));
  put_raw(os, schedule.sigma_min());
  put_raw(os, schedule.sigma_max());
  put_raw(os, schedule.sigma_const());
  put_raw(os, schedule.terminal_target());
  put_raw(os, state.step);
  put_raw(os, state.seed);
  put_raw(os, state.loss_ema);
  put_raw(os, static_cast<std::uint8_t>(state.loss_ema_init ? 1 : 0));
  put_raw(os, static_cast<std::int32_t>(config.batch_size));
  put_raw(os, static_cast<std::int32_t>(config.sequence_length));
  put_raw(os, config.learning_rate);
  put_raw(os, config.weight_decay);
  put_raw(os, config.beta1);
  put_raw(os, config.beta2);
  put_raw(os, config.adam_eps);
  put_raw(os, config.warmup_steps);
  put_raw(os, config.total_steps);
  put_raw(os, config.checkpoint_interval);
  put_raw(os, config.seed);
  put_raw(os, static_cast<std::uint8_t>(config.loop_pad ? 1 : 0));
  put_raw(os, static_cast<std::uint8_t>(config.span_corruption ? 1 : 0));
  put_raw(os, static_cast<std::int32_t>(config.time_samples));

  write_model_section(os, net);

  // Moment tensors follow the model's manifest order.
  auto ms = const_cast<TrainState&>(state).m.tensors();
  auto vs = const_cast<TrainState&>(state).v.tensors();
  for (auto& ref : ms) {
    os.write(reinterpret_cast<const char*>(ref.mat->data()),
             static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
  }
  for (auto& ref : vs) {
    os.write(reinterpret_cast<const char*>(ref.mat->data()),
             static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
  }
  if (!os) raise(errc::io_error, "short write to " + path);
}

ResumedTraining resume_train_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io_error, "cannot open train checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTrainMagic, 4) != 0) {
    raise(errc::incompatible_checkpoint, "bad magic in " + path);
  }
  const auto version = get_raw<std::uint16_t>(is, "version");
  if (version != kTrainVersion) {
    raise(errc::incompatible_checkpoint,
          "unsupported trainer checkpoint version " + std::to_string(version));
  }
  const auto kind = static_cast<ScheduleKind>(get_raw<std::uint8_t>(is, "schedule kind"));
  const double sigma_min = get_raw<double>(is, "sigma min");
  const double sigma_max = get_raw<double>(is, "sigma max");
  const double sigma_const = get_raw<double>(is, "sigma const");
  const double terminal = get_raw<double>(is, "terminal survival");
  if (kind != ScheduleKind::log_linear && kind != ScheduleKind::constant) {
    raise(errc::incompatible_checkpoint, "unknown schedule kind in " + path);
  }
  const NoiseSchedule schedule =
      kind == ScheduleKind::log_linear
          ? NoiseSchedule::log_linear(sigma_min, sigma_max, terminal)
          : NoiseSchedule::constant(sigma_const);
  TrainState state;
  TrainConfig config;
  state.step = get_raw<std::int64_t>(is, "step");
  state.seed = get_raw<std::uint64_t>(is, "seed");
  state.loss_ema = get_raw<double>(is, "loss ema");
  state.loss_ema_init = get_raw<std::uint8_t>(is, "loss ema flag") != 0;
  config.batch_size = get_raw<std::int32_t>(is, "batch size");
  config.sequence_length = get_raw<std::int32_t>(is, "sequence length");
  config.learning_rate = get_raw<double>(is, "learning rate");
  config.weight_decay = get_raw<double>(is, "weight decay");
  config.beta1 = get_raw<double>(is, "beta1");
  config.beta2 = get_raw<double>(is, "beta2");
  config.adam_eps = get_raw<double>(is, "adam eps");
  config.warmup_steps = get_raw<std::int64_t>(is, "warmup steps");
  config.total_steps = get_raw<std::int64_t>(is, "total steps");
  config.checkpoint_interval = get_raw<std::int64_t>(is, "checkpoint interval");
  config.seed = get_raw<std::uint64_t>(is, "config seed");
  config.loop_pad = get_raw<std::uint8_t>(is, "loop pad") != 0;
  config.span_corruption = get_raw<std::uint8_t>(is, "span corruption") != 0;
  config.time_samples = get_raw<std::int32_t>(is, "time samples");

  ScoreNet net = read_model_section(is, "train checkpoint");
  TrainState full;
  full.step = state.step;
  full.seed = state.seed;
  full.loss_ema = state.loss_ema;
  full.loss_ema_init = state.loss_ema_init;
  full.m.setup(net.config());
  full.v.setup(net.config());
  for (auto& ref : full.m.tensors()) {
    is.read(reinterpret_cast<char*>(ref.mat->data()),
            static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
  }
  for (auto& ref : full.v.tensors()) {
    is.read(reinterpret_cast<char*>(ref.mat->data()),
            static_cast<std::streamsize>(sizeof(float) * ref.mat->size()));
  }
  if (!is) raise(errc::incompatible_checkpoint, "truncated moments in " + path);
  return {std::move(net), std::move(full), config, schedule};
}

void train_loop(ScoreNet& net, TrainState& state, const BatchSampler& sampler,
                const NoiseSchedule& schedule, const TrainConfig& config,
                const TrainLoopHooks& hooks) {
  config.validate();
  while (state.step < config.total_steps) {
    const auto batch = sampler.sample(state.seed, state.step);
    train_step(net, state, batch, schedule, config);
    if (hooks.on_metrics && state.step % kMetricsInterval == 0) {
      hooks.on_metrics(state.step, state.loss_ema);
    }
    if (hooks.on_checkpoint && (state.step % config.checkpoint_interval == 0 ||
                                state.step == config.total_steps)) {
      hooks.on_checkpoint(state.step);
    }
  }
}

}  // namespace aidd
