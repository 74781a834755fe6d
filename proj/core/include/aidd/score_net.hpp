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
// Concrete-score network: an encoder-only transformer with rotary position
// encoding and adaptive layer-norm time conditioning. The head emits one
// logit per clean-token candidate and scores are exp(logits), so outputs are
// strictly positive. Forward and reverse passes are hand-written; the class
// is templated on the scalar type so the same code can be checked against
// finite differences in double precision while production weights stay f32.

#ifndef AIDD_SCORE_NET_HPP
#define AIDD_SCORE_NET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "aidd/errors.hpp"
#include "aidd/rng.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_grid.hpp"

namespace aidd {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class TimeConditioning : std::uint32_t { adaln = 0 };

struct ModelConfig {
  int vocab_size = 256;
  int dim = 128;
  int depth = 4;
  int heads = 4;
  int context_length = 256;
  TimeConditioning time_mode = TimeConditioning::adaln;

  int head_dim() const { return dim / heads; }
  int mlp_dim() const { return 4 * dim; }

  void validate() const {
    if (vocab_size < 1 || dim < 2 || depth < 1 || heads < 1 ||
        context_length < 1) {
      raise(errc::invalid_config, "all model dimensions must be positive");
    }
    if (dim % heads != 0) {
      raise(errc::invalid_config, "dim must be divisible by heads");
    }
    if ((dim / heads) % 2 != 0) {
      raise(errc::invalid_config, "head dim must be even for rotary pairs");
    }
  }
  bool operator==(const ModelConfig&) const = default;
};

// All learnable tensors. Biases are stored as 1 x n matrices so every tensor
// shares one type; `tensors()` exposes a stable iteration order used by the
// optimizer, the checkpoint format, and the gradient tests.
template <typename S>
struct NetParamsT {
  MatX<S> embedding;                 // (vocab+1) x dim
  MatX<S> time_w1, time_b1;          // dim x dim, 1 x dim
  MatX<S> time_w2, time_b2;
  struct Block {
    MatX<S> w_qkv, b_qkv;            // dim x 3dim
    MatX<S> w_out, b_out;            // dim x dim
    MatX<S> w_fc1, b_fc1;            // dim x 4dim
    MatX<S> w_fc2, b_fc2;            // 4dim x dim
    MatX<S> w_mod, b_mod;            // dim x 6dim
  };
  std::vector<Block> blocks;
  MatX<S> final_w_mod, final_b_mod;  // dim x 2dim
  MatX<S> head_w, head_b;            // dim x vocab

  struct TensorRef {
    std::string name;
    MatX<S>* mat;
  };

  std::vector<TensorRef> tensors() {
    std::vector<TensorRef> out;
    out.push_back({"embedding", &embedding});
    out.push_back({"time.w1", &time_w1});
    out.push_back({"time.b1", &time_b1});
    out.push_back({"time.w2", &time_w2});
    out.push_back({"time.b2", &time_b2});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string p = "block" + std::to_string(b) + ".";
      out.push_back({p + "w_qkv", &blocks[b].w_qkv});
      out.push_back({p + "b_qkv", &blocks[b].b_qkv});
      out.push_back({p + "w_out", &blocks[b].w_out});
      out.push_back({p + "b_out", &blocks[b].b_out});
      out.push_back({p + "w_fc1", &blocks[b].w_fc1});
      out.push_back({p + "b_fc1", &blocks[b].b_fc1});
      out.push_back({p + "w_fc2", &blocks[b].w_fc2});
      out.push_back({p + "b_fc2", &blocks[b].b_fc2});
      out.push_back({p + "w_mod", &blocks[b].w_mod});
      out.push_back({p + "b_mod", &blocks[b].b_mod});
    }
    out.push_back({"final.w_mod", &final_w_mod});
    out.push_back({"final.b_mod", &final_b_mod});
    out.push_back({"head.w", &head_w});
    out.push_back({"head.b", &head_b});
    return out;
  }

  void setup(const ModelConfig& c) {
    const int d = c.dim;
    embedding.setZero(c.vocab_size + 1, d);
    time_w1.setZero(d, d);
    time_b1.setZero(1, d);
    time_w2.setZero(d, d);
    time_b2.setZero(1, d);
    blocks.resize(static_cast<std::size_t>(c.depth));
    for (auto& b : blocks) {
      b.w_qkv.setZero(d, 3 * d);
      b.b_qkv.setZero(1, 3 * d);
      b.w_out.setZero(d, d);
      b.b_out.setZero(1, d);
      b.w_fc1.setZero(d, c.mlp_dim());
      b.b_fc1.setZero(1, c.mlp_dim());
      b.w_fc2.setZero(c.mlp_dim(), d);
      b.b_fc2.setZero(1, d);
      b.w_mod.setZero(d, 6 * d);
      b.b_mod.setZero(1, 6 * d);
    }
    final_w_mod.setZero(d, 2 * d);
    final_b_mod.setZero(1, 2 * d);
    head_w.setZero(d, c.vocab_size);
    head_b.setZero(1, c.vocab_size);
  }

  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (auto& t : tensors()) n += t.mat->size();
    return n;
  }

  void set_zero() {
    for (auto& t : tensors()) t.mat->setZero();
  }

  bool all_finite() {
    for (auto& t : tensors()) {
      if (!t.mat->allFinite()) return false;
    }
    return true;
  }
};

// Activation cache for one forward pass.
template <typename S>
struct TapeT {
  std::vector<std::int32_t> tokens;
  double t = 0.0;
  std::int64_t pos_offset = 0;

  Eigen::RowVectorXd sin_emb;        // 1 x dim (input to the time MLP)
  MatX<S> time_e1, time_s1, temb, ct;  // 1 x dim each
  struct Block {
    MatX<S> h_in;                    // len x dim
    MatX<S> mod;                     // 1 x 6dim
    MatX<S> n1_hat, a_in;            // len x dim
    Eigen::VectorXd ln1_rstd;
    MatX<S> qkv;                     // len x 3dim (q,k post-rotary)
    std::vector<MatX<S>> att_prob;   // per head, len x len
    MatX<S> att_ctx;                 // len x dim (pre out-projection)
    MatX<S> att_proj;                // len x dim
    MatX<S> h_mid;                   // len x dim
    MatX<S> n2_hat, m_in;            // len x dim
    Eigen::VectorXd ln2_rstd;
    MatX<S> u, gelu_u;               // len x 4dim
    MatX<S> mlp_out;                 // len x dim
  };
  std::vector<Block> blocks;
  MatX<S> h_final, nf_hat, y;        // len x dim
  Eigen::VectorXd lnf_rstd;
  MatX<S> final_mod;                 // 1 x 2dim
  MatX<S> scores;                    // len x vocab (exp(logits))
};

namespace detail {

// All activations use Eigen array expressions so packet math (vectorized
// exp/tanh) kicks in; element-wise lambdas would fall back to scalar libm.

template <typename S>
MatX<S> gelu(const MatX<S>& u) {
  const S k = static_cast<S>(std::sqrt(2.0 / std::numbers::pi));
  const S c = static_cast<S>(0.044715);
  auto z = (k * (u.array() + c * u.array().cube())).tanh();
  return (S(0.5) * u.array() * (S(1) + z)).matrix();
}

template <typename S>
MatX<S> gelu_grad(const MatX<S>& u) {
  const S k = static_cast<S>(std::sqrt(2.0 / std::numbers::pi));
  const S c = static_cast<S>(0.044715);
  auto z = (k * (u.array() + c * u.array().cube())).tanh();
  auto sech2 = S(1) - z.square();
  return (S(0.5) * (S(1) + z) +
          S(0.5) * u.array() * sech2 * k * (S(1) + S(3) * c * u.array().square()))
      .matrix();
}

template <typename S>
MatX<S> silu(const MatX<S>& x) {
  return (x.array() * x.array().logistic()).matrix();
}

template <typename S>
MatX<S> silu_grad(const MatX<S>& x) {
  auto sig = x.array().logistic();
  return (sig * (S(1) + x.array() * (S(1) - sig))).matrix();
}

}  // namespace detail

template <typename S>
class ScoreNetT : public ScoreFunctionT<S> {
 public:
  static constexpr double kLnEps = 1e-5;
  static constexpr double kRotaryBase = 10000.0;
  static constexpr double kTimeScale = 1000.0;  // t in [0,1] -> [0,1000]

  ScoreNetT(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    params_.setup(config);
    init_params(seed);
  }

  const ModelConfig& config() const noexcept { return config_; }
  NetParamsT<S>& params() noexcept { return params_; }
  const NetParamsT<S>& params() const noexcept { return params_; }

  int vocab_size() const override { return config_.vocab_size; }

  // ScoreFunctionT interface backed by an internal tape / gradient store.
  void evaluate(std::span<const std::int32_t> tokens, double t,
                ScoreGridT<S>& out) override {
    forward(tokens, t, 0, own_tape_, out);
  }
  void accumulate_grad(std::span<const std::int32_t> tokens, double t,
                       const ScoreGridT<S>& dscores) override {
    if (own_grads_.blocks.empty()) own_grads_.setup(config_);
    backward_checked(own_tape_, tokens, t, dscores, own_grads_);
  }
  NetParamsT<S>& grads() {
    if (own_grads_.blocks.empty()) own_grads_.setup(config_);
    return own_grads_;
  }

  // Full forward pass; fills `out` (len x vocab+1, MASK column set to 1).
  // `pos_offset` shifts the rotary positions; outputs are invariant to it up
  // to floating-point error.
  void forward(std::span<const std::int32_t> tokens, double t,
               std::int64_t pos_offset, TapeT<S>& tape,
               ScoreGridT<S>& out) const;

  // Accumulates d(loss)/d(params) into `grads` for the pass recorded in
  // `tape`. `dscores` uses the grid layout; the MASK column is ignored.
  void backward(const TapeT<S>& tape, const ScoreGridT<S>& dscores,
                NetParamsT<S>& grads) const;

 private:
  void backward_checked(const TapeT<S>& tape,
                        std::span<const std::int32_t> tokens, double t,
                        const ScoreGridT<S>& dscores, NetParamsT<S>& grads) const {
    if (tape.t != t ||
        !std::equal(tape.tokens.begin(), tape.tokens.end(), tokens.begin(),
                    tokens.end())) {
      raise(errc::invalid_parameter,
            "accumulate_grad inputs do not match the last evaluate");
    }
    backward(tape, dscores, grads);
  }

  void init_params(std::uint64_t seed);
  void layer_norm(const MatX<S>& x, MatX<S>& x_hat, Eigen::VectorXd& rstd) const;
  void layer_norm_backward(const MatX<S>& x_hat, const Eigen::VectorXd& rstd,
                           const MatX<S>& dy, MatX<S>& dx) const;
  void apply_rotary(MatX<S>& qkv, std::int64_t pos_offset, bool inverse) const;

  ModelConfig config_;
  NetParamsT<S> params_;
  TapeT<S> own_tape_;
  NetParamsT<S> own_grads_;
};

using ScoreNet = ScoreNetT<float>;
using NetParams = NetParamsT<float>;
using Tape = TapeT<float>;

// Checkpoint file: magic "AIDD", version, ModelConfig, named-shape manifest,
// then a flat little-endian f32 payload. save(load(p)) is byte-identical.
void save_checkpoint(const ScoreNet& net, const std::string& path);
ScoreNet load_checkpoint(const std::string& path);

// Stream-level helpers so trainer checkpoints can embed a model section.
void write_model_section(std::ostream& os, const ScoreNet& net);
ScoreNet read_model_section(std::istream& is, const char* what);

// ---- implementation ----

template <typename S>
void ScoreNetT<S>::init_params(std::uint64_t seed) {
  RngStream rng = RngStream(seed).child("score-net-init");
  const double base_std = 0.02;
  const double resid_std = base_std / std::sqrt(2.0 * config_.depth);
  auto fill = [&](MatX<S>& m, double std_dev) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = static_cast<S>(rng.normal() * std_dev);
      }
    }
  };
  fill(params_.embedding, base_std);
  fill(params_.time_w1, base_std);
  fill(params_.time_w2, base_std);
  for (auto& b : params_.blocks) {
    fill(b.w_qkv, base_std);
    fill(b.w_fc1, base_std);
    // Residual-facing projections are scaled down with depth.
    fill(b.w_out, resid_std);
    fill(b.w_fc2, resid_std);
    // w_mod stays zero: blocks start as identity and the head starts at
    // zero, so initial scores are exactly one.
  }
}

template <typename S>
void ScoreNetT<S>::layer_norm(const MatX<S>& x, MatX<S>& x_hat,
                              Eigen::VectorXd& rstd) const {
  const Eigen::Index n = x.cols();
  x_hat.resize(x.rows(), n);
  rstd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = static_cast<double>(x.row(i).template cast<double>().mean());
    double var = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = static_cast<double>(x(i, j)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double r = 1.0 / std::sqrt(var + kLnEps);
    rstd(i) = r;
    for (Eigen::Index j = 0; j < n; ++j) {
      x_hat(i, j) = static_cast<S>((static_cast<double>(x(i, j)) - mean) * r);
    }
  }
}

template <typename S>
void ScoreNetT<S>::layer_norm_backward(const MatX<S>& x_hat,
                                       const Eigen::VectorXd& rstd,
                                       const MatX<S>& dy, MatX<S>& dx) const {
  const Eigen::Index n = x_hat.cols();
  dx.resize(x_hat.rows(), n);
  for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
    double mean_dy = 0.0;
    double mean_dy_xhat = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      mean_dy += static_cast<double>(dy(i, j));
      mean_dy_xhat += static_cast<double>(dy(i, j)) * static_cast<double>(x_hat(i, j));
    }
    mean_dy /= static_cast<double>(n);
    mean_dy_xhat /= static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      dx(i, j) = static_cast<S>(
          rstd(i) * (static_cast<double>(dy(i, j)) - mean_dy -
                     static_cast<double>(x_hat(i, j)) * mean_dy_xhat));
    }
  }
}

template <typename S>
void ScoreNetT<S>::apply_rotary(MatX<S>& qkv, std::int64_t pos_offset,
                                bool inverse) const {
  const int d = config_.dim;
  const int hd = config_.head_dim();
  const int half = hd / 2;
  std::vector<double> freq(static_cast<std::size_t>(half));
  for (int j = 0; j < half; ++j) {
    freq[static_cast<std::size_t>(j)] =
        std::pow(kRotaryBase, -2.0 * j / static_cast<double>(hd));
  }
  std::vector<S> cos_t(static_cast<std::size_t>(half));
  std::vector<S> sin_t(static_cast<std::size_t>(half));
  for (Eigen::Index i = 0; i < qkv.rows(); ++i) {
    const double pos = static_cast<double>(pos_offset + i);
    for (int j = 0; j < half; ++j) {
      const double theta = pos * freq[static_cast<std::size_t>(j)];
      cos_t[static_cast<std::size_t>(j)] = static_cast<S>(std::cos(theta));
      sin_t[static_cast<std::size_t>(j)] =
          static_cast<S>(inverse ? -std::sin(theta) : std::sin(theta));
    }
    for (int h = 0; h < config_.heads; ++h) {
      for (int section = 0; section < 2; ++section) {  // q then k
        S* base = qkv.row(i).data() + section * d + h * hd;
        for (int j = 0; j < half; ++j) {
          const S c = cos_t[static_cast<std::size_t>(j)];
          const S s = sin_t[static_cast<std::size_t>(j)];
          const S x0 = base[2 * j];
          const S x1 = base[2 * j + 1];
          base[2 * j] = x0 * c - x1 * s;
          base[2 * j + 1] = x0 * s + x1 * c;
        }
      }
    }
  }
}

template <typename S>
void ScoreNetT<S>::forward(std::span<const std::int32_t> tokens, double t,
                           std::int64_t pos_offset, TapeT<S>& tape,
                           ScoreGridT<S>& out) const {
  const std::int64_t len = static_cast<std::int64_t>(tokens.size());
  if (len < 1 || len > config_.context_length) {
    raise(errc::context_overflow,
          "sequence length " + std::to_string(len) + " outside [1, " +
              std::to_string(config_.context_length) + "]");
  }
  if (!(t >= NoiseSchedule::kTimeFloor - 1e-12 &&
        t <= NoiseSchedule::kHorizon + 1e-12)) {
    raise(errc::invalid_time, "t outside the diffusion horizon");
  }
  for (std::int32_t id : tokens) {
    if (id < 0 || id > config_.vocab_size) {
      raise(errc::invalid_parameter, "token id outside the model vocabulary");
    }
  }
  const int d = config_.dim;
  const int heads = config_.heads;
  const int hd = config_.head_dim();
  const S inv_sqrt_hd = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  tape.tokens.assign(tokens.begin(), tokens.end());
  tape.t = t;
  tape.pos_offset = pos_offset;

  // Sinusoidal time embedding -> two-layer MLP -> SiLU.
  tape.sin_emb.resize(d);
  const int half = d / 2;  // dim is even (head_dim is even)
  for (int j = 0; j < half; ++j) {
    const double freq =
        std::exp(-std::log(kRotaryBase) * static_cast<double>(j) / half);
    const double arg = t * kTimeScale * freq;
    tape.sin_emb(j) = std::cos(arg);
    tape.sin_emb(j + half) = std::sin(arg);
  }

  MatX<S> sin_s = tape.sin_emb.template cast<S>();
  tape.time_e1 = sin_s * params_.time_w1 + params_.time_b1;
  tape.time_s1 = detail::silu(tape.time_e1);
  tape.temb = tape.time_s1 * params_.time_w2 + params_.time_b2;
  tape.ct = detail::silu(tape.temb);

  MatX<S> h(len, d);
  for (std::int64_t i = 0; i < len; ++i) {
    h.row(i) = params_.embedding.row(tokens[static_cast<std::size_t>(i)]);
  }

  tape.blocks.resize(params_.blocks.size());
  for (std::size_t bi = 0; bi < params_.blocks.size(); ++bi) {
    const auto& bp = params_.blocks[bi];
    auto& bt = tape.blocks[bi];
    bt.h_in = h;
    bt.mod = tape.ct * bp.w_mod + bp.b_mod;
    const auto beta1 = bt.mod.row(0).segment(0, d);
    const auto gamma1 = bt.mod.row(0).segment(d, d);
    const auto gate1 = bt.mod.row(0).segment(2 * d, d);
    const auto beta2 = bt.mod.row(0).segment(3 * d, d);
    const auto gamma2 = bt.mod.row(0).segment(4 * d, d);
    const auto gate2 = bt.mod.row(0).segment(5 * d, d);

    layer_norm(h, bt.n1_hat, bt.ln1_rstd);
    bt.a_in.resize(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      bt.a_in.row(i) = bt.n1_hat.row(i).cwiseProduct(
                           (gamma1.array() + S(1)).matrix()) +
                       beta1;
    }

    bt.qkv = bt.a_in * bp.w_qkv;
    bt.qkv.rowwise() += bp.b_qkv.row(0);
    apply_rotary(bt.qkv, pos_offset, /*inverse=*/false);

    bt.att_prob.assign(static_cast<std::size_t>(heads), MatX<S>());
    bt.att_ctx.setZero(len, d);
    for (int hh = 0; hh < heads; ++hh) {
      const auto q = bt.qkv.middleCols(hh * hd, hd);
      const auto k = bt.qkv.middleCols(d + hh * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + hh * hd, hd);
      MatX<S> logits = (q * k.transpose()) * inv_sqrt_hd;
      auto& prob = bt.att_prob[static_cast<std::size_t>(hh)];
      prob.resize(len, len);
      for (std::int64_t i = 0; i < len; ++i) {
        const S row_max = logits.row(i).maxCoeff();
        prob.row(i) = (logits.row(i).array() - row_max).exp().matrix();
        prob.row(i) /= prob.row(i).sum();
      }
      bt.att_ctx.middleCols(hh * hd, hd) = prob * v;
    }
    bt.att_proj = bt.att_ctx * bp.w_out;
    bt.att_proj.rowwise() += bp.b_out.row(0);

    bt.h_mid = bt.h_in;
    for (std::int64_t i = 0; i < len; ++i) {
      bt.h_mid.row(i) += bt.att_proj.row(i).cwiseProduct(gate1);
    }

    layer_norm(bt.h_mid, bt.n2_hat, bt.ln2_rstd);
    bt.m_in.resize(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      bt.m_in.row(i) = bt.n2_hat.row(i).cwiseProduct(
                           (gamma2.array() + S(1)).matrix()) +
                       beta2;
    }
    bt.u = bt.m_in * bp.w_fc1;
    bt.u.rowwise() += bp.b_fc1.row(0);
    bt.gelu_u = detail::gelu(bt.u);
    bt.mlp_out = bt.gelu_u * bp.w_fc2;
    bt.mlp_out.rowwise() += bp.b_fc2.row(0);

    h = bt.h_mid;
    for (std::int64_t i = 0; i < len; ++i) {
      h.row(i) += bt.mlp_out.row(i).cwiseProduct(gate2);
    }
  }

  tape.h_final = h;
  tape.final_mod = tape.ct * params_.final_w_mod + params_.final_b_mod;
  const auto beta_f = tape.final_mod.row(0).segment(0, d);
  const auto gamma_f = tape.final_mod.row(0).segment(d, d);
  layer_norm(tape.h_final, tape.nf_hat, tape.lnf_rstd);
  tape.y.resize(len, d);
  for (std::int64_t i = 0; i < len; ++i) {
    tape.y.row(i) = tape.nf_hat.row(i).cwiseProduct(
                        (gamma_f.array() + S(1)).matrix()) +
                    beta_f;
  }
  MatX<S> logits = tape.y * params_.head_w;
  logits.rowwise() += params_.head_b.row(0);
  tape.scores = logits.array().exp().matrix();
  if (!tape.scores.allFinite()) {
    raise(errc::numerical_failure, "non-finite scores in forward pass");
  }

  out.reset(len, config_.vocab_size);
  for (std::int64_t i = 0; i < len; ++i) {
    for (int c = 0; c < config_.vocab_size; ++c) {
      out.at(i, c) = tape.scores(i, c);
    }
    out.at(i, config_.vocab_size) = S(1);  // MASK candidate: defined, unused
  }
}

template <typename S>
void ScoreNetT<S>::backward(const TapeT<S>& tape, const ScoreGridT<S>& dscores,
                            NetParamsT<S>& grads) const {
  const std::int64_t len = static_cast<std::int64_t>(tape.tokens.size());
  if (dscores.len != len || dscores.vocab_size != config_.vocab_size) {
    raise(errc::invalid_parameter, "dscores shape mismatch");
  }
  if (grads.blocks.empty()) grads.setup(config_);
  const int d = config_.dim;
  const int heads = config_.heads;
  const int hd = config_.head_dim();
  const S inv_sqrt_hd = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  // Head: scores = exp(logits).
  MatX<S> dlogits(len, config_.vocab_size);
  for (std::int64_t i = 0; i < len; ++i) {
    for (int c = 0; c < config_.vocab_size; ++c) {
      dlogits(i, c) = dscores.at(i, c) * tape.scores(i, c);
    }
  }
  grads.head_w += tape.y.transpose() * dlogits;
  grads.head_b += dlogits.colwise().sum();
  MatX<S> dy = dlogits * params_.head_w.transpose();

  // Final adaptive layer norm.
  MatX<S> dmod_final = MatX<S>::Zero(1, 2 * d);
  const auto gamma_f = tape.final_mod.row(0).segment(d, d);
  {
    auto dbeta_f = dmod_final.row(0).segment(0, d);
    auto dgamma_f = dmod_final.row(0).segment(d, d);
    for (std::int64_t i = 0; i < len; ++i) {
      dbeta_f += dy.row(i);
      dgamma_f += dy.row(i).cwiseProduct(tape.nf_hat.row(i));
    }
  }
  MatX<S> dnf(len, d);
  for (std::int64_t i = 0; i < len; ++i) {
    dnf.row(i) = dy.row(i).cwiseProduct((gamma_f.array() + S(1)).matrix());
  }
  MatX<S> dh;
  layer_norm_backward(tape.nf_hat, tape.lnf_rstd, dnf, dh);

  grads.final_w_mod += tape.ct.transpose() * dmod_final;
  grads.final_b_mod += dmod_final;
  MatX<S> dct = dmod_final * params_.final_w_mod.transpose();

  for (std::size_t bi = params_.blocks.size(); bi-- > 0;) {
    const auto& bp = params_.blocks[bi];
    const auto& bt = tape.blocks[bi];
    const auto gamma1 = bt.mod.row(0).segment(d, d);
    const auto gate1 = bt.mod.row(0).segment(2 * d, d);
    const auto gamma2 = bt.mod.row(0).segment(4 * d, d);
    const auto gate2 = bt.mod.row(0).segment(5 * d, d);
    MatX<S> dmod = MatX<S>::Zero(1, 6 * d);
    auto dbeta1 = dmod.row(0).segment(0, d);
    auto dgamma1 = dmod.row(0).segment(d, d);
    auto dgate1 = dmod.row(0).segment(2 * d, d);
    auto dbeta2 = dmod.row(0).segment(3 * d, d);
    auto dgamma2 = dmod.row(0).segment(4 * d, d);
    auto dgate2 = dmod.row(0).segment(5 * d, d);

    // h_out = h_mid + gate2 .* mlp_out
    MatX<S> dh_mid = dh;
    MatX<S> dmlp(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      dgate2 += dh.row(i).cwiseProduct(bt.mlp_out.row(i));
      dmlp.row(i) = dh.row(i).cwiseProduct(gate2);
    }

    // MLP
    grads.blocks[bi].w_fc2 += bt.gelu_u.transpose() * dmlp;
    grads.blocks[bi].b_fc2 += dmlp.colwise().sum();
    MatX<S> dgelu = dmlp * bp.w_fc2.transpose();
    MatX<S> du =
        (dgelu.array() * detail::gelu_grad(bt.u).array()).matrix();
    grads.blocks[bi].w_fc1 += bt.m_in.transpose() * du;
    grads.blocks[bi].b_fc1 += du.colwise().sum();
    MatX<S> dm_in = du * bp.w_fc1.transpose();

    // Second adaptive layer norm.
    MatX<S> dn2(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      dbeta2 += dm_in.row(i);
      dgamma2 += dm_in.row(i).cwiseProduct(bt.n2_hat.row(i));
      dn2.row(i) = dm_in.row(i).cwiseProduct((gamma2.array() + S(1)).matrix());
    }
    MatX<S> dh_mid_ln;
    layer_norm_backward(bt.n2_hat, bt.ln2_rstd, dn2, dh_mid_ln);
    dh_mid += dh_mid_ln;

    // h_mid = h_in + gate1 .* att_proj
    MatX<S> dh_in = dh_mid;
    MatX<S> datt_proj(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      dgate1 += dh_mid.row(i).cwiseProduct(bt.att_proj.row(i));
      datt_proj.row(i) = dh_mid.row(i).cwiseProduct(gate1);
    }

    grads.blocks[bi].w_out += bt.att_ctx.transpose() * datt_proj;
    grads.blocks[bi].b_out += datt_proj.colwise().sum();
    MatX<S> datt_ctx = datt_proj * bp.w_out.transpose();

    // Attention.
    MatX<S> dqkv = MatX<S>::Zero(len, 3 * d);
    for (int hh = 0; hh < heads; ++hh) {
      const auto q = bt.qkv.middleCols(hh * hd, hd);
      const auto k = bt.qkv.middleCols(d + hh * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + hh * hd, hd);
      const auto& prob = bt.att_prob[static_cast<std::size_t>(hh)];
      const auto dctx = datt_ctx.middleCols(hh * hd, hd);

      dqkv.middleCols(2 * d + hh * hd, hd) = prob.transpose() * dctx;
      MatX<S> dprob = dctx * v.transpose();
      MatX<S> datt_logits(len, len);
      for (std::int64_t i = 0; i < len; ++i) {
        const S dot = dprob.row(i).cwiseProduct(prob.row(i)).sum();
        datt_logits.row(i) = prob.row(i).cwiseProduct(
            (dprob.row(i).array() - dot).matrix());
      }
      datt_logits *= inv_sqrt_hd;
      dqkv.middleCols(hh * hd, hd) = datt_logits * k;
      dqkv.middleCols(d + hh * hd, hd) = datt_logits.transpose() * q;
    }
    // Undo the rotation on the q/k gradient sections.
    apply_rotary(dqkv, tape.pos_offset, /*inverse=*/true);

    grads.blocks[bi].w_qkv += bt.a_in.transpose() * dqkv;
    grads.blocks[bi].b_qkv += dqkv.colwise().sum();
    MatX<S> da_in = dqkv * bp.w_qkv.transpose();

    // First adaptive layer norm.
    MatX<S> dn1(len, d);
    for (std::int64_t i = 0; i < len; ++i) {
      dbeta1 += da_in.row(i);
      dgamma1 += da_in.row(i).cwiseProduct(bt.n1_hat.row(i));
      dn1.row(i) = da_in.row(i).cwiseProduct((gamma1.array() + S(1)).matrix());
    }
    MatX<S> dh_in_ln;
    layer_norm_backward(bt.n1_hat, bt.ln1_rstd, dn1, dh_in_ln);
    dh_in += dh_in_ln;

    // Modulation projection.
    grads.blocks[bi].w_mod += tape.ct.transpose() * dmod;
    grads.blocks[bi].b_mod += dmod;
    dct += dmod * bp.w_mod.transpose();

    dh = std::move(dh_in);
  }

  // Embedding scatter.
  for (std::int64_t i = 0; i < len; ++i) {
    grads.embedding.row(tape.tokens[static_cast<std::size_t>(i)]) += dh.row(i);
  }

  // Time MLP.
  MatX<S> dtemb =
      (dct.array() * detail::silu_grad(tape.temb).array()).matrix();
  grads.time_w2 += tape.time_s1.transpose() * dtemb;
  grads.time_b2 += dtemb;
  MatX<S> ds1 = dtemb * params_.time_w2.transpose();
  MatX<S> de1 =
      (ds1.array() * detail::silu_grad(tape.time_e1).array()).matrix();
  MatX<S> sin_s = tape.sin_emb.template cast<S>();
  grads.time_w1 += sin_s.transpose() * de1;
  grads.time_b1 += de1;
}

}  // namespace aidd

#endif  // AIDD_SCORE_NET_HPP
