// Copyright 2026 The seqrl Authors
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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "seqrl/corpus.hpp"
#include "seqrl/tensor.hpp"

namespace seqrl {

struct ModelConfig {
  int32_t src_vocab_size = 0;
  int32_t tgt_vocab_size = 0;
  int32_t embed_dim = 0;
  int32_t hidden_dim = 0;
  int32_t max_decode_len = 2;
  double param_init_scale = 0.1;
  uint64_t seed = 1;
};

// Named parameter tensors of the conditional language model:
// a single-layer tanh recurrence encoder, a single-layer tanh recurrence
// decoder with scaled dot-product attention, and a softmax output head.
//
//   z_i = tanh(w_enc_in * e(x_i) + w_enc_rec * z_{i-1} + b_enc)
//   a_t = softmax_i(dot(s_{t-1}, z_i) / sqrt(h)),  c_t = sum_i a_ti * z_i
//   s_t = tanh(w_dec_in * e(g_t) + w_dec_rec * s_{t-1} + w_dec_ctx * c_t + b_dec)
//   p_t = softmax(w_out * s_t + b_out)
//
// with s_0 = z_n and g_t the previous target token (BOS at t=1).
struct ModelParams {
  Mat src_embed;   // V_src x d
  Mat tgt_embed;   // V_tgt x d
  Mat w_enc_in;    // h x d
  Mat w_enc_rec;   // h x h
  Vec b_enc;       // h
  Mat w_dec_in;    // h x d
  Mat w_dec_rec;   // h x h
  Mat w_dec_ctx;   // h x h
  Vec b_dec;       // h
  Mat w_out;       // V_tgt x h
  Vec b_out;       // V_tgt

  int32_t src_vocab_size() const { return static_cast<int32_t>(src_embed.rows()); }
  int32_t tgt_vocab_size() const { return static_cast<int32_t>(tgt_embed.rows()); }
  int32_t embed_dim() const { return static_cast<int32_t>(src_embed.cols()); }
  int32_t hidden_dim() const { return static_cast<int32_t>(w_enc_in.rows()); }

  template <class F>
  void for_each_tensor(F&& f) {
    f("src_embed", src_embed);
    f("tgt_embed", tgt_embed);
    f("w_enc_in", w_enc_in);
    f("w_enc_rec", w_enc_rec);
    f("b_enc", b_enc);
    f("w_dec_in", w_dec_in);
    f("w_dec_rec", w_dec_rec);
    f("w_dec_ctx", w_dec_ctx);
    f("b_dec", b_dec);
    f("w_out", w_out);
    f("b_out", b_out);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const char* name, auto& t) { f(name, std::as_const(t)); });
  }

  // Visits the same-named tensors of several congruent sets in lockstep.
  template <class F, class A, class... Rest>
  static void visit(F&& f, A&& a, Rest&&... rest) {
    f(a.src_embed, rest.src_embed...);
    f(a.tgt_embed, rest.tgt_embed...);
    f(a.w_enc_in, rest.w_enc_in...);
    f(a.w_enc_rec, rest.w_enc_rec...);
    f(a.b_enc, rest.b_enc...);
    f(a.w_dec_in, rest.w_dec_in...);
    f(a.w_dec_rec, rest.w_dec_rec...);
    f(a.w_dec_ctx, rest.w_dec_ctx...);
    f(a.b_dec, rest.b_dec...);
    f(a.w_out, rest.w_out...);
    f(a.b_out, rest.b_out...);
  }

  void set_zero();
  size_t coordinate_count() const;
  bool all_finite() const;
  double squared_norm() const;
  // this += scale * other
  void add_scaled(const ModelParams& other, double scale);
  void scale(double factor);
  bool equals(const ModelParams& other) const;
};

// Gradients share the exact tensor layout of the parameters.
using Gradients = ModelParams;

// Allocates zeroed tensors shaped like `like`.
Gradients zeros_like(const ModelParams& like);

// Uniform [-param_init_scale, +param_init_scale] weights from the seeded
// generator; biases start at zero. The same seed reproduces the same tensors
// bit for bit.
ModelParams init_model(const ModelConfig& cfg);

// Teacher-forced forward pass over tgt_prefix (must begin with BOS);
// one prediction step per prefix token.
struct StepOutputs {
  Mat encoder_states;  // h x n
  Mat decoder_states;  // h x T
  Mat attention;       // n x T, columns sum to 1
  Mat contexts;        // h x T
  Mat logits;          // V_tgt x T
  Mat log_probs;       // V_tgt x T
};
StepOutputs forward(const ModelParams& params, std::span<const int32_t> src,
                    std::span<const int32_t> tgt_prefix);

// Incremental decoding interface used by beam search, sampling and the
// enumeration oracle.
struct EncodedSource {
  Mat states;  // h x n
};
EncodedSource encode_source(const ModelParams& params,
                            std::span<const int32_t> src);
Vec initial_decoder_state(const EncodedSource& enc);

struct DecodeStep {
  Vec state;      // s_t
  Vec log_probs;  // distribution over token t
};
DecodeStep decode_step(const ModelParams& params, const EncodedSource& enc,
                       const Vec& prev_state, int32_t prev_token);

// Objective value Sigma_t step_weights[t] * log p(tgt[t] | ...), evaluated
// without building gradients. tgt supplies both the teacher-forcing inputs
// (shifted right behind BOS) and the per-step prediction targets.
double weighted_log_prob(const ModelParams& params,
                         std::span<const int32_t> src,
                         std::span<const int32_t> tgt,
                         std::span<const double> step_weights);

// Exact analytic gradient of the weighted log-probability objective
// (ascent direction) plus the objective value.
struct BackwardResult {
  Gradients grads;
  double objective = 0.0;
};
BackwardResult backward(const ModelParams& params, std::span<const int32_t> src,
                        std::span<const int32_t> tgt,
                        std::span<const double> step_weights);

// Checkpoint format: magic "SQRL", u16 version, config block, then
// per-tensor records (name length, name, rank, dims, little-endian
// 64-bit floats). Round-trips bit for bit.
void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path);
std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path);

// Central-difference validation of backward() on one example. Checks every
// coordinate when there are at most max_coords of them, otherwise a seeded
// random subset of max_coords (>= 200 by contract). Relative error uses
// denominator max(|a|, |b|, 1e-8).
struct FdCheckResult {
  double max_rel_err = 0.0;
  std::string worst_tensor;
};
FdCheckResult finite_difference_check(const ModelParams& params,
                                      std::span<const int32_t> src,
                                      std::span<const int32_t> tgt,
                                      std::span<const double> step_weights,
                                      double epsilon, size_t max_coords = 200,
                                      uint64_t seed = 7);
// Same, but validating a caller-supplied gradient.
FdCheckResult finite_difference_check_against(
    const ModelParams& params, const Gradients& grads,
    std::span<const int32_t> src, std::span<const int32_t> tgt,
    std::span<const double> step_weights, double epsilon,
    size_t max_coords = 200, uint64_t seed = 7);

}  // namespace seqrl
