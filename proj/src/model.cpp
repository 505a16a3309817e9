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

#include "seqrl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "seqrl/errors.hpp"
#include "seqrl/rng.hpp"

namespace seqrl {

namespace {

void check_token_range(int32_t token, int32_t vocab, const char* what) {
  if (token < 0 || token >= vocab) {
    throw InvalidToken(std::string(what) + " token " + std::to_string(token) +
                       " out of range [0, " + std::to_string(vocab) + ")");
  }
}

Vec log_softmax(const Vec& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return logits.array() - lse;
}

// Everything the backward sweep needs from one decoder step.
struct StepCache {
  Vec attention;  // n
  Vec context;    // h
  Vec state;      // h
  Vec probs;      // V_tgt
  Vec log_probs;  // V_tgt
};

StepCache run_decoder_step(const ModelParams& params, const Mat& enc_states,
                           const Vec& prev_state, int32_t prev_token) {
  check_token_range(prev_token, params.tgt_vocab_size(), "decoder input");
  const double inv_sqrt_h = 1.0 / std::sqrt(double(params.hidden_dim()));
  StepCache cache;
  Vec scores = (enc_states.transpose() * prev_state) * inv_sqrt_h;
  const double smax = scores.maxCoeff();
  Vec expd = (scores.array() - smax).exp();
  cache.attention = expd / expd.sum();
  cache.context = enc_states * cache.attention;
  Vec pre = params.w_dec_in * params.tgt_embed.row(prev_token).transpose() +
            params.w_dec_rec * prev_state + params.w_dec_ctx * cache.context +
            params.b_dec;
  cache.state = pre.array().tanh();
  Vec logits = params.w_out * cache.state + params.b_out;
  cache.log_probs = log_softmax(logits);
  cache.probs = cache.log_probs.array().exp();
  return cache;
}

// Shared teacher-forcing pass: inputs are BOS followed by tgt, targets are
// tgt itself, one prediction step per target token.
std::vector<StepCache> run_teacher_forced(const ModelParams& params,
                                          const Mat& enc_states,
                                          std::span<const int32_t> tgt) {
  std::vector<StepCache> steps;
  steps.reserve(tgt.size());
  Vec state = enc_states.col(enc_states.cols() - 1);
  for (size_t t = 0; t < tgt.size(); ++t) {
    const int32_t input = t == 0 ? kBos : tgt[t - 1];
    steps.push_back(run_decoder_step(params, enc_states, state, input));
    state = steps.back().state;
  }
  return steps;
}

}  // namespace

void ModelParams::set_zero() {
  for_each_tensor([](const char*, auto& t) { t.setZero(); });
}

size_t ModelParams::coordinate_count() const {
  size_t n = 0;
  for_each_tensor([&](const char*, const auto& t) { n += t.size(); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_tensor(
      [&](const char*, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

double ModelParams::squared_norm() const {
  double n = 0.0;
  for_each_tensor([&](const char*, const auto& t) { n += t.squaredNorm(); });
  return n;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  visit([scale](auto& a, const auto& b) { a += scale * b; }, *this, other);
}

void ModelParams::scale(double factor) {
  for_each_tensor([factor](const char*, auto& t) { t *= factor; });
}

bool ModelParams::equals(const ModelParams& other) const {
  bool ok = true;
  visit(
      [&](const auto& a, const auto& b) {
        ok = ok && a.rows() == b.rows() && a.cols() == b.cols() &&
             std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
      },
      *this, other);
  return ok;
}

Gradients zeros_like(const ModelParams& like) {
  Gradients g;
  ModelParams::visit(
      [](auto& dst, const auto& src) {
        dst = std::remove_reference_t<decltype(dst)>::Zero(src.rows(),
                                                           src.cols());
      },
      g, like);
  return g;
}

ModelParams init_model(const ModelConfig& cfg) {
  if (cfg.src_vocab_size < 1 || cfg.tgt_vocab_size < 1 || cfg.embed_dim < 1 ||
      cfg.hidden_dim < 1 || cfg.max_decode_len < 2) {
    throw ConfigError("model dimensions must be positive, max_decode_len >= 2");
  }
  const auto d = cfg.embed_dim;
  const auto h = cfg.hidden_dim;
  ModelParams p;
  p.src_embed.resize(cfg.src_vocab_size, d);
  p.tgt_embed.resize(cfg.tgt_vocab_size, d);
  p.w_enc_in.resize(h, d);
  p.w_enc_rec.resize(h, h);
  p.b_enc = Vec::Zero(h);
  p.w_dec_in.resize(h, d);
  p.w_dec_rec.resize(h, h);
  p.w_dec_ctx.resize(h, h);
  p.b_dec = Vec::Zero(h);
  p.w_out.resize(cfg.tgt_vocab_size, h);
  p.b_out = Vec::Zero(cfg.tgt_vocab_size);

  Rng rng(cfg.seed);
  p.for_each_tensor([&](const char* name, auto& t) {
    if (name[0] == 'b') return;  // biases stay zero
    double* data = t.data();
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      data[i] = uniform_symmetric(rng, cfg.param_init_scale);
    }
  });
  return p;
}

EncodedSource encode_source(const ModelParams& params,
                            std::span<const int32_t> src) {
  if (src.empty()) throw InvalidToken("source sentence is empty");
  const auto h = params.hidden_dim();
  EncodedSource enc;
  enc.states.resize(h, static_cast<Eigen::Index>(src.size()));
  Vec state = Vec::Zero(h);
  for (size_t i = 0; i < src.size(); ++i) {
    check_token_range(src[i], params.src_vocab_size(), "source");
    Vec pre = params.w_enc_in * params.src_embed.row(src[i]).transpose() +
              params.w_enc_rec * state + params.b_enc;
    state = pre.array().tanh();
    enc.states.col(static_cast<Eigen::Index>(i)) = state;
  }
  return enc;
}

Vec initial_decoder_state(const EncodedSource& enc) {
  return enc.states.col(enc.states.cols() - 1);
}

DecodeStep decode_step(const ModelParams& params, const EncodedSource& enc,
                       const Vec& prev_state, int32_t prev_token) {
  StepCache cache = run_decoder_step(params, enc.states, prev_state, prev_token);
  return {std::move(cache.state), std::move(cache.log_probs)};
}

StepOutputs forward(const ModelParams& params, std::span<const int32_t> src,
                    std::span<const int32_t> tgt_prefix) {
  if (tgt_prefix.empty() || tgt_prefix.front() != kBos) {
    throw InvalidToken("tgt_prefix must begin with BOS");
  }
  const EncodedSource enc = encode_source(params, src);
  // One prediction step per prefix token: step t consumes tgt_prefix[t].
  StepOutputs out;
  const auto n = enc.states.cols();
  const auto T = static_cast<Eigen::Index>(tgt_prefix.size());
  const auto h = params.hidden_dim();
  const auto v = params.tgt_vocab_size();
  out.encoder_states = enc.states;
  out.decoder_states.resize(h, T);
  out.attention.resize(n, T);
  out.contexts.resize(h, T);
  out.logits.resize(v, T);
  out.log_probs.resize(v, T);
  Vec state = initial_decoder_state(enc);
  for (Eigen::Index t = 0; t < T; ++t) {
    StepCache cache = run_decoder_step(params, enc.states, state,
                                       tgt_prefix[static_cast<size_t>(t)]);
    out.decoder_states.col(t) = cache.state;
    out.attention.col(t) = cache.attention;
    out.contexts.col(t) = cache.context;
    out.log_probs.col(t) = cache.log_probs;
    out.logits.col(t) = params.w_out * cache.state + params.b_out;
    state = cache.state;
  }
  return out;
}

double weighted_log_prob(const ModelParams& params,
                         std::span<const int32_t> src,
                         std::span<const int32_t> tgt,
                         std::span<const double> step_weights) {
  if (tgt.size() != step_weights.size()) {
    throw WeightMismatch(std::to_string(step_weights.size()) +
                         " weights for " + std::to_string(tgt.size()) +
                         " prediction steps");
  }
  const EncodedSource enc = encode_source(params, src);
  double objective = 0.0;
  Vec state = initial_decoder_state(enc);
  for (size_t t = 0; t < tgt.size(); ++t) {
    check_token_range(tgt[t], params.tgt_vocab_size(), "target");
    const int32_t input = t == 0 ? kBos : tgt[t - 1];
    StepCache cache = run_decoder_step(params, enc.states, state, input);
    objective += step_weights[t] * cache.log_probs[tgt[t]];
    state = cache.state;
  }
  return objective;
}

BackwardResult backward(const ModelParams& params, std::span<const int32_t> src,
                        std::span<const int32_t> tgt,
                        std::span<const double> step_weights) {
  if (tgt.size() != step_weights.size()) {
    throw WeightMismatch(std::to_string(step_weights.size()) +
                         " weights for " + std::to_string(tgt.size()) +
                         " prediction steps");
  }
  for (int32_t y : tgt) check_token_range(y, params.tgt_vocab_size(), "target");

  const EncodedSource enc = encode_source(params, src);
  const Mat& z = enc.states;
  const auto steps = run_teacher_forced(params, z, tgt);
  const auto T = static_cast<Eigen::Index>(tgt.size());
  const auto n = z.cols();
  const double inv_sqrt_h = 1.0 / std::sqrt(double(params.hidden_dim()));

  BackwardResult result;
  result.grads = zeros_like(params);
  Gradients& g = result.grads;
  for (Eigen::Index t = 0; t < T; ++t) {
    result.objective +=
        step_weights[static_cast<size_t>(t)] *
        steps[static_cast<size_t>(t)].log_probs[tgt[static_cast<size_t>(t)]];
  }

  Mat d_enc = Mat::Zero(z.rows(), n);
  Vec d_state = Vec::Zero(params.hidden_dim());  // dJ/ds_t past step t
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const StepCache& step = steps[static_cast<size_t>(t)];
    const int32_t target = tgt[static_cast<size_t>(t)];
    const int32_t input = t == 0 ? kBos : tgt[static_cast<size_t>(t) - 1];
    const Vec& prev_state =
        t == 0 ? Vec(z.col(n - 1)) : steps[static_cast<size_t>(t) - 1].state;

    // Softmax head: dJ/dlogits = w_t * (onehot(y_t) - p).
    Vec d_logits = -step_weights[static_cast<size_t>(t)] * step.probs;
    d_logits[target] += step_weights[static_cast<size_t>(t)];
    g.w_out.noalias() += d_logits * step.state.transpose();
    g.b_out += d_logits;
    d_state.noalias() += params.w_out.transpose() * d_logits;

    // Recurrence: s_t = tanh(v_t).
    Vec d_pre = d_state.array() * (1.0 - step.state.array().square());
    g.w_dec_in.noalias() +=
        d_pre * params.tgt_embed.row(input);
    g.tgt_embed.row(input).noalias() +=
        (params.w_dec_in.transpose() * d_pre).transpose();
    g.w_dec_rec.noalias() += d_pre * prev_state.transpose();
    g.w_dec_ctx.noalias() += d_pre * step.context.transpose();
    g.b_dec += d_pre;
    Vec d_prev = params.w_dec_rec.transpose() * d_pre;
    Vec d_context = params.w_dec_ctx.transpose() * d_pre;

    // Attention: c = Z a, a = softmax(Z^T s_{t-1} / sqrt(h)).
    Vec d_attn = z.transpose() * d_context;
    d_enc.noalias() += d_context * step.attention.transpose();
    const double dot = step.attention.dot(d_attn);
    Vec d_scores =
        step.attention.array() * (d_attn.array() - dot) * inv_sqrt_h;
    d_prev.noalias() += z * d_scores;
    d_enc.noalias() += prev_state * d_scores.transpose();

    d_state = std::move(d_prev);
  }
  // s_0 is the last encoder state.
  d_enc.col(n - 1) += d_state;

  Vec d_z = Vec::Zero(params.hidden_dim());
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    d_z += d_enc.col(i);
    Vec d_pre = d_z.array() * (1.0 - z.col(i).array().square());
    g.w_enc_in.noalias() +=
        d_pre * params.src_embed.row(src[static_cast<size_t>(i)]);
    g.src_embed.row(src[static_cast<size_t>(i)]).noalias() +=
        (params.w_enc_in.transpose() * d_pre).transpose();
    if (i > 0) {
      g.w_enc_rec.noalias() += d_pre * z.col(i - 1).transpose();
    }
    g.b_enc += d_pre;
    d_z = params.w_enc_rec.transpose() * d_pre;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'R', 'L'};
constexpr uint16_t kVersion = 1;

void put_bytes(std::ostream& out, const void* data, size_t len) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (size_t i = 0; i < sizeof(T); ++i) {
    const char byte = static_cast<char>((value >> (8 * i)) & 0xff);
    out.put(byte);
  }
}

void put_f64(std::ostream& out, double value) {
  put_le(out, std::bit_cast<uint64_t>(value));
}

void get_bytes(std::istream& in, void* data, size_t len) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (static_cast<size_t>(in.gcount()) != len) {
    throw CorruptCheckpoint("unexpected end of file");
  }
}

template <typename T>
T get_le(std::istream& in) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char bytes[sizeof(T)];
  get_bytes(in, bytes, sizeof(T));
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_le<uint64_t>(in));
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  put_bytes(out, kMagic, 4);
  put_le<uint16_t>(out, kVersion);
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.src_vocab_size));
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.tgt_vocab_size));
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.embed_dim));
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.hidden_dim));
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.max_decode_len));
  put_f64(out, cfg.param_init_scale);
  put_le<uint64_t>(out, cfg.seed);

  uint32_t count = 0;
  params.for_each_tensor([&](const char*, const auto&) { ++count; });
  put_le<uint32_t>(out, count);
  params.for_each_tensor([&](const char* name, const auto& t) {
    const std::string n(name);
    put_le<uint32_t>(out, static_cast<uint32_t>(n.size()));
    put_bytes(out, n.data(), n.size());
    const uint32_t rank =
        std::remove_reference_t<decltype(t)>::ColsAtCompileTime == 1 ? 1u : 2u;
    put_le<uint32_t>(out, rank);
    if (rank == 1) {
      put_le<uint64_t>(out, static_cast<uint64_t>(t.size()));
    } else {
      put_le<uint64_t>(out, static_cast<uint64_t>(t.rows()));
      put_le<uint64_t>(out, static_cast<uint64_t>(t.cols()));
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) put_f64(out, t.data()[i]);
  });
  if (!out) throw IoError("write to " + path + " failed");
}

std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CorruptCheckpoint("bad magic in " + path);
  }
  const uint16_t version = get_le<uint16_t>(in);
  if (version != kVersion) {
    throw CorruptCheckpoint("unsupported version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.src_vocab_size = static_cast<int32_t>(get_le<uint32_t>(in));
  cfg.tgt_vocab_size = static_cast<int32_t>(get_le<uint32_t>(in));
  cfg.embed_dim = static_cast<int32_t>(get_le<uint32_t>(in));
  cfg.hidden_dim = static_cast<int32_t>(get_le<uint32_t>(in));
  cfg.max_decode_len = static_cast<int32_t>(get_le<uint32_t>(in));
  cfg.param_init_scale = get_f64(in);
  cfg.seed = get_le<uint64_t>(in);

  ModelParams params = init_model(cfg);
  params.set_zero();
  const uint32_t count = get_le<uint32_t>(in);
  std::unordered_set<std::string> seen;
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t name_len = get_le<uint32_t>(in);
    if (name_len > 256) throw CorruptCheckpoint("implausible tensor name");
    std::string name(name_len, '\0');
    get_bytes(in, name.data(), name_len);
    const uint32_t rank = get_le<uint32_t>(in);
    if (rank != 1 && rank != 2) throw CorruptCheckpoint("bad tensor rank");
    uint64_t rows = get_le<uint64_t>(in);
    uint64_t cols = rank == 2 ? get_le<uint64_t>(in) : 1;

    bool matched = false;
    params.for_each_tensor([&](const char* tname, auto& t) {
      if (matched || name != tname) return;
      matched = true;
      if (static_cast<uint64_t>(t.rows()) != rows ||
          static_cast<uint64_t>(t.cols()) != cols) {
        throw CorruptCheckpoint("tensor " + name + " has unexpected shape");
      }
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = get_f64(in);
    });
    if (!matched) throw CorruptCheckpoint("unknown tensor " + name);
    seen.insert(name);
  }
  size_t expected = 0;
  params.for_each_tensor([&](const char*, const auto&) { ++expected; });
  if (seen.size() != expected) {
    throw CorruptCheckpoint("checkpoint is missing tensors");
  }
  return {std::move(params), cfg};
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

namespace {

double* coordinate_ptr(ModelParams& params, size_t index,
                       const char** tensor_name) {
  double* ptr = nullptr;
  params.for_each_tensor([&](const char* name, auto& t) {
    if (ptr != nullptr) return;
    const size_t size = static_cast<size_t>(t.size());
    if (index < size) {
      ptr = t.data() + index;
      *tensor_name = name;
      return;
    }
    index -= size;
  });
  return ptr;
}

}  // namespace

FdCheckResult finite_difference_check_against(
    const ModelParams& params, const Gradients& grads,
    std::span<const int32_t> src, std::span<const int32_t> tgt,
    std::span<const double> step_weights, double epsilon, size_t max_coords,
    uint64_t seed) {
  const size_t total = params.coordinate_count();
  std::vector<size_t> indices;
  if (total <= max_coords) {
    indices.resize(total);
    for (size_t i = 0; i < total; ++i) indices[i] = i;
  } else {
    std::unordered_set<size_t> chosen;
    Rng rng(seed);
    while (chosen.size() < max_coords) {
      chosen.insert(static_cast<size_t>(uniform_below(rng, total)));
    }
    indices.assign(chosen.begin(), chosen.end());
    std::sort(indices.begin(), indices.end());
  }

  ModelParams probe = params;
  FdCheckResult result;
  for (size_t index : indices) {
    const char* name = "";
    double* coord = coordinate_ptr(probe, index, &name);
    const double saved = *coord;
    *coord = saved + epsilon;
    const double plus = weighted_log_prob(probe, src, tgt, step_weights);
    *coord = saved - epsilon;
    const double minus = weighted_log_prob(probe, src, tgt, step_weights);
    *coord = saved;

    const double numeric = (plus - minus) / (2.0 * epsilon);
    const char* gname = "";
    ModelParams& gref = const_cast<Gradients&>(grads);
    const double analytic = *coordinate_ptr(gref, index, &gname);
    const double denom =
        std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
    const double rel = std::fabs(numeric - analytic) / denom;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_tensor = name;
    }
  }
  return result;
}

FdCheckResult finite_difference_check(const ModelParams& params,
                                      std::span<const int32_t> src,
                                      std::span<const int32_t> tgt,
                                      std::span<const double> step_weights,
                                      double epsilon, size_t max_coords,
                                      uint64_t seed) {
  const auto analytic = backward(params, src, tgt, step_weights);
  return finite_difference_check_against(params, analytic.grads, src, tgt,
                                         step_weights, epsilon, max_coords,
                                         seed);
}

}  // namespace seqrl
