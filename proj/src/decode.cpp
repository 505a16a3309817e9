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

#include "seqrl/decode.hpp"

#include <algorithm>
#include <numeric>

#include "seqrl/errors.hpp"

namespace seqrl {

namespace {

bool has_eos(const ModelParams& params) {
  return kEos < params.tgt_vocab_size();
}

Mat states_to_matrix(const std::vector<Vec>& states, int hidden) {
  Mat m(hidden, static_cast<Eigen::Index>(states.size()));
  for (size_t i = 0; i < states.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = states[i];
  }
  return m;
}

double sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TokenSequence content_tokens(const Hypothesis& hyp) {
  TokenSequence out = hyp.tokens;
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

Hypothesis multinomial_sample(const ModelParams& params,
                              std::span<const int32_t> src, int max_len,
                              Rng& rng) {
  const EncodedSource enc = encode_source(params, src);
  Hypothesis hyp;
  std::vector<Vec> states;
  Vec state = initial_decoder_state(enc);
  int32_t prev_token = kBos;
  for (int t = 0; t < max_len; ++t) {
    const DecodeStep step = decode_step(params, enc, state, prev_token);
    // Inverse-CDF draw over exp(log_probs); identical on every platform.
    const Vec probs = step.log_probs.array().exp();
    const double target = uniform_unit(rng) * probs.sum();
    int32_t token = -1;
    double cum = 0.0;
    for (int32_t k = 0; k < probs.size(); ++k) {
      if (probs[k] <= 0.0) continue;
      cum += probs[k];
      token = k;
      if (cum > target) break;
    }
    hyp.tokens.push_back(token);
    hyp.step_log_probs.push_back(step.log_probs[token]);
    states.push_back(step.state);
    state = step.state;
    prev_token = token;
    if (token == kEos) {
      hyp.terminated = true;
      break;
    }
  }
  if (!hyp.terminated && has_eos(params)) {
    // Score the terminator the model never emitted; the cut stays a cut.
    const DecodeStep step = decode_step(params, enc, state, prev_token);
    hyp.step_log_probs.push_back(step.log_probs[kEos]);
  }
  hyp.score = sum(hyp.step_log_probs);
  hyp.decoder_states = states_to_matrix(states, params.hidden_dim());
  return hyp;
}

std::vector<Hypothesis> beam_search(const ModelParams& params,
                                    std::span<const int32_t> src, int width,
                                    int max_len) {
  if (width < 1) throw ConfigError("beam width must be >= 1");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  const EncodedSource enc = encode_source(params, src);
  const int32_t vocab = params.tgt_vocab_size();

  struct Entry {
    TokenSequence tokens;
    std::vector<double> lps;
    double cum = 0.0;
    Vec state;
    std::vector<Vec> states;
  };
  std::vector<Entry> live;
  live.push_back({{}, {}, 0.0, initial_decoder_state(enc), {}});
  std::vector<Entry> finished;

  struct Candidate {
    size_t parent;
    int32_t token;
    double lp;
    double cum;
  };

  for (int round = 0; round < max_len; ++round) {
    std::vector<Candidate> pool;
    std::vector<Vec> new_states(live.size());
    for (size_t e = 0; e < live.size(); ++e) {
      const int32_t input = live[e].tokens.empty() ? kBos : live[e].tokens.back();
      DecodeStep step = decode_step(params, enc, live[e].state, input);
      new_states[e] = std::move(step.state);
      // Each entry contributes its top-K tokens to the K x K pool.
      std::vector<int32_t> ids(static_cast<size_t>(vocab));
      std::iota(ids.begin(), ids.end(), 0);
      const size_t take = std::min<size_t>(static_cast<size_t>(width), ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(take),
                        ids.end(), [&](int32_t a, int32_t b) {
                          if (step.log_probs[a] != step.log_probs[b]) {
                            return step.log_probs[a] > step.log_probs[b];
                          }
                          return a < b;
                        });
      for (size_t k = 0; k < take; ++k) {
        pool.push_back({e, ids[k], step.log_probs[ids[k]],
                        live[e].cum + step.log_probs[ids[k]]});
      }
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.cum != b.cum) return a.cum > b.cum;
                       return a.token < b.token;
                     });

    // Walk the pool best-first: EOS candidates move to the finished set and
    // the live beam refills with the next non-EOS candidates until it holds
    // K entries again.
    std::vector<Entry> next;
    for (const Candidate& cand : pool) {
      if (next.size() >= static_cast<size_t>(width)) break;
      Entry child = live[cand.parent];
      child.tokens.push_back(cand.token);
      child.lps.push_back(cand.lp);
      child.cum = cand.cum;
      child.state = new_states[cand.parent];
      child.states.push_back(new_states[cand.parent]);
      if (cand.token == kEos) {
        finished.push_back(std::move(child));
      } else {
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
    if (finished.size() >= static_cast<size_t>(width) || live.empty()) break;
  }

  std::vector<Hypothesis> results;
  auto emit = [&](Entry& entry, bool terminated, double forced_eos_lp,
                  bool has_forced) {
    Hypothesis hyp;
    hyp.tokens = std::move(entry.tokens);
    hyp.step_log_probs = std::move(entry.lps);
    if (has_forced) hyp.step_log_probs.push_back(forced_eos_lp);
    hyp.terminated = terminated;
    hyp.score = sum(hyp.step_log_probs);
    hyp.decoder_states = states_to_matrix(entry.states, params.hidden_dim());
    results.push_back(std::move(hyp));
  };
  for (Entry& entry : finished) emit(entry, true, 0.0, false);
  if (finished.size() < static_cast<size_t>(width)) {
    for (Entry& entry : live) {
      double eos_lp = 0.0;
      bool has_forced = false;
      if (has_eos(params)) {
        const DecodeStep step =
            decode_step(params, enc, entry.state, entry.tokens.back());
        eos_lp = step.log_probs[kEos];
        has_forced = true;
      }
      emit(entry, false, eos_lp, has_forced);
    }
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.tokens < b.tokens;
                   });
  if (results.size() > static_cast<size_t>(width)) {
    results.resize(static_cast<size_t>(width));
  }
  return results;
}

Hypothesis rescore(const ModelParams& params, std::span<const int32_t> src,
                   const TokenSequence& tokens, bool terminated) {
  const EncodedSource enc = encode_source(params, src);
  Hypothesis hyp;
  hyp.tokens = tokens;
  hyp.terminated = terminated;
  std::vector<Vec> states;
  Vec state = initial_decoder_state(enc);
  int32_t prev_token = kBos;
  for (int32_t token : tokens) {
    const DecodeStep step = decode_step(params, enc, state, prev_token);
    hyp.step_log_probs.push_back(step.log_probs[token]);
    states.push_back(step.state);
    state = step.state;
    prev_token = token;
  }
  if (!terminated && has_eos(params)) {
    const DecodeStep step = decode_step(params, enc, state, prev_token);
    hyp.step_log_probs.push_back(step.log_probs[kEos]);
  }
  hyp.score = sum(hyp.step_log_probs);
  hyp.decoder_states = states_to_matrix(states, params.hidden_dim());
  return hyp;
}

std::vector<Hypothesis> translate_corpus(const ModelParams& params,
                                         const std::vector<TokenSequence>& srcs,
                                         int width, int max_len) {
  std::vector<Hypothesis> out(srcs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(srcs.size()); ++i) {
    out[static_cast<size_t>(i)] =
        beam_search(params, srcs[static_cast<size_t>(i)], width, max_len)
            .front();
  }
  return out;
}

std::vector<Hypothesis> translate_corpus_serial(
    const ModelParams& params, const std::vector<TokenSequence>& srcs,
    int width, int max_len) {
  std::vector<Hypothesis> out(srcs.size());
  for (size_t i = 0; i < srcs.size(); ++i) {
    out[i] = beam_search(params, srcs[i], width, max_len).front();
  }
  return out;
}

std::vector<Hypothesis> sample_corpus(const ModelParams& params,
                                      const std::vector<TokenSequence>& srcs,
                                      int max_len, uint64_t seed) {
  std::vector<Hypothesis> out(srcs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(srcs.size()); ++i) {
    Rng rng(stream_seed(seed, static_cast<uint64_t>(i)));
    out[static_cast<size_t>(i)] =
        multinomial_sample(params, srcs[static_cast<size_t>(i)], max_len, rng);
  }
  return out;
}

std::vector<Hypothesis> sample_corpus_serial(
    const ModelParams& params, const std::vector<TokenSequence>& srcs,
    int max_len, uint64_t seed) {
  std::vector<Hypothesis> out(srcs.size());
  for (size_t i = 0; i < srcs.size(); ++i) {
    Rng rng(stream_seed(seed, static_cast<uint64_t>(i)));
    out[i] = multinomial_sample(params, srcs[i], max_len, rng);
  }
  return out;
}

}  // namespace seqrl
