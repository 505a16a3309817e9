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

#include <vector>

#include "seqrl/model.hpp"
#include "seqrl/rng.hpp"

namespace seqrl {

// One generated sequence.
//
// A naturally terminated hypothesis stores EOS as its last token. A
// hypothesis cut at max_len stores only the max_len sampled tokens
// (terminated == false); the log-probability the model assigns to EOS right
// after the cut is still appended to step_log_probs so that scores stay
// comparable with finished hypotheses. decoder_states keeps the state that
// produced each sampled token (input to the baseline regressor), one column
// per token.
struct Hypothesis {
  TokenSequence tokens;
  std::vector<double> step_log_probs;
  double score = 0.0;
  bool terminated = false;
  Mat decoder_states;
};

// Hypothesis tokens without the EOS terminator.
TokenSequence content_tokens(const Hypothesis& hyp);

// Standard beam search over summed log-probabilities (no length
// normalization). An entry emitting EOS moves to the finished set and the
// beam refills from the candidate pool; search stops once K hypotheses have
// finished or max_len steps have run. Ties break by lower token id, then
// earlier insertion. Returns at most K hypotheses, best score first.
std::vector<Hypothesis> beam_search(const ModelParams& params,
                                    std::span<const int32_t> src, int width,
                                    int max_len);

// Ancestral sampling at temperature 1. Stops at EOS or cuts at max_len.
Hypothesis multinomial_sample(const ModelParams& params,
                              std::span<const int32_t> src, int max_len,
                              Rng& rng);

// Teacher-forces `tokens` through the model and rebuilds the bookkeeping of
// a Hypothesis (per-step log-probs, score, states).
Hypothesis rescore(const ModelParams& params, std::span<const int32_t> src,
                   const TokenSequence& tokens, bool terminated);

// Beam-search top-1 for every sentence. The parallel version distributes
// sentences over OpenMP threads; results are identical to the serial
// reference, which is kept for tests and benchmarks.
std::vector<Hypothesis> translate_corpus(const ModelParams& params,
                                         const std::vector<TokenSequence>& srcs,
                                         int width, int max_len);
std::vector<Hypothesis> translate_corpus_serial(
    const ModelParams& params, const std::vector<TokenSequence>& srcs,
    int width, int max_len);

// One multinomial sample per sentence; sentence i draws from an rng seeded
// with stream_seed(seed, i), so results do not depend on thread count.
std::vector<Hypothesis> sample_corpus(const ModelParams& params,
                                      const std::vector<TokenSequence>& srcs,
                                      int max_len, uint64_t seed);
std::vector<Hypothesis> sample_corpus_serial(
    const ModelParams& params, const std::vector<TokenSequence>& srcs,
    int max_len, uint64_t seed);

}  // namespace seqrl
