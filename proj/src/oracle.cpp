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

// The enumeration below deliberately shares no traversal logic with beam
// search or sampling; it only consumes the model's single-step interface.

#include "seqrl/oracle.hpp"

#include <cmath>

#include "seqrl/errors.hpp"

namespace seqrl {

namespace {

void check_budget(const ModelParams& params, int max_len, size_t budget) {
  const double vocab = static_cast<double>(params.tgt_vocab_size());
  double leaves = 1.0;
  for (int i = 0; i < max_len; ++i) {
    leaves *= vocab;
    if (leaves > static_cast<double>(budget)) {
      throw SpaceTooLarge("vocab^max_len exceeds the enumeration budget of " +
                          std::to_string(budget));
    }
  }
}

// Recursive expansion; emits every terminated or absorbed sequence.
void expand(const ModelParams& params, const EncodedSource& enc, int max_len,
            TokenSequence& prefix, const Vec& prev_state, int32_t prev_token,
            double log_prob, EnumeratedSpace& space) {
  const DecodeStep step = decode_step(params, enc, prev_state, prev_token);
  const bool eos_exists = kEos < params.tgt_vocab_size();
  for (int32_t token = 0; token < params.tgt_vocab_size(); ++token) {
    const double lp = log_prob + step.log_probs[token];
    prefix.push_back(token);
    if (eos_exists && token == kEos) {
      space.sequences.push_back({prefix, true, std::exp(lp), lp});
    } else if (static_cast<int>(prefix.size()) == max_len) {
      // Absorbing cut: the event keeps the full prefix mass, while the
      // decode-comparable score still charges the next-step EOS.
      double score = lp;
      if (eos_exists) {
        const DecodeStep next = decode_step(params, enc, step.state, token);
        score += next.log_probs[kEos];
      }
      space.sequences.push_back({prefix, false, std::exp(lp), score});
    } else {
      expand(params, enc, max_len, prefix, step.state, token, lp, space);
    }
    prefix.pop_back();
  }
}

}  // namespace

EnumeratedSpace enumerate_sequences(const ModelParams& params,
                                    std::span<const int32_t> src, int max_len,
                                    size_t budget) {
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  check_budget(params, max_len, budget);
  const EncodedSource enc = encode_source(params, src);
  EnumeratedSpace space;
  TokenSequence prefix;
  expand(params, enc, max_len, prefix, initial_decoder_state(enc), kBos, 0.0,
         space);
  space.total_mass = 0.0;
  for (const auto& seq : space.sequences) space.total_mass += seq.probability;
  return space;
}

namespace {

TokenSequence content_of(const EnumeratedSequence& seq) {
  TokenSequence content = seq.tokens;
  if (seq.terminated) content.pop_back();
  return content;
}

}  // namespace

double expected_reward(const ModelParams& params, std::span<const int32_t> src,
                       const RewardFn& reward, int max_len, size_t budget) {
  const EnumeratedSpace space = enumerate_sequences(params, src, max_len, budget);
  double total = 0.0;
  for (const auto& seq : space.sequences) {
    total += seq.probability * reward(content_of(seq));
  }
  return total;
}

double expected_reward(const ModelParams& params, std::span<const int32_t> src,
                       std::span<const int32_t> ref, int max_len,
                       const BleuConfig& cfg, size_t budget) {
  TokenSequence ref_copy(ref.begin(), ref.end());
  return expected_reward(
      params, src,
      [&](const TokenSequence& hyp) { return sentence_reward(hyp, ref_copy, cfg); },
      max_len, budget);
}

Gradients exact_policy_gradient(const ModelParams& params,
                                std::span<const int32_t> src,
                                const RewardFn& reward, int max_len,
                                size_t budget) {
  const EnumeratedSpace space = enumerate_sequences(params, src, max_len, budget);
  const bool eos_exists = kEos < params.tgt_vocab_size();
  Gradients total = zeros_like(params);
  for (const auto& seq : space.sequences) {
    const double weight = seq.probability * reward(content_of(seq));
    if (weight == 0.0) continue;
    TokenSequence target = seq.tokens;
    std::vector<double> step_weights(target.size(), 1.0);
    if (!seq.terminated && eos_exists) {
      // The EOS after a cut is not a sampled action; give it zero weight so
      // grad log p covers exactly the event probability.
      target.push_back(kEos);
      step_weights.push_back(0.0);
    }
    const BackwardResult bw = backward(params, src, target, step_weights);
    total.add_scaled(bw.grads, weight);
  }
  return total;
}

Gradients exact_policy_gradient(const ModelParams& params,
                                std::span<const int32_t> src,
                                std::span<const int32_t> ref, int max_len,
                                const BleuConfig& cfg, size_t budget) {
  TokenSequence ref_copy(ref.begin(), ref.end());
  return exact_policy_gradient(
      params, src,
      [&](const TokenSequence& hyp) { return sentence_reward(hyp, ref_copy, cfg); },
      max_len, budget);
}

Hypothesis exhaustive_best(const ModelParams& params,
                           std::span<const int32_t> src, int max_len,
                           size_t budget) {
  const EnumeratedSpace space = enumerate_sequences(params, src, max_len, budget);
  const EnumeratedSequence* best = nullptr;
  for (const auto& seq : space.sequences) {
    if (best == nullptr || seq.score > best->score ||
        (seq.score == best->score && seq.tokens < best->tokens)) {
      best = &seq;
    }
  }
  return rescore(params, src, best->tokens, best->terminated);
}

}  // namespace seqrl
