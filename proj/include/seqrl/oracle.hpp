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

#include <functional>

#include "seqrl/decode.hpp"
#include "seqrl/metrics.hpp"
#include "seqrl/model.hpp"

namespace seqrl {

// Exhaustive expansion of the output space on tiny instances. The walk stops
// at EOS or absorbs at max_len, so `probability` (product of the sampled
// step probabilities only) sums to 1 over the space. `score` additionally
// charges the EOS log-probability to sequences cut at max_len, matching how
// decoding ranks them.
struct EnumeratedSequence {
  TokenSequence tokens;  // ends with EOS iff terminated
  bool terminated = false;
  double probability = 0.0;
  double score = 0.0;  // log scale
};

struct EnumeratedSpace {
  std::vector<EnumeratedSequence> sequences;
  double total_mass = 0.0;
};

inline constexpr size_t kDefaultEnumerationBudget = 1'000'000;

// Depth-first expansion of all continuations. Throws SpaceTooLarge when the
// space could exceed the budget; it never samples.
EnumeratedSpace enumerate_sequences(const ModelParams& params,
                                    std::span<const int32_t> src, int max_len,
                                    size_t budget = kDefaultEnumerationBudget);

// Reward assigned to a candidate output; receives content tokens (EOS
// already stripped).
using RewardFn = std::function<double(const TokenSequence&)>;

// Exact Sigma_y p(y|x) R(y) over the enumerated space.
double expected_reward(const ModelParams& params, std::span<const int32_t> src,
                       const RewardFn& reward, int max_len,
                       size_t budget = kDefaultEnumerationBudget);
double expected_reward(const ModelParams& params, std::span<const int32_t> src,
                       std::span<const int32_t> ref, int max_len,
                       const BleuConfig& cfg = {},
                       size_t budget = kDefaultEnumerationBudget);

// Exact gradient of the expected reward: Sigma_y p(y) R(y) grad log p(y),
// with one backward call per enumerated sequence. Cut sequences contribute
// gradient only through their sampled steps.
Gradients exact_policy_gradient(const ModelParams& params,
                                std::span<const int32_t> src,
                                const RewardFn& reward, int max_len,
                                size_t budget = kDefaultEnumerationBudget);
Gradients exact_policy_gradient(const ModelParams& params,
                                std::span<const int32_t> src,
                                std::span<const int32_t> ref, int max_len,
                                const BleuConfig& cfg = {},
                                size_t budget = kDefaultEnumerationBudget);

// Argmax-score terminated sequence; ties broken by token-id order. Ground
// truth for beam search.
Hypothesis exhaustive_best(const ModelParams& params,
                           std::span<const int32_t> src, int max_len,
                           size_t budget = kDefaultEnumerationBudget);

}  // namespace seqrl
