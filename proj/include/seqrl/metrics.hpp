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

#include <span>
#include <vector>

#include "seqrl/corpus.hpp"

namespace seqrl {

// Sentence-reward settings: add-one smoothing on every n-gram order, score
// scaled by the reference length.
struct BleuConfig {
  int max_order = 4;
  bool multiply_by_ref_len = true;
};

// Per-sample reward bookkeeping for one generated hypothesis.
//   shaped[t]   = R(y_hat[1..t]) - R(y_hat[1..t-1])     (telescopes to terminal)
//   returns[t]  = sum of shaped[t..m]                   (returns[0] == terminal)
//   baselines   = learned per-step estimates, empty when no baseline is used
//   advantages  = per-step policy-gradient weights, filled by the trainer
struct RewardTrace {
  double terminal = 0.0;
  std::vector<double> shaped;
  std::vector<double> returns;
  std::vector<double> baselines;
  std::vector<double> advantages;
};

// Smoothed sentence reward:
//   BP * exp(mean_n ln((clipped_matches_n + 1) / (hyp_ngrams_n + 1))) * |ref|
// with BP = min(1, exp(1 - |ref|/|hyp|)). A trailing EOS on hyp is ignored;
// an empty hypothesis scores exactly 0. Throws EmptyReference.
double sentence_reward(std::span<const int32_t> hyp,
                       std::span<const int32_t> ref,
                       const BleuConfig& cfg = {});

// Per-step reward decomposition over hypothesis prefixes. hyp_tokens may end
// with EOS (the terminator counts as the final step; it never scores
// n-grams). Fills terminal, shaped and returns.
RewardTrace shaped_rewards(std::span<const int32_t> hyp_tokens,
                           std::span<const int32_t> ref,
                           const BleuConfig& cfg = {});

// Standard corpus BLEU in [0, 100]: pooled clipped n-gram precisions,
// geometric mean, brevity penalty, no smoothing. Returns 0 whenever a pooled
// match count of some order is 0. Throws ListMismatch / EmptyReference.
double corpus_bleu(const std::vector<TokenSequence>& hyps,
                   const std::vector<TokenSequence>& refs, int max_order = 4);

}  // namespace seqrl
