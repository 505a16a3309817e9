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

#include "seqrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "seqrl/errors.hpp"

namespace seqrl {

namespace {

struct NgramHash {
  size_t operator()(const std::vector<int32_t>& g) const {
    size_t h = 0xcbf29ce484222325ull;
    for (int32_t id : g) {
      h ^= static_cast<size_t>(static_cast<uint32_t>(id));
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

using NgramCounts = std::unordered_map<std::vector<int32_t>, int64_t, NgramHash>;

NgramCounts count_ngrams(std::span<const int32_t> tokens, int order) {
  NgramCounts counts;
  if (tokens.size() < static_cast<size_t>(order)) return counts;
  for (size_t i = 0; i + order <= tokens.size(); ++i) {
    ++counts[std::vector<int32_t>(tokens.begin() + i,
                                  tokens.begin() + i + order)];
  }
  return counts;
}

int64_t clipped_matches(const NgramCounts& hyp, const NgramCounts& ref) {
  int64_t total = 0;
  for (const auto& [gram, n] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) total += std::min(n, it->second);
  }
  return total;
}

std::span<const int32_t> strip_trailing_eos(std::span<const int32_t> tokens) {
  if (!tokens.empty() && tokens.back() == kEos) {
    return tokens.first(tokens.size() - 1);
  }
  return tokens;
}

}  // namespace

double sentence_reward(std::span<const int32_t> hyp,
                       std::span<const int32_t> ref, const BleuConfig& cfg) {
  if (ref.empty()) throw EmptyReference("sentence_reward needs a reference");
  hyp = strip_trailing_eos(hyp);
  if (hyp.empty()) return 0.0;

  const int orders = cfg.max_order;
  double log_sum = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto hyp_grams = count_ngrams(hyp, n);
    const auto ref_grams = count_ngrams(ref, n);
    const int64_t total =
        hyp.size() >= static_cast<size_t>(n)
            ? static_cast<int64_t>(hyp.size()) - n + 1
            : 0;
    const int64_t matched = clipped_matches(hyp_grams, ref_grams);
    log_sum += std::log(static_cast<double>(matched + 1) /
                        static_cast<double>(total + 1));
  }
  const double precision = std::exp(log_sum / orders);
  const double ratio =
      static_cast<double>(ref.size()) / static_cast<double>(hyp.size());
  const double bp = hyp.size() >= ref.size() ? 1.0 : std::exp(1.0 - ratio);
  const double scale =
      cfg.multiply_by_ref_len ? static_cast<double>(ref.size()) : 1.0;
  return bp * precision * scale;
}

RewardTrace shaped_rewards(std::span<const int32_t> hyp_tokens,
                           std::span<const int32_t> ref,
                           const BleuConfig& cfg) {
  if (ref.empty()) throw EmptyReference("shaped_rewards needs a reference");
  RewardTrace trace;
  const size_t steps = hyp_tokens.size();
  trace.shaped.resize(steps);
  double prev = 0.0;
  for (size_t t = 1; t <= steps; ++t) {
    const double cur = sentence_reward(hyp_tokens.first(t), ref, cfg);
    trace.shaped[t - 1] = cur - prev;
    prev = cur;
  }
  trace.terminal = prev;
  trace.returns.resize(steps);
  double suffix = 0.0;
  for (size_t t = steps; t-- > 0;) {
    suffix += trace.shaped[t];
    trace.returns[t] = suffix;
  }
  return trace;
}

double corpus_bleu(const std::vector<TokenSequence>& hyps,
                   const std::vector<TokenSequence>& refs, int max_order) {
  if (hyps.size() != refs.size()) {
    throw ListMismatch(std::to_string(hyps.size()) + " hypotheses vs " +
                       std::to_string(refs.size()) + " references");
  }
  for (const auto& ref : refs) {
    if (ref.empty()) throw EmptyReference("corpus_bleu reference is empty");
  }

  std::vector<int64_t> matches(max_order, 0), totals(max_order, 0);
  int64_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    std::span<const int32_t> hyp = strip_trailing_eos(hyps[i]);
    hyp_len += static_cast<int64_t>(hyp.size());
    ref_len += static_cast<int64_t>(refs[i].size());
    for (int n = 1; n <= max_order; ++n) {
      if (hyp.size() < static_cast<size_t>(n)) continue;
      totals[n - 1] += static_cast<int64_t>(hyp.size()) - n + 1;
      matches[n - 1] +=
          clipped_matches(count_ngrams(hyp, n), count_ngrams(refs[i], n));
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 0; n < max_order; ++n) {
    if (matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) /
                        static_cast<double>(totals[n]));
  }
  const double bp =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) /
                               static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / max_order);
}

}  // namespace seqrl
