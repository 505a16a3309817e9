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

// Shared builders for toy tasks and hand-set models.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seqrl/model.hpp"
#include "seqrl/rng.hpp"

namespace seqrl::testing {

inline std::shared_ptr<const Vocabulary> toy_vocab(int content_tokens) {
  auto vocab = std::make_shared<Vocabulary>();
  for (int i = 0; i < content_tokens; ++i) {
    vocab->add_token("w" + std::to_string(i));
  }
  return vocab;
}

inline std::vector<TokenSequence> random_sentences(int count, int content_vocab,
                                                   int min_len, int max_len,
                                                   uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const size_t len =
        static_cast<size_t>(min_len) +
        uniform_below(rng, static_cast<uint64_t>(max_len - min_len + 1));
    TokenSequence s(len);
    for (auto& t : s) {
      t = static_cast<int32_t>(kNumSpecials +
                               uniform_below(rng, uint64_t(content_vocab)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// tgt == src.
inline Dataset copy_dataset(int count, int content_vocab, int min_len,
                            int max_len, uint64_t seed) {
  Dataset ds;
  ds.src_vocab = toy_vocab(content_vocab);
  ds.tgt_vocab = ds.src_vocab;
  for (auto& s : random_sentences(count, content_vocab, min_len, max_len, seed)) {
    ds.pairs.push_back({s, s, Origin::kBilingual});
  }
  return ds;
}

// Token-wise substitution cipher: tgt_i = pi(src_i).
inline int32_t cipher_map(int32_t token, int content_vocab) {
  const int32_t offset = token - kNumSpecials;
  return kNumSpecials + (offset + 3) % content_vocab;
}

inline Dataset cipher_dataset(int count, int content_vocab, int min_len,
                              int max_len, uint64_t seed) {
  Dataset ds;
  ds.src_vocab = toy_vocab(content_vocab);
  ds.tgt_vocab = ds.src_vocab;
  for (auto& s : random_sentences(count, content_vocab, min_len, max_len, seed)) {
    TokenSequence tgt(s.size());
    for (size_t i = 0; i < s.size(); ++i) tgt[i] = cipher_map(s[i], content_vocab);
    ds.pairs.push_back({std::move(s), std::move(tgt), Origin::kBilingual});
  }
  return ds;
}

inline ModelConfig tiny_model_cfg(int32_t v_src, int32_t v_tgt, int32_t dims,
                                  uint64_t seed, double scale = 0.5,
                                  int32_t max_decode_len = 8) {
  ModelConfig cfg;
  cfg.src_vocab_size = v_src;
  cfg.tgt_vocab_size = v_tgt;
  cfg.embed_dim = dims;
  cfg.hidden_dim = dims;
  cfg.max_decode_len = max_decode_len;
  cfg.param_init_scale = scale;
  cfg.seed = seed;
  return cfg;
}

inline ModelParams random_tiny_model(int32_t v_src, int32_t v_tgt, int32_t dims,
                                     uint64_t seed, double scale = 0.5) {
  ModelParams params = init_model(tiny_model_cfg(v_src, v_tgt, dims, seed, scale));
  Rng rng(mix64(seed));
  params.b_enc = params.b_enc.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  params.b_dec = params.b_dec.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  params.b_out = params.b_out.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  return params;
}

// Model whose output distribution equals softmax(log probs) at every step:
// all weights zero, so logits reduce to b_out.
inline ModelParams table_model(const std::vector<double>& probs,
                               int32_t src_vocab = 5, int32_t dims = 3) {
  ModelConfig cfg = tiny_model_cfg(src_vocab,
                                   static_cast<int32_t>(probs.size()), dims,
                                   /*seed=*/1, /*scale=*/0.0);
  ModelParams params = init_model(cfg);
  for (size_t i = 0; i < probs.size(); ++i) {
    params.b_out[static_cast<Eigen::Index>(i)] = std::log(probs[i]);
  }
  return params;
}

}  // namespace seqrl::testing
