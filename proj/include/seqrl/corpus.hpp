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
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqrl {

// Reserved ids. These are fixed so checkpoints and vocab files stay portable.
inline constexpr int32_t kPad = 0;
inline constexpr int32_t kBos = 1;
inline constexpr int32_t kEos = 2;
inline constexpr int32_t kUnk = 3;
inline constexpr int32_t kNumSpecials = 4;

// Encoded sentence. Never stores PAD, BOS or EOS; consumers add BOS/EOS.
using TokenSequence = std::vector<int32_t>;

// Bidirectional token<->id map. Ids 0..3 are the reserved specials and are
// always present; regular tokens occupy contiguous ids from 4 upward.
class Vocabulary {
 public:
  Vocabulary();

  // Appends a regular token with the next free id. Returns its id.
  int32_t add_token(const std::string& token);

  int32_t id(std::string_view token) const;  // kUnk when unknown
  const std::string& token(int32_t id) const;
  bool contains(std::string_view token) const;
  int32_t size() const { return static_cast<int32_t>(id_to_token_.size()); }

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  std::unordered_map<std::string, int32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
};

enum class Origin : uint8_t {
  kBilingual,
  kPseudoFromSourceMono,
  kPseudoFromTargetMono,
};

struct SentencePair {
  TokenSequence src;
  TokenSequence tgt;
  Origin origin = Origin::kBilingual;
};

struct Dataset {
  std::vector<SentencePair> pairs;
  std::shared_ptr<const Vocabulary> src_vocab;
  std::shared_ptr<const Vocabulary> tgt_vocab;
};

// A batch is a list of indices into Dataset::pairs.
using Batch = std::vector<size_t>;

// Keeps tokens with frequency >= min_count, most frequent first, ties broken
// lexicographically, truncated so the total vocabulary (specials included)
// does not exceed max_size.
Vocabulary build_vocab(std::istream& lines, int min_count,
                       int max_size = std::numeric_limits<int32_t>::max());
Vocabulary build_vocab(const std::vector<std::string>& lines, int min_count,
                       int max_size = std::numeric_limits<int32_t>::max());

// Whitespace tokenization; unknown tokens map to kUnk. Throws EmptySentence
// on a line with no tokens.
TokenSequence encode_sentence(const Vocabulary& vocab, std::string_view line);

// Inverse of encode_sentence for in-vocabulary text.
std::string decode_sentence(const Vocabulary& vocab, const TokenSequence& ids);

// Vocab file: one regular token per line, id = line index + 4.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

// Aligned parallel corpus. Pairs with either side longer than max_len are
// dropped; input order is preserved. Throws LineCountMismatch.
Dataset load_parallel(const std::string& src_path, const std::string& tgt_path,
                      std::shared_ptr<const Vocabulary> src_vocab,
                      std::shared_ptr<const Vocabulary> tgt_vocab,
                      int max_len);

std::vector<TokenSequence> load_mono(const std::string& path,
                                     const Vocabulary& vocab, int max_len);

// Token-budgeted batching over a seeded shuffle: each batch keeps both
// sum(src lens) <= max_tokens and sum(tgt lens) <= max_tokens, and every pair
// appears exactly once. Throws OversizedPair if a single pair cannot fit.
std::vector<Batch> make_batches(const Dataset& dataset, size_t max_tokens,
                                uint64_t seed);

// File helpers shared by the CLI and the semi-supervised pipeline.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace seqrl
