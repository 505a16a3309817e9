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

#include "seqrl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seqrl/errors.hpp"
#include "seqrl/rng.hpp"

namespace seqrl {

namespace {

const char* const kSpecialTokens[kNumSpecials] = {"<pad>", "<bos>", "<eos>",
                                                  "<unk>"};

bool is_special_string(std::string_view token) {
  for (const char* s : kSpecialTokens) {
    if (token == s) return true;
  }
  return false;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* s : kSpecialTokens) {
    id_to_token_.emplace_back(s);
  }
}

int32_t Vocabulary::add_token(const std::string& token) {
  const int32_t new_id = size();
  auto [it, inserted] = token_to_id_.emplace(token, new_id);
  if (!inserted) return it->second;
  id_to_token_.push_back(token);
  return new_id;
}

int32_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int32_t id) const {
  if (id < 0 || id >= size()) {
    throw InvalidToken("id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(size()) + ")");
  }
  return id_to_token_[static_cast<size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

Vocabulary build_vocab(std::istream& lines, int min_count, int max_size) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (max_size < kNumSpecials) {
    throw ConfigError("max_size must leave room for the 4 reserved ids");
  }
  std::unordered_map<std::string, int64_t> counts;
  std::string line;
  while (std::getline(lines, line)) {
    for (auto& tok : split_whitespace(line)) {
      // Literal special strings in raw text would break the id<->token
      // bijection; they encode to <unk> instead.
      if (is_special_string(tok)) continue;
      ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, int64_t>> kept;
  kept.reserve(counts.size());
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const size_t room = static_cast<size_t>(max_size - kNumSpecials);
  if (kept.size() > room) kept.resize(room);

  Vocabulary vocab;
  for (auto& [tok, n] : kept) vocab.add_token(tok);
  return vocab;
}

Vocabulary build_vocab(const std::vector<std::string>& lines, int min_count,
                       int max_size) {
  std::stringstream ss;
  for (const auto& l : lines) ss << l << '\n';
  return build_vocab(ss, min_count, max_size);
}

TokenSequence encode_sentence(const Vocabulary& vocab, std::string_view line) {
  const auto tokens = split_whitespace(line);
  if (tokens.empty()) throw EmptySentence("cannot encode a blank line");
  TokenSequence ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(vocab.id(tok));
  return ids;
}

std::string decode_sentence(const Vocabulary& vocab, const TokenSequence& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (int32_t id = kNumSpecials; id < vocab.size(); ++id) {
    out << vocab.token(id) << '\n';
  }
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vocab.add_token(line);
  }
  return vocab;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& l : lines) out << l << '\n';
}

Dataset load_parallel(const std::string& src_path, const std::string& tgt_path,
                      std::shared_ptr<const Vocabulary> src_vocab,
                      std::shared_ptr<const Vocabulary> tgt_vocab,
                      int max_len) {
  const auto src_lines = read_lines(src_path);
  const auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw LineCountMismatch(src_path + " has " +
                            std::to_string(src_lines.size()) + " lines, " +
                            tgt_path + " has " +
                            std::to_string(tgt_lines.size()));
  }
  Dataset ds;
  ds.src_vocab = std::move(src_vocab);
  ds.tgt_vocab = std::move(tgt_vocab);
  for (size_t i = 0; i < src_lines.size(); ++i) {
    auto src = encode_sentence(*ds.src_vocab, src_lines[i]);
    auto tgt = encode_sentence(*ds.tgt_vocab, tgt_lines[i]);
    if (src.size() > static_cast<size_t>(max_len) ||
        tgt.size() > static_cast<size_t>(max_len)) {
      continue;
    }
    ds.pairs.push_back({std::move(src), std::move(tgt), Origin::kBilingual});
  }
  return ds;
}

std::vector<TokenSequence> load_mono(const std::string& path,
                                     const Vocabulary& vocab, int max_len) {
  std::vector<TokenSequence> out;
  for (const auto& line : read_lines(path)) {
    auto ids = encode_sentence(vocab, line);
    if (ids.size() > static_cast<size_t>(max_len)) continue;
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<Batch> make_batches(const Dataset& dataset, size_t max_tokens,
                                uint64_t seed) {
  std::vector<size_t> order(dataset.pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  seeded_shuffle(order, rng);

  std::vector<Batch> batches;
  Batch current;
  size_t src_tokens = 0, tgt_tokens = 0;
  for (size_t idx : order) {
    const auto& pair = dataset.pairs[idx];
    if (pair.src.size() > max_tokens || pair.tgt.size() > max_tokens) {
      throw OversizedPair("pair " + std::to_string(idx) +
                          " exceeds the token budget of " +
                          std::to_string(max_tokens));
    }
    if (!current.empty() && (src_tokens + pair.src.size() > max_tokens ||
                             tgt_tokens + pair.tgt.size() > max_tokens)) {
      batches.push_back(std::move(current));
      current.clear();
      src_tokens = tgt_tokens = 0;
    }
    current.push_back(idx);
    src_tokens += pair.src.size();
    tgt_tokens += pair.tgt.size();
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

}  // namespace seqrl
