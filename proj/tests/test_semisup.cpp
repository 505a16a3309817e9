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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "seqrl/errors.hpp"
#include "seqrl/semisup.hpp"
#include "support/toys.hpp"

using namespace seqrl;

namespace {

// A model trained until it copies single tokens deterministically.
ModelParams trained_copier(const std::shared_ptr<const Vocabulary>& vocab) {
  Dataset ds;
  ds.src_vocab = vocab;
  ds.tgt_vocab = vocab;
  for (int rep = 0; rep < 8; ++rep) {
    for (int32_t tok = kNumSpecials; tok < vocab->size(); ++tok) {
      ds.pairs.push_back({{tok}, {tok}, Origin::kBilingual});
    }
  }
  TrainConfig cfg;
  cfg.max_epochs = 100;
  cfg.eval_every = 0;
  cfg.lr_mle = 1e-2;
  cfg.batch_max_tokens = 16;
  ModelConfig model_cfg =
      testing::tiny_model_cfg(vocab->size(), vocab->size(), 16, 8, 0.1, 4);
  return train(cfg, model_cfg, {ds, {}}).final_params;
}

// Constant-table model whose EOS never ranks inside a narrow beam, so every
// hypothesis keeps content tokens.
ModelParams low_eos_table() {
  return testing::table_model(
      {0.03, 0.03, 0.005, 0.03, 0.06, 0.70, 0.08, 0.065}, /*src_vocab=*/8);
}

std::multiset<std::pair<TokenSequence, TokenSequence>> pair_multiset(
    const Dataset& ds) {
  std::multiset<std::pair<TokenSequence, TokenSequence>> out;
  for (const auto& pair : ds.pairs) out.insert({pair.src, pair.tgt});
  return out;
}

}  // namespace

TEST_CASE("pseudo targets from a copier equal the sources") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams copier = trained_copier(vocab);
  std::vector<TokenSequence> mono;
  for (int32_t tok = kNumSpecials; tok < vocab->size(); ++tok) {
    mono.push_back({tok});
  }
  const Dataset ds = generate_pseudo_targets(copier, mono, vocab, vocab, 4, 4);
  REQUIRE(ds.pairs.size() == mono.size());
  for (const auto& pair : ds.pairs) {
    CHECK(pair.tgt == pair.src);
    CHECK(pair.origin == Origin::kPseudoFromSourceMono);
  }
}

TEST_CASE("empty monolingual input gives an empty pseudo dataset") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams params = testing::random_tiny_model(8, 8, 4, 1);
  CHECK(generate_pseudo_targets(params, {}, vocab, vocab).pairs.empty());
  CHECK(back_translate(params, {}, vocab, vocab).pairs.empty());
}

TEST_CASE("pseudo pairs match an independent beam search call") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams params = low_eos_table();
  const auto mono = testing::random_sentences(6, 4, 1, 4, 11);
  const Dataset ds = generate_pseudo_targets(params, mono, vocab, vocab, 4, 5);
  REQUIRE(ds.pairs.size() == mono.size());
  for (size_t i = 0; i < mono.size(); ++i) {
    const auto beams = beam_search(params, mono[i], 4, 5);
    CHECK(ds.pairs[i].src == mono[i]);
    CHECK(ds.pairs[i].tgt == content_tokens(beams.front()));
  }
}

TEST_CASE("empty-content hypotheses are dropped, the rest kept in order") {
  // Random tiny models often rank [EOS] first; the filter must remove
  // exactly those sentences.
  const auto vocab = testing::toy_vocab(4);
  const ModelParams params = testing::random_tiny_model(8, 8, 4, 7);
  const auto mono = testing::random_sentences(10, 4, 1, 4, 11);
  std::vector<std::pair<TokenSequence, TokenSequence>> expected;
  for (const auto& src : mono) {
    const auto content = content_tokens(beam_search(params, src, 4, 5).front());
    if (!content.empty()) expected.push_back({src, content});
  }
  const Dataset ds = generate_pseudo_targets(params, mono, vocab, vocab, 4, 5);
  REQUIRE(ds.pairs.size() == expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(ds.pairs[i].src == expected[i].first);
    CHECK(ds.pairs[i].tgt == expected[i].second);
  }
}

TEST_CASE("pseudo data is model-consistent on re-decoding") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams params = testing::random_tiny_model(8, 8, 4, 13);
  const auto mono = testing::random_sentences(8, 4, 1, 4, 17);
  const Dataset ds = generate_pseudo_targets(params, mono, vocab, vocab, 4, 5);
  for (const auto& pair : ds.pairs) {
    const auto again = beam_search(params, pair.src, 4, 5);
    CHECK(content_tokens(again.front()) == pair.tgt);
  }
}

TEST_CASE("back-translation keeps the genuine target side verbatim") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams reverse = low_eos_table();
  const auto mono = testing::random_sentences(10, 4, 1, 4, 23);
  const Dataset ds = back_translate(reverse, mono, vocab, vocab, 4, 5);
  REQUIRE(ds.pairs.size() == mono.size());
  for (size_t i = 0; i < ds.pairs.size(); ++i) {
    CHECK(ds.pairs[i].origin == Origin::kPseudoFromTargetMono);
    CHECK(ds.pairs[i].tgt == mono[i]);  // verbatim from the mono corpus
    const auto beams = beam_search(reverse, ds.pairs[i].tgt, 4, 5);
    CHECK(ds.pairs[i].src == content_tokens(beams.front()));
  }
}

TEST_CASE("back-translation from a copier reproduces identity pairs") {
  const auto vocab = testing::toy_vocab(4);
  const ModelParams copier = trained_copier(vocab);
  std::vector<TokenSequence> mono;
  for (int32_t tok = kNumSpecials; tok < vocab->size(); ++tok) {
    mono.push_back({tok});
  }
  const Dataset ds = back_translate(copier, mono, vocab, vocab, 4, 4);
  REQUIRE(ds.pairs.size() == mono.size());
  for (const auto& pair : ds.pairs) CHECK(pair.src == pair.tgt);
}

TEST_CASE("unified dataset is the exact multiset union with origin tags") {
  const auto vocab = testing::toy_vocab(5);
  Dataset bi, ps, pt;
  bi.src_vocab = ps.src_vocab = pt.src_vocab = vocab;
  bi.tgt_vocab = ps.tgt_vocab = pt.tgt_vocab = vocab;
  for (int i = 0; i < 10; ++i) {
    bi.pairs.push_back({{4}, {5}, Origin::kBilingual});
  }
  for (int i = 0; i < 5; ++i) {
    ps.pairs.push_back({{5}, {6}, Origin::kPseudoFromSourceMono});
    pt.pairs.push_back({{6}, {7}, Origin::kPseudoFromTargetMono});
  }
  const Dataset unified = build_unified_dataset(bi, ps, pt, 3);
  CHECK(unified.pairs.size() == 20);
  std::map<Origin, int> counts;
  for (const auto& pair : unified.pairs) ++counts[pair.origin];
  CHECK(counts[Origin::kBilingual] == 10);
  CHECK(counts[Origin::kPseudoFromSourceMono] == 5);
  CHECK(counts[Origin::kPseudoFromTargetMono] == 5);

  auto want = pair_multiset(bi);
  for (const auto& p : pair_multiset(ps)) want.insert(p);
  for (const auto& p : pair_multiset(pt)) want.insert(p);
  CHECK(pair_multiset(unified) == want);
}

TEST_CASE("unify with empty pseudo sets equals the bilingual data") {
  const Dataset bi = testing::copy_dataset(12, 5, 1, 4, 31);
  Dataset empty_ps, empty_pt;
  const Dataset unified = build_unified_dataset(bi, empty_ps, empty_pt, 9);
  CHECK(pair_multiset(unified) == pair_multiset(bi));
}

TEST_CASE("unify is deterministic per seed") {
  const Dataset bi = testing::copy_dataset(12, 5, 1, 4, 37);
  const Dataset ps = testing::copy_dataset(4, 5, 1, 4, 38);
  const Dataset a = build_unified_dataset(bi, ps, {}, 5);
  const Dataset b = build_unified_dataset(bi, ps, {}, 5);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].src == b.pairs[i].src);
    CHECK(a.pairs[i].tgt == b.pairs[i].tgt);
  }
}

TEST_CASE("unify rejects mismatched vocabularies") {
  Dataset bi = testing::copy_dataset(3, 5, 1, 3, 41);
  Dataset ps = testing::copy_dataset(2, 7, 1, 3, 42);  // different vocab
  CHECK_THROWS_AS(build_unified_dataset(bi, ps, {}, 1), VocabMismatch);
}

TEST_CASE("origin tags round-trip through the sidecar file") {
  const auto vocab = testing::toy_vocab(5);
  Dataset ds;
  ds.src_vocab = ds.tgt_vocab = vocab;
  ds.pairs.push_back({{4}, {4}, Origin::kBilingual});
  ds.pairs.push_back({{5}, {5}, Origin::kPseudoFromSourceMono});
  ds.pairs.push_back({{6}, {6}, Origin::kPseudoFromTargetMono});
  const auto path =
      (std::filesystem::temp_directory_path() / "seqrl_tags.txt").string();
  write_origin_tags(ds, path);
  const auto tags = read_origin_tags(path);
  REQUIRE(tags.size() == 3);
  CHECK(tags[0] == Origin::kBilingual);
  CHECK(tags[1] == Origin::kPseudoFromSourceMono);
  CHECK(tags[2] == Origin::kPseudoFromTargetMono);
}

TEST_CASE("sequential recipe with no monolingual data is the plain pipeline") {
  const Dataset train_ds = testing::copy_dataset(16, 5, 1, 4, 51);
  const Dataset dev_ds = testing::copy_dataset(6, 5, 1, 4, 52);
  RecipeConfig cfg;
  cfg.model = testing::tiny_model_cfg(9, 9, 8, 53, 0.1, 6);
  cfg.reverse_model = cfg.model;
  cfg.mle.max_epochs = 2;
  cfg.mle.eval_every = 4;
  cfg.mle.batch_max_tokens = 16;
  cfg.reverse_mle = cfg.mle;
  cfg.rl.max_epochs = 1;
  cfg.rl.eval_every = 4;
  cfg.rl.batch_max_tokens = 16;

  const SequentialResult seq = sequential_recipe(cfg, {train_ds, dev_ds}, {}, {});

  TrainConfig mle_cfg = cfg.mle;
  mle_cfg.mode = TrainMode::kMle;
  const TrainResult plain_mle = train(mle_cfg, cfg.model, {train_ds, dev_ds});
  TrainConfig rl_cfg = cfg.rl;
  rl_cfg.mode = TrainMode::kRl;
  const TrainResult plain_rl =
      train(rl_cfg, cfg.model, {train_ds, dev_ds}, &plain_mle.best_params);

  CHECK(report_to_csv(seq.phase1.report) == report_to_csv(plain_mle.report));
  CHECK(report_to_csv(seq.phase2.report) == report_to_csv(plain_rl.report));
  CHECK(seq.phase2.final_params.equals(plain_rl.final_params));
}

TEST_CASE("sequential recipe is reproducible") {
  const Dataset train_ds = testing::cipher_dataset(20, 5, 1, 4, 61);
  const Dataset dev_ds = testing::cipher_dataset(6, 5, 1, 4, 62);
  const auto mono_src = testing::random_sentences(6, 5, 1, 4, 63);
  const auto mono_tgt = testing::random_sentences(6, 5, 1, 4, 64);
  RecipeConfig cfg;
  cfg.model = testing::tiny_model_cfg(9, 9, 8, 65, 0.1, 6);
  cfg.reverse_model = cfg.model;
  cfg.mle.max_epochs = 1;
  cfg.mle.eval_every = 5;
  cfg.mle.batch_max_tokens = 16;
  cfg.reverse_mle = cfg.mle;
  cfg.rl.max_epochs = 1;
  cfg.rl.eval_every = 5;
  cfg.rl.batch_max_tokens = 16;
  cfg.pseudo_max_len = 6;

  const SequentialResult a =
      sequential_recipe(cfg, {train_ds, dev_ds}, mono_src, mono_tgt);
  const SequentialResult b =
      sequential_recipe(cfg, {train_ds, dev_ds}, mono_src, mono_tgt);
  CHECK(report_to_csv(a.report) == report_to_csv(b.report));
  CHECK(a.phase2.final_params.equals(b.phase2.final_params));
  REQUIRE(!a.report.records.empty());
  for (size_t i = 1; i < a.report.records.size(); ++i) {
    CHECK(a.report.records[i].step > a.report.records[i - 1].step);
  }
}

TEST_CASE("sequential recipe phase 2 holds or improves dev BLEU") {
  // Directional run: phase-1 MLE on bilingual + source-mono pseudo data,
  // phase-2 RL on target-mono pseudo data.
  const Dataset bilingual = testing::cipher_dataset(500, 8, 1, 8, 81);
  const Dataset dev = testing::cipher_dataset(150, 8, 1, 8, 82);
  const auto mono_src = testing::random_sentences(800, 8, 1, 8, 83);
  const auto mono_tgt = testing::random_sentences(800, 8, 1, 8, 84);

  RecipeConfig cfg;
  cfg.model = testing::tiny_model_cfg(12, 12, 64, 85, 0.1, 10);
  cfg.reverse_model = testing::tiny_model_cfg(12, 12, 64, 86, 0.1, 10);
  cfg.mle.max_epochs = 100000;
  cfg.mle.max_steps = 900;
  cfg.mle.lr_mle = 3e-3;
  cfg.mle.eval_every = 250;
  cfg.mle.batch_max_tokens = 256;
  cfg.reverse_mle = cfg.mle;
  cfg.rl.alpha = 0.3;
  cfg.rl.shaping = true;
  cfg.rl.max_epochs = 1000;
  cfg.rl.max_steps = 100;
  cfg.rl.eval_every = 40;
  cfg.rl.batch_max_tokens = 256;
  cfg.pseudo_max_len = 10;
  cfg.phase1_source_side = true;

  const SequentialResult result =
      sequential_recipe(cfg, {bilingual, dev}, mono_src, mono_tgt);
  CHECK(result.phase2.best_dev_bleu >= result.phase1.best_dev_bleu - 0.5);
}

TEST_CASE("unified recipe assembles three domains and trains through RL") {
  const Dataset train_ds = testing::cipher_dataset(24, 5, 1, 4, 71);
  const Dataset dev_ds = testing::cipher_dataset(8, 5, 1, 4, 72);
  const auto mono_src = testing::random_sentences(8, 5, 1, 4, 73);
  const auto mono_tgt = testing::random_sentences(8, 5, 1, 4, 74);
  RecipeConfig cfg;
  cfg.model = testing::tiny_model_cfg(9, 9, 8, 75, 0.1, 6);
  cfg.reverse_model = cfg.model;
  cfg.mle.max_epochs = 2;
  cfg.mle.eval_every = 6;
  cfg.mle.batch_max_tokens = 16;
  cfg.reverse_mle = cfg.mle;
  cfg.rl.max_epochs = 1;
  cfg.rl.eval_every = 6;
  cfg.rl.batch_max_tokens = 16;
  cfg.pseudo_max_len = 6;

  const UnifiedResult result =
      unified_recipe(cfg, {train_ds, dev_ds}, mono_src, mono_tgt);
  CHECK(result.unified.pairs.size() >=
        train_ds.pairs.size());  // pseudo pairs may drop empties
  std::map<Origin, int> counts;
  for (const auto& pair : result.unified.pairs) ++counts[pair.origin];
  CHECK(counts[Origin::kBilingual] == int(train_ds.pairs.size()));
  CHECK(counts[Origin::kPseudoFromSourceMono] <= int(mono_src.size()));
  CHECK(counts[Origin::kPseudoFromTargetMono] <= int(mono_tgt.size()));
  CHECK(!result.unified_rl.report.records.empty());
  CHECK(std::isfinite(result.unified_rl.best_dev_bleu));
}
