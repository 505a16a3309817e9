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

#include "seqrl/semisup.hpp"

#include <fstream>

#include "seqrl/errors.hpp"
#include "seqrl/rng.hpp"

namespace seqrl {

Dataset generate_pseudo_targets(const ModelParams& params,
                                const std::vector<TokenSequence>& mono_src,
                                std::shared_ptr<const Vocabulary> src_vocab,
                                std::shared_ptr<const Vocabulary> tgt_vocab,
                                int beam_width, int max_len) {
  Dataset ds;
  ds.src_vocab = std::move(src_vocab);
  ds.tgt_vocab = std::move(tgt_vocab);
  const auto hyps = translate_corpus(params, mono_src, beam_width, max_len);
  for (size_t i = 0; i < mono_src.size(); ++i) {
    TokenSequence pseudo = content_tokens(hyps[i]);
    if (pseudo.empty()) continue;
    ds.pairs.push_back(
        {mono_src[i], std::move(pseudo), Origin::kPseudoFromSourceMono});
  }
  return ds;
}

Dataset back_translate(const ModelParams& reverse_params,
                       const std::vector<TokenSequence>& mono_tgt,
                       std::shared_ptr<const Vocabulary> src_vocab,
                       std::shared_ptr<const Vocabulary> tgt_vocab,
                       int beam_width, int max_len) {
  Dataset ds;
  ds.src_vocab = std::move(src_vocab);
  ds.tgt_vocab = std::move(tgt_vocab);
  const auto hyps =
      translate_corpus(reverse_params, mono_tgt, beam_width, max_len);
  for (size_t i = 0; i < mono_tgt.size(); ++i) {
    TokenSequence pseudo = content_tokens(hyps[i]);
    if (pseudo.empty()) continue;
    ds.pairs.push_back(
        {std::move(pseudo), mono_tgt[i], Origin::kPseudoFromTargetMono});
  }
  return ds;
}

namespace {

void check_vocabs(const Dataset& a, const Dataset& b) {
  const bool src_ok = a.src_vocab == b.src_vocab ||
                      (a.src_vocab && b.src_vocab && *a.src_vocab == *b.src_vocab);
  const bool tgt_ok = a.tgt_vocab == b.tgt_vocab ||
                      (a.tgt_vocab && b.tgt_vocab && *a.tgt_vocab == *b.tgt_vocab);
  if (!src_ok || !tgt_ok) {
    throw VocabMismatch("datasets use different vocabularies");
  }
}

}  // namespace

Dataset build_unified_dataset(const Dataset& bilingual,
                              const Dataset& pseudo_src_ds,
                              const Dataset& pseudo_tgt_ds, uint64_t seed) {
  if (!pseudo_src_ds.pairs.empty()) check_vocabs(bilingual, pseudo_src_ds);
  if (!pseudo_tgt_ds.pairs.empty()) check_vocabs(bilingual, pseudo_tgt_ds);
  Dataset out;
  out.src_vocab = bilingual.src_vocab;
  out.tgt_vocab = bilingual.tgt_vocab;
  out.pairs = bilingual.pairs;
  out.pairs.insert(out.pairs.end(), pseudo_src_ds.pairs.begin(),
                   pseudo_src_ds.pairs.end());
  out.pairs.insert(out.pairs.end(), pseudo_tgt_ds.pairs.begin(),
                   pseudo_tgt_ds.pairs.end());
  Rng rng(seed);
  seeded_shuffle(out.pairs, rng);
  return out;
}

void write_origin_tags(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& pair : ds.pairs) {
    switch (pair.origin) {
      case Origin::kBilingual: out << "B\n"; break;
      case Origin::kPseudoFromSourceMono: out << "MS\n"; break;
      case Origin::kPseudoFromTargetMono: out << "MT\n"; break;
    }
  }
}

std::vector<Origin> read_origin_tags(const std::string& path) {
  std::vector<Origin> tags;
  for (const auto& line : read_lines(path)) {
    if (line == "B") {
      tags.push_back(Origin::kBilingual);
    } else if (line == "MS") {
      tags.push_back(Origin::kPseudoFromSourceMono);
    } else if (line == "MT") {
      tags.push_back(Origin::kPseudoFromTargetMono);
    } else {
      throw IoError("unknown origin tag '" + line + "' in " + path);
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

namespace {

Dataset flip(const Dataset& ds) {
  Dataset out;
  out.src_vocab = ds.tgt_vocab;
  out.tgt_vocab = ds.src_vocab;
  out.pairs.reserve(ds.pairs.size());
  for (const auto& pair : ds.pairs) {
    out.pairs.push_back({pair.tgt, pair.src, pair.origin});
  }
  return out;
}

TrainData flip(const TrainData& data) {
  return {flip(data.train), flip(data.dev)};
}

// Pseudo data for one monolingual side. Source-side text gets a pseudo
// target from the forward model; target-side text gets a pseudo source from
// the reverse model.
Dataset make_pseudo(const RecipeConfig& cfg, const TrainData& bilingual,
                    const std::vector<TokenSequence>& mono, bool source_side,
                    const ModelParams& forward_model,
                    const ModelParams* reverse_model) {
  if (mono.empty()) {
    Dataset empty;
    empty.src_vocab = bilingual.train.src_vocab;
    empty.tgt_vocab = bilingual.train.tgt_vocab;
    return empty;
  }
  if (source_side) {
    return generate_pseudo_targets(forward_model, mono,
                                   bilingual.train.src_vocab,
                                   bilingual.train.tgt_vocab,
                                   cfg.pseudo_beam_width, cfg.pseudo_max_len);
  }
  return back_translate(*reverse_model, mono, bilingual.train.src_vocab,
                        bilingual.train.tgt_vocab, cfg.pseudo_beam_width,
                        cfg.pseudo_max_len);
}

TrainingReport concat_reports(const TrainingReport& a, const TrainingReport& b) {
  TrainingReport out = a;
  const int64_t offset = a.records.empty() ? 0 : a.records.back().step;
  for (EvalRecord rec : b.records) {
    rec.step += offset;
    out.records.push_back(rec);
  }
  return out;
}

}  // namespace

SequentialResult sequential_recipe(const RecipeConfig& cfg,
                                   const TrainData& bilingual,
                                   const std::vector<TokenSequence>& mono_a,
                                   const std::vector<TokenSequence>& mono_b) {
  SequentialResult result;

  TrainConfig mle_cfg = cfg.mle;
  mle_cfg.mode = TrainMode::kMle;
  result.bootstrap = train(mle_cfg, cfg.model, bilingual);

  const bool need_reverse =
      (!mono_a.empty() && !cfg.phase1_source_side) ||
      (!mono_b.empty() && cfg.phase1_source_side);
  TrainResult reverse;
  if (need_reverse) {
    TrainConfig rev_cfg = cfg.reverse_mle;
    rev_cfg.mode = TrainMode::kMle;
    reverse = train(rev_cfg, cfg.reverse_model, flip(bilingual));
  }

  // Phase 1: MLE over bilingual data plus pseudo data from mono_a.
  Dataset pseudo_a =
      make_pseudo(cfg, bilingual, mono_a, cfg.phase1_source_side,
                  result.bootstrap.best_params,
                  need_reverse ? &reverse.best_params : nullptr);
  // With no pseudo data the phase degenerates to the plain pipeline, batch
  // order included, so skip the unify shuffle.
  TrainData phase1_data{
      pseudo_a.pairs.empty()
          ? bilingual.train
          : (cfg.phase1_source_side
                 ? build_unified_dataset(bilingual.train, pseudo_a, {},
                                         cfg.mle.seed)
                 : build_unified_dataset(bilingual.train, {}, pseudo_a,
                                         cfg.mle.seed)),
      bilingual.dev};
  result.phase1 = train(mle_cfg, cfg.model, phase1_data);

  // Phase 2: RL over pseudo data from mono_b (bilingual data when empty).
  Dataset pseudo_b =
      make_pseudo(cfg, bilingual, mono_b, !cfg.phase1_source_side,
                  result.phase1.best_params,
                  need_reverse ? &reverse.best_params : nullptr);
  TrainData phase2_data{pseudo_b.pairs.empty() ? bilingual.train : pseudo_b,
                        bilingual.dev};
  ModelParams phase2_init = result.phase1.best_params;
  if (cfg.phase2_mle_warmstart) {
    TrainResult warm = train(mle_cfg, cfg.model, phase2_data, &phase2_init);
    phase2_init = warm.best_params;
  }
  TrainConfig rl_cfg = cfg.rl;
  rl_cfg.mode = TrainMode::kRl;
  result.phase2 = train(rl_cfg, cfg.model, phase2_data, &phase2_init);

  result.report = concat_reports(result.phase1.report, result.phase2.report);
  return result;
}

UnifiedResult unified_recipe(const RecipeConfig& cfg, const TrainData& bilingual,
                             const std::vector<TokenSequence>& mono_src,
                             const std::vector<TokenSequence>& mono_tgt) {
  UnifiedResult result;

  TrainConfig mle_cfg = cfg.mle;
  mle_cfg.mode = TrainMode::kMle;
  result.bilingual_mle = train(mle_cfg, cfg.model, bilingual);

  TrainResult* reverse = nullptr;
  if (!mono_tgt.empty()) {
    TrainConfig rev_cfg = cfg.reverse_mle;
    rev_cfg.mode = TrainMode::kMle;
    result.reverse_mle = train(rev_cfg, cfg.reverse_model, flip(bilingual));
    reverse = &result.reverse_mle;
  }

  const Dataset pseudo_src =
      make_pseudo(cfg, bilingual, mono_src, true,
                  result.bilingual_mle.best_params, nullptr);
  const Dataset pseudo_tgt =
      make_pseudo(cfg, bilingual, mono_tgt, false,
                  result.bilingual_mle.best_params,
                  reverse ? &reverse->best_params : nullptr);
  result.unified = build_unified_dataset(bilingual.train, pseudo_src,
                                         pseudo_tgt, cfg.mle.seed);

  const TrainData unified_data{result.unified, bilingual.dev};
  result.unified_mle = train(mle_cfg, cfg.model, unified_data);

  TrainConfig rl_cfg = cfg.rl;
  rl_cfg.mode = TrainMode::kRl;
  result.unified_rl = train(rl_cfg, cfg.model, unified_data,
                            &result.unified_mle.best_params);
  return result;
}

}  // namespace seqrl
