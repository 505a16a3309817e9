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

#include "seqrl/rltrain.hpp"

namespace seqrl {

// Pairs every monolingual source sentence with the model's beam-search
// top-1 output as a pseudo reference (origin kPseudoFromSourceMono).
// Sentences whose hypothesis has no content tokens are dropped.
Dataset generate_pseudo_targets(const ModelParams& params,
                                const std::vector<TokenSequence>& mono_src,
                                std::shared_ptr<const Vocabulary> src_vocab,
                                std::shared_ptr<const Vocabulary> tgt_vocab,
                                int beam_width = 4, int max_len = 32);

// Pairs every monolingual target sentence with a back-translated pseudo
// source produced by a reverse (target-to-source) model
// (origin kPseudoFromTargetMono). The genuine target side is kept verbatim.
Dataset back_translate(const ModelParams& reverse_params,
                       const std::vector<TokenSequence>& mono_tgt,
                       std::shared_ptr<const Vocabulary> src_vocab,
                       std::shared_ptr<const Vocabulary> tgt_vocab,
                       int beam_width = 4, int max_len = 32);

// Concatenates the three domains and shuffles under the seed. Origin tags
// are preserved. Throws VocabMismatch when the vocabularies differ.
Dataset build_unified_dataset(const Dataset& bilingual,
                              const Dataset& pseudo_src_ds,
                              const Dataset& pseudo_tgt_ds, uint64_t seed);

// Sidecar origin-tag file: one tag per line, B | MS | MT.
void write_origin_tags(const Dataset& ds, const std::string& path);
std::vector<Origin> read_origin_tags(const std::string& path);

// ---------------------------------------------------------------------------
// Training recipes
// ---------------------------------------------------------------------------

struct RecipeConfig {
  ModelConfig model;          // forward direction
  ModelConfig reverse_model;  // target-to-source, used for back-translation
  TrainConfig mle;            // MLE phases
  TrainConfig rl;             // RL phase
  TrainConfig reverse_mle;    // reverse-model training
  int pseudo_beam_width = 4;
  int pseudo_max_len = 32;
  // Sequential recipe: which side feeds phase 1 (the MLE phase).
  bool phase1_source_side = true;
  // Optional MLE warm start on the phase-2 data before RL.
  bool phase2_mle_warmstart = false;
};

struct SequentialResult {
  TrainResult bootstrap;  // bilingual-only MLE used to generate pseudo data
  TrainResult phase1;     // MLE on bilingual + first mono side
  TrainResult phase2;     // RL on the second mono side
  TrainingReport report;  // phase 1 + phase 2, steps offset to stay increasing
};

// Phase 1 trains MLE on bilingual data plus pseudo data built from mono_a;
// phase 2 continues with RL on pseudo data built from mono_b (bilingual data
// when mono_b is empty), initialized from phase 1's best checkpoint.
// mono_a holds source-language text when cfg.phase1_source_side, otherwise
// target-language text; mono_b is the opposite side.
SequentialResult sequential_recipe(const RecipeConfig& cfg,
                                   const TrainData& bilingual,
                                   const std::vector<TokenSequence>& mono_a,
                                   const std::vector<TokenSequence>& mono_b);

struct UnifiedResult {
  TrainResult bilingual_mle;  // bilingual-only baseline
  TrainResult reverse_mle;
  Dataset unified;
  TrainResult unified_mle;
  TrainResult unified_rl;
};

// Pseudo data from both monolingual sides is packed with the bilingual data
// into one dataset; MLE trains on it from scratch, then RL continues from
// the MLE optimum.
UnifiedResult unified_recipe(const RecipeConfig& cfg, const TrainData& bilingual,
                             const std::vector<TokenSequence>& mono_src,
                             const std::vector<TokenSequence>& mono_tgt);

}  // namespace seqrl
