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

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqrl/decode.hpp"
#include "seqrl/metrics.hpp"
#include "seqrl/model.hpp"

namespace seqrl {

enum class SamplingMode { kMultinomial, kBeam };
enum class TrainMode { kMle, kRl };

// Every strategy switch in one place. Defaults follow the setup that the
// study found to work best: multinomial sampling, reward shaping on, no
// baseline, alpha = 0.3, RL learning rate 1e-4.
struct TrainConfig {
  TrainMode mode = TrainMode::kMle;
  double alpha = 0.3;
  SamplingMode sampling = SamplingMode::kMultinomial;
  int sample_beam_width = 4;
  bool beam_all_k = false;  // experimental: update on every beam hypothesis
  bool shaping = true;
  bool baseline = false;
  double lr_mle = 1e-3;
  double lr_rl = 1e-4;
  double lr_baseline = 1e-3;
  int baseline_pretrain_steps = 2000;
  int baseline_hidden = 0;  // 0 -> decoder hidden dim
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  int max_epochs = 10;
  int64_t max_steps = 0;  // 0 -> unlimited
  int eval_every = 200;
  int eval_beam_width = 6;
  size_t batch_max_tokens = 512;
  uint64_t seed = 1;
  BleuConfig reward;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

template <class TensorSet>
struct AdamState {
  TensorSet first_moment;
  TensorSet second_moment;
  int64_t step = 0;
  bool initialized = false;
};

// One bias-corrected Adam step along a descent gradient.
template <class TensorSet>
void adam_update(TensorSet& params, const TensorSet& descent_grad,
                 AdamState<TensorSet>& state, const AdamConfig& cfg) {
  if (!state.initialized) {
    TensorSet::visit(
        [](auto& m, auto& v, const auto& p) {
          m = std::remove_reference_t<decltype(m)>::Zero(p.rows(), p.cols());
          v = std::remove_reference_t<decltype(v)>::Zero(p.rows(), p.cols());
        },
        state.first_moment, state.second_moment, params);
    state.initialized = true;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  TensorSet::visit(
      [&](auto& p, auto& m, auto& v, const auto& g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square())
                .matrix();
        p.array() -=
            cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
      },
      params, state.first_moment, state.second_moment, descent_grad);
}

// ---------------------------------------------------------------------------
// Baseline reward regressor: two-layer perceptron with max(0, .) hidden
// units mapping a decoder state to a scalar expected return. Its training
// never feeds gradients back into the translation model.
// ---------------------------------------------------------------------------

struct BaselineParams {
  Mat w1;  // k x h
  Vec b1;  // k
  Mat w2;  // 1 x k
  Vec b2;  // 1

  template <class F, class A, class... Rest>
  static void visit(F&& f, A&& a, Rest&&... rest) {
    f(a.w1, rest.w1...);
    f(a.b1, rest.b1...);
    f(a.w2, rest.w2...);
    f(a.b2, rest.b2...);
  }
  bool equals(const BaselineParams& other) const;
};

BaselineParams init_baseline(int input_dim, int hidden_dim, double scale,
                             uint64_t seed);

// One scalar prediction per decoder state (column).
std::vector<double> baseline_predict(const BaselineParams& bp,
                                     const Mat& decoder_states);

// One Adam step on the mean squared error between predictions and targets;
// returns the mse before the update.
double baseline_update(BaselineParams& bp, AdamState<BaselineParams>& opt,
                       const AdamConfig& cfg, const Mat& decoder_states,
                       std::span<const double> targets);

// ---------------------------------------------------------------------------
// Policy-gradient weights
// ---------------------------------------------------------------------------

// Fills trace.baselines/advantages in place:
//   shaping on:  advantage_t = G_t - baseline_t
//   shaping off: advantage_t = terminal - baseline_t
void fill_advantages(RewardTrace& trace, bool shaping,
                     const std::vector<double>* baselines);

// Per-step weight vector for the REINFORCE update of one sampled hypothesis.
// Baselines must be present iff cfg.baseline is on and match the step count;
// otherwise throws WeightMismatch.
std::vector<double> reinforce_advantages(
    const Hypothesis& hyp, std::span<const int32_t> ref, const TrainConfig& cfg,
    const std::vector<double>* baselines = nullptr);

// ---------------------------------------------------------------------------
// Training steps
// ---------------------------------------------------------------------------

// Per-batch gradient assembly. The parallel versions fan sentences out over
// OpenMP threads into per-sentence slots and reduce them in index order, so
// results are bit-identical to the serial reference for any thread count.
struct MleCollect {
  Gradients grad;  // ascent gradient of Sigma log p over the batch
  double log_prob_sum = 0.0;
  size_t token_count = 0;
};
MleCollect collect_mle(const ModelParams& params, const Dataset& ds,
                       const Batch& batch);
MleCollect collect_mle_serial(const ModelParams& params, const Dataset& ds,
                              const Batch& batch);

// One Adam update on the per-token mean negative log-likelihood; returns the
// loss before the update. Throws DivergedTraining on a non-finite loss.
double mle_step(ModelParams& params, AdamState<ModelParams>& opt,
                const Dataset& ds, const Batch& batch, const TrainConfig& cfg);

struct CombinedCollect {
  Gradients grad_mle;  // ascent, mean over sentences of per-sentence sums
  Gradients grad_rl;
  double loss_mle = 0.0;    // mean per-sentence NLL sum
  double loss_rl = 0.0;     // mean per-sentence -(Sigma adv_t log p_t)
  double mean_reward = 0.0; // mean terminal reward of the sampled hypotheses
  Mat baseline_states;      // decoder states gathered for the baseline fit
  std::vector<double> baseline_targets;
};
CombinedCollect collect_combined(const ModelParams& params,
                                 const BaselineParams* bp, const Dataset& ds,
                                 const Batch& batch, const TrainConfig& cfg,
                                 int max_decode_len, uint64_t step_seed);
CombinedCollect collect_combined_serial(const ModelParams& params,
                                        const BaselineParams* bp,
                                        const Dataset& ds, const Batch& batch,
                                        const TrainConfig& cfg,
                                        int max_decode_len, uint64_t step_seed);

// alpha * g_mle + (1 - alpha) * g_rl, exactly.
Gradients blend_gradients(const Gradients& g_mle, const Gradients& g_rl,
                          double alpha);

struct StepStats {
  double l_mle = 0.0;
  double l_rl = 0.0;
  double l_com = 0.0;
  double mean_reward = 0.0;
  double grad_norm = 0.0;
};

// One combined objective update: sample per cfg.sampling, weight steps by
// advantages, blend with the MLE gradient, single Adam step at lr_rl, then
// update the baseline if enabled.
StepStats combined_step(ModelParams& params, BaselineParams* bp,
                        AdamState<ModelParams>& opt,
                        AdamState<BaselineParams>* baseline_opt,
                        const Dataset& ds, const Batch& batch,
                        const TrainConfig& cfg, int max_decode_len,
                        uint64_t step_seed);

// ---------------------------------------------------------------------------
// Full training loop
// ---------------------------------------------------------------------------

struct TrainData {
  Dataset train;
  Dataset dev;
};

struct EvalRecord {
  int64_t step = 0;
  double l_mle = 0.0;
  double l_rl = 0.0;
  double l_com = 0.0;
  double dev_bleu = 0.0;
  double mean_reward = 0.0;
  double grad_norm = 0.0;
};

struct TrainingReport {
  std::vector<EvalRecord> records;
};

std::string report_to_csv(const TrainingReport& report);
void write_report_csv(const TrainingReport& report, const std::string& path);

struct TrainResult {
  TrainingReport report;
  ModelParams final_params;
  ModelParams best_params;
  double best_dev_bleu = 0.0;
  ModelConfig model_cfg;
  std::optional<BaselineParams> baseline;
};

// Dev-set corpus BLEU with beam decoding.
double evaluate_corpus_bleu(const ModelParams& params, const Dataset& dev,
                            int beam_width, int max_len);

// MLE mode trains from scratch (or from `init` when given). RL mode requires
// `init` (throws MissingInitModel), optionally pretrains the baseline with
// the translation model frozen, then runs combined steps. Dev BLEU is
// evaluated every eval_every steps; the best-dev parameters are kept.
TrainResult train(const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const TrainData& data, const ModelParams* init = nullptr);

// ---------------------------------------------------------------------------
// Experiment config file: flat key=value lines, '#' comments, unknown keys
// are errors.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  TrainConfig train;
  ModelConfig model;
  std::string train_src, train_tgt;
  std::string dev_src, dev_tgt;
  std::string test_src, test_tgt;
  std::string mono_src, mono_tgt;
  std::string vocab_src, vocab_tgt;
  std::string init_checkpoint;
  int corpus_max_len = 80;
  int threads = 0;
  std::vector<std::pair<std::string, std::string>> raw;  // manifest snapshot
};

ExperimentConfig parse_experiment_config_text(const std::string& text);
ExperimentConfig parse_experiment_config(const std::string& path);

}  // namespace seqrl
