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

#include "seqrl/rltrain.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "seqrl/errors.hpp"
#include "seqrl/rng.hpp"

namespace seqrl {

namespace {

// Stream offsets keeping the derived rng streams of one run disjoint.
constexpr uint64_t kEpochShuffleStream = 1'000'000'000ull;
constexpr uint64_t kTrainStepStream = 2'000'000'000ull;
constexpr uint64_t kPretrainStream = 3'000'000'000ull;
constexpr uint64_t kBaselineInitStream = 4'000'000'000ull;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

// ---------------------------------------------------------------------------
// Baseline regressor
// ---------------------------------------------------------------------------

bool BaselineParams::equals(const BaselineParams& other) const {
  bool ok = true;
  visit(
      [&](const auto& a, const auto& b) {
        ok = ok && a.rows() == b.rows() && a.cols() == b.cols() &&
             std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
      },
      *this, other);
  return ok;
}

BaselineParams init_baseline(int input_dim, int hidden_dim, double scale,
                             uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw ConfigError("baseline dimensions must be positive");
  }
  BaselineParams bp;
  bp.w1.resize(hidden_dim, input_dim);
  bp.b1 = Vec::Zero(hidden_dim);
  bp.w2.resize(1, hidden_dim);
  bp.b2 = Vec::Zero(1);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < bp.w1.size(); ++i) {
    bp.w1.data()[i] = uniform_symmetric(rng, scale);
  }
  for (Eigen::Index i = 0; i < bp.w2.size(); ++i) {
    bp.w2.data()[i] = uniform_symmetric(rng, scale);
  }
  return bp;
}

std::vector<double> baseline_predict(const BaselineParams& bp,
                                     const Mat& decoder_states) {
  if (decoder_states.rows() != bp.w1.cols()) {
    throw WeightMismatch("decoder state dim " +
                         std::to_string(decoder_states.rows()) +
                         " does not match baseline input dim " +
                         std::to_string(bp.w1.cols()));
  }
  std::vector<double> out(static_cast<size_t>(decoder_states.cols()));
  for (Eigen::Index i = 0; i < decoder_states.cols(); ++i) {
    Vec hidden =
        ((bp.w1 * decoder_states.col(i) + bp.b1).array().max(0.0)).matrix();
    out[static_cast<size_t>(i)] = (bp.w2 * hidden)(0) + bp.b2(0);
  }
  return out;
}

double baseline_update(BaselineParams& bp, AdamState<BaselineParams>& opt,
                       const AdamConfig& cfg, const Mat& decoder_states,
                       std::span<const double> targets) {
  const auto count = decoder_states.cols();
  if (static_cast<size_t>(count) != targets.size()) {
    throw WeightMismatch(std::to_string(targets.size()) + " targets for " +
                         std::to_string(count) + " states");
  }
  if (count == 0) return 0.0;

  BaselineParams grad;
  BaselineParams::visit(
      [](auto& g, const auto& p) {
        g = std::remove_reference_t<decltype(g)>::Zero(p.rows(), p.cols());
      },
      grad, bp);

  double mse = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Vec pre = bp.w1 * decoder_states.col(i) + bp.b1;
    const Vec hidden = pre.array().max(0.0);
    const double pred = (bp.w2 * hidden)(0) + bp.b2(0);
    const double err = pred - targets[static_cast<size_t>(i)];
    mse += err * err;

    const double d_pred = 2.0 * err / double(count);
    grad.w2.noalias() += d_pred * hidden.transpose();
    grad.b2(0) += d_pred;
    Vec d_hidden = (bp.w2.transpose() * d_pred).col(0);
    d_hidden = (pre.array() > 0.0).select(d_hidden, 0.0);
    grad.w1.noalias() += d_hidden * decoder_states.col(i).transpose();
    grad.b1 += d_hidden;
  }
  mse /= double(count);
  if (!std::isfinite(mse)) throw DivergedTraining("baseline mse is not finite");
  adam_update(bp, grad, opt, cfg);
  return mse;
}

// ---------------------------------------------------------------------------
// Advantages
// ---------------------------------------------------------------------------

void fill_advantages(RewardTrace& trace, bool shaping,
                     const std::vector<double>* baselines) {
  const size_t steps = trace.shaped.size();
  if (baselines != nullptr && baselines->size() != steps) {
    throw WeightMismatch(std::to_string(baselines->size()) +
                         " baselines for " + std::to_string(steps) + " steps");
  }
  trace.baselines = baselines ? *baselines : std::vector<double>();
  trace.advantages.resize(steps);
  for (size_t t = 0; t < steps; ++t) {
    const double base = baselines ? (*baselines)[t] : 0.0;
    trace.advantages[t] = (shaping ? trace.returns[t] : trace.terminal) - base;
  }
}

std::vector<double> reinforce_advantages(const Hypothesis& hyp,
                                         std::span<const int32_t> ref,
                                         const TrainConfig& cfg,
                                         const std::vector<double>* baselines) {
  if (cfg.baseline != (baselines != nullptr)) {
    throw WeightMismatch(cfg.baseline ? "baseline enabled but none supplied"
                                      : "baseline supplied but disabled");
  }
  RewardTrace trace = shaped_rewards(hyp.tokens, ref, cfg.reward);
  fill_advantages(trace, cfg.shaping, baselines);
  return trace.advantages;
}

// ---------------------------------------------------------------------------
// Batch gradient assembly
// ---------------------------------------------------------------------------

namespace {

struct MlePairWork {
  Gradients grad;
  double log_prob = 0.0;
  size_t tokens = 0;
};

MlePairWork mle_pair_work(const ModelParams& params, const SentencePair& pair) {
  TokenSequence target = pair.tgt;
  target.push_back(kEos);
  const std::vector<double> ones(target.size(), 1.0);
  BackwardResult bw = backward(params, pair.src, target, ones);
  return {std::move(bw.grads), bw.objective, target.size()};
}

MleCollect reduce_mle(std::vector<MlePairWork>& slots) {
  MleCollect out;
  out.grad = zeros_like(slots.front().grad);
  for (const MlePairWork& work : slots) {
    out.grad.add_scaled(work.grad, 1.0);
    out.log_prob_sum += work.log_prob;
    out.token_count += work.tokens;
  }
  return out;
}

struct CombinedPairWork {
  Gradients grad_mle;
  Gradients grad_rl;
  double nll_mle = 0.0;
  double rl_loss = 0.0;
  double reward = 0.0;
  Mat states;
  std::vector<double> targets;
};

CombinedPairWork combined_pair_work(const ModelParams& params,
                                    const BaselineParams* bp,
                                    const SentencePair& pair,
                                    const TrainConfig& cfg, int max_decode_len,
                                    uint64_t sentence_seed) {
  CombinedPairWork work;

  MlePairWork mle = mle_pair_work(params, pair);
  work.grad_mle = std::move(mle.grad);
  work.nll_mle = -mle.log_prob;

  std::vector<Hypothesis> hyps;
  if (cfg.sampling == SamplingMode::kMultinomial) {
    Rng rng(sentence_seed);
    hyps.push_back(multinomial_sample(params, pair.src, max_decode_len, rng));
  } else {
    auto beams =
        beam_search(params, pair.src, cfg.sample_beam_width, max_decode_len);
    if (cfg.beam_all_k) {
      hyps = std::move(beams);
    } else {
      hyps.push_back(std::move(beams.front()));
    }
  }

  work.grad_rl = zeros_like(params);
  const double hyp_weight = 1.0 / double(hyps.size());
  const bool eos_exists = kEos < params.tgt_vocab_size();
  std::vector<Mat> state_blocks;
  for (const Hypothesis& hyp : hyps) {
    RewardTrace trace = shaped_rewards(hyp.tokens, pair.tgt, cfg.reward);
    std::vector<double> baseline_values;
    const std::vector<double>* baselines = nullptr;
    if (bp != nullptr) {
      baseline_values = baseline_predict(*bp, hyp.decoder_states);
      baselines = &baseline_values;
    }
    fill_advantages(trace, cfg.shaping, baselines);

    TokenSequence target = hyp.tokens;
    std::vector<double> weights = trace.advantages;
    if (!hyp.terminated && eos_exists) {
      // The appended EOS was never sampled; zero weight keeps the
      // estimator aligned with the sampling distribution.
      target.push_back(kEos);
      weights.push_back(0.0);
    }
    BackwardResult bw = backward(params, pair.src, target, weights);
    work.grad_rl.add_scaled(bw.grads, hyp_weight);
    work.rl_loss += -bw.objective * hyp_weight;
    work.reward += trace.terminal * hyp_weight;

    if (bp != nullptr) {
      state_blocks.push_back(hyp.decoder_states);
      if (cfg.shaping) {
        work.targets.insert(work.targets.end(), trace.returns.begin(),
                            trace.returns.end());
      } else {
        work.targets.insert(work.targets.end(), trace.shaped.size(),
                            trace.terminal);
      }
    }
  }
  if (!state_blocks.empty()) {
    Eigen::Index cols = 0;
    for (const Mat& block : state_blocks) cols += block.cols();
    work.states.resize(params.hidden_dim(), cols);
    Eigen::Index at = 0;
    for (const Mat& block : state_blocks) {
      work.states.middleCols(at, block.cols()) = block;
      at += block.cols();
    }
  }
  return work;
}

CombinedCollect reduce_combined(const ModelParams& params,
                                std::vector<CombinedPairWork>& slots) {
  CombinedCollect out;
  out.grad_mle = zeros_like(params);
  out.grad_rl = zeros_like(params);
  const double inv = 1.0 / double(slots.size());
  Eigen::Index state_cols = 0;
  for (const CombinedPairWork& work : slots) state_cols += work.states.cols();
  out.baseline_states.resize(params.hidden_dim(), state_cols);
  Eigen::Index at = 0;
  for (const CombinedPairWork& work : slots) {
    out.grad_mle.add_scaled(work.grad_mle, inv);
    out.grad_rl.add_scaled(work.grad_rl, inv);
    out.loss_mle += work.nll_mle * inv;
    out.loss_rl += work.rl_loss * inv;
    out.mean_reward += work.reward * inv;
    if (work.states.cols() > 0) {
      out.baseline_states.middleCols(at, work.states.cols()) = work.states;
      at += work.states.cols();
      out.baseline_targets.insert(out.baseline_targets.end(),
                                  work.targets.begin(), work.targets.end());
    }
  }
  return out;
}

void check_batch(const Dataset& ds, const Batch& batch) {
  if (batch.empty()) throw ConfigError("batch is empty");
  for (size_t idx : batch) {
    if (idx >= ds.pairs.size()) {
      throw ConfigError("batch index out of range");
    }
  }
}

}  // namespace

MleCollect collect_mle(const ModelParams& params, const Dataset& ds,
                       const Batch& batch) {
  check_batch(ds, batch);
  std::vector<MlePairWork> slots(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(batch.size()); ++i) {
    slots[static_cast<size_t>(i)] =
        mle_pair_work(params, ds.pairs[batch[static_cast<size_t>(i)]]);
  }
  return reduce_mle(slots);
}

MleCollect collect_mle_serial(const ModelParams& params, const Dataset& ds,
                              const Batch& batch) {
  check_batch(ds, batch);
  std::vector<MlePairWork> slots(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    slots[i] = mle_pair_work(params, ds.pairs[batch[i]]);
  }
  return reduce_mle(slots);
}

double mle_step(ModelParams& params, AdamState<ModelParams>& opt,
                const Dataset& ds, const Batch& batch, const TrainConfig& cfg) {
  MleCollect collect = collect_mle(params, ds, batch);
  const double loss =
      -collect.log_prob_sum / static_cast<double>(collect.token_count);
  if (!std::isfinite(loss)) {
    throw DivergedTraining("mle loss is not finite");
  }
  collect.grad.scale(-1.0 / static_cast<double>(collect.token_count));
  adam_update(params, collect.grad, opt,
              {cfg.lr_mle, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  return loss;
}

CombinedCollect collect_combined(const ModelParams& params,
                                 const BaselineParams* bp, const Dataset& ds,
                                 const Batch& batch, const TrainConfig& cfg,
                                 int max_decode_len, uint64_t step_seed) {
  check_batch(ds, batch);
  std::vector<CombinedPairWork> slots(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(batch.size()); ++i) {
    slots[static_cast<size_t>(i)] = combined_pair_work(
        params, bp, ds.pairs[batch[static_cast<size_t>(i)]], cfg,
        max_decode_len, stream_seed(step_seed, static_cast<uint64_t>(i)));
  }
  return reduce_combined(params, slots);
}

CombinedCollect collect_combined_serial(const ModelParams& params,
                                        const BaselineParams* bp,
                                        const Dataset& ds, const Batch& batch,
                                        const TrainConfig& cfg,
                                        int max_decode_len,
                                        uint64_t step_seed) {
  check_batch(ds, batch);
  std::vector<CombinedPairWork> slots(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    slots[i] = combined_pair_work(params, bp, ds.pairs[batch[i]], cfg,
                                  max_decode_len, stream_seed(step_seed, i));
  }
  return reduce_combined(params, slots);
}

Gradients blend_gradients(const Gradients& g_mle, const Gradients& g_rl,
                          double alpha) {
  Gradients out = zeros_like(g_mle);
  ModelParams::visit(
      [alpha](auto& dst, const auto& a, const auto& b) {
        dst = alpha * a + (1.0 - alpha) * b;
      },
      out, g_mle, g_rl);
  return out;
}

StepStats combined_step(ModelParams& params, BaselineParams* bp,
                        AdamState<ModelParams>& opt,
                        AdamState<BaselineParams>* baseline_opt,
                        const Dataset& ds, const Batch& batch,
                        const TrainConfig& cfg, int max_decode_len,
                        uint64_t step_seed) {
  if (bp != nullptr && baseline_opt == nullptr) {
    throw ConfigError("baseline parameters supplied without optimizer state");
  }
  CombinedCollect collect =
      collect_combined(params, bp, ds, batch, cfg, max_decode_len, step_seed);
  Gradients ascent = blend_gradients(collect.grad_mle, collect.grad_rl,
                                     cfg.alpha);

  StepStats stats;
  stats.l_mle = collect.loss_mle;
  stats.l_rl = collect.loss_rl;
  stats.l_com = cfg.alpha * collect.loss_mle + (1.0 - cfg.alpha) * collect.loss_rl;
  stats.mean_reward = collect.mean_reward;
  stats.grad_norm = std::sqrt(ascent.squared_norm());
  if (!std::isfinite(stats.l_com) || !ascent.all_finite()) {
    throw DivergedTraining("combined objective diverged");
  }

  ascent.scale(-1.0);
  adam_update(params, ascent, opt,
              {cfg.lr_rl, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});

  if (bp != nullptr && collect.baseline_states.cols() > 0) {
    baseline_update(*bp, *baseline_opt,
                    {cfg.lr_baseline, cfg.adam_beta1, cfg.adam_beta2,
                     cfg.adam_eps},
                    collect.baseline_states, collect.baseline_targets);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

double evaluate_corpus_bleu(const ModelParams& params, const Dataset& dev,
                            int beam_width, int max_len) {
  if (dev.pairs.empty()) return quiet_nan();
  std::vector<TokenSequence> srcs, refs;
  srcs.reserve(dev.pairs.size());
  refs.reserve(dev.pairs.size());
  for (const auto& pair : dev.pairs) {
    srcs.push_back(pair.src);
    refs.push_back(pair.tgt);
  }
  const auto hyps = translate_corpus(params, srcs, beam_width, max_len);
  std::vector<TokenSequence> contents;
  contents.reserve(hyps.size());
  for (const auto& hyp : hyps) contents.push_back(content_tokens(hyp));
  return corpus_bleu(contents, refs);
}

namespace {

// Sampling-only pass used while the translation model is frozen during
// baseline pretraining.
void pretrain_baseline(const ModelParams& params, BaselineParams& bp,
                       AdamState<BaselineParams>& opt, const TrainData& data,
                       const TrainConfig& cfg, int max_decode_len) {
  const AdamConfig adam_cfg{cfg.lr_baseline, cfg.adam_beta1, cfg.adam_beta2,
                            cfg.adam_eps};
  int done = 0;
  uint64_t epoch = 0;
  while (done < cfg.baseline_pretrain_steps) {
    const auto batches =
        make_batches(data.train, cfg.batch_max_tokens,
                     stream_seed(cfg.seed, kPretrainStream + epoch));
    if (batches.empty()) return;
    ++epoch;
    for (const Batch& batch : batches) {
      const uint64_t step_seed =
          stream_seed(cfg.seed, kPretrainStream + 500'000'000ull +
                                    static_cast<uint64_t>(done));
      CombinedCollect collect = collect_combined(
          params, &bp, data.train, batch, cfg, max_decode_len, step_seed);
      if (collect.baseline_states.cols() > 0) {
        baseline_update(bp, opt, adam_cfg, collect.baseline_states,
                        collect.baseline_targets);
      }
      if (++done >= cfg.baseline_pretrain_steps) break;
    }
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const TrainData& data, const ModelParams* init) {
  if (cfg.mode == TrainMode::kRl && init == nullptr) {
    throw MissingInitModel("RL training requires an initial checkpoint");
  }
  TrainResult result;
  result.model_cfg = model_cfg;
  result.final_params = init != nullptr ? *init : init_model(model_cfg);
  result.best_params = result.final_params;
  result.best_dev_bleu = quiet_nan();
  ModelParams& params = result.final_params;

  if (cfg.max_epochs == 0 || data.train.pairs.empty()) {
    return result;
  }

  AdamState<ModelParams> opt;
  AdamState<BaselineParams> baseline_opt;
  BaselineParams* bp = nullptr;
  if (cfg.mode == TrainMode::kRl && cfg.baseline) {
    const int hidden =
        cfg.baseline_hidden > 0 ? cfg.baseline_hidden : model_cfg.hidden_dim;
    result.baseline = init_baseline(model_cfg.hidden_dim, hidden, 0.1,
                                    stream_seed(cfg.seed, kBaselineInitStream));
    bp = &*result.baseline;
    if (cfg.baseline_pretrain_steps > 0) {
      pretrain_baseline(params, *bp, baseline_opt, data, cfg,
                        model_cfg.max_decode_len);
    }
  }

  const bool rl = cfg.mode == TrainMode::kRl;
  int64_t step = 0;
  bool stop = false;
  double win_mle = 0.0, win_rl = 0.0, win_com = 0.0, win_reward = 0.0,
         win_norm = 0.0;
  int64_t win_count = 0;
  int64_t last_recorded = -1;

  auto record_eval = [&]() {
    const double inv = win_count > 0 ? 1.0 / double(win_count) : 0.0;
    EvalRecord rec;
    rec.step = step;
    rec.dev_bleu = evaluate_corpus_bleu(params, data.dev, cfg.eval_beam_width,
                                        model_cfg.max_decode_len);
    rec.l_mle = win_count > 0 ? win_mle * inv : quiet_nan();
    rec.l_rl = rl && win_count > 0 ? win_rl * inv : quiet_nan();
    rec.l_com = rl && win_count > 0 ? win_com * inv : quiet_nan();
    rec.mean_reward = rl && win_count > 0 ? win_reward * inv : quiet_nan();
    rec.grad_norm = win_count > 0 ? win_norm * inv : quiet_nan();
    result.report.records.push_back(rec);
    last_recorded = step;
    win_mle = win_rl = win_com = win_reward = win_norm = 0.0;
    win_count = 0;
    if (!std::isnan(rec.dev_bleu) &&
        (std::isnan(result.best_dev_bleu) ||
         rec.dev_bleu > result.best_dev_bleu)) {
      result.best_dev_bleu = rec.dev_bleu;
      result.best_params = params;
    }
  };

  for (int epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    const auto batches = make_batches(
        data.train, cfg.batch_max_tokens,
        stream_seed(cfg.seed, kEpochShuffleStream + uint64_t(epoch)));
    for (const Batch& batch : batches) {
      ++step;
      if (rl) {
        const StepStats stats = combined_step(
            params, bp, opt, bp != nullptr ? &baseline_opt : nullptr,
            data.train, batch, cfg, model_cfg.max_decode_len,
            stream_seed(cfg.seed, kTrainStepStream + uint64_t(step)));
        win_mle += stats.l_mle;
        win_rl += stats.l_rl;
        win_com += stats.l_com;
        win_reward += stats.mean_reward;
        win_norm += stats.grad_norm;
      } else {
        MleCollect collect = collect_mle(params, data.train, batch);
        const double loss =
            -collect.log_prob_sum / double(collect.token_count);
        if (!std::isfinite(loss)) {
          throw DivergedTraining("mle loss is not finite");
        }
        collect.grad.scale(-1.0 / double(collect.token_count));
        win_norm += std::sqrt(collect.grad.squared_norm());
        adam_update(params, collect.grad, opt,
                    {cfg.lr_mle, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
        win_mle += loss;
      }
      ++win_count;
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) record_eval();
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        stop = true;
        break;
      }
    }
  }
  if (step > 0 && last_recorded != step) record_eval();

  if (std::isnan(result.best_dev_bleu)) {
    result.best_params = params;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Report CSV
// ---------------------------------------------------------------------------

std::string report_to_csv(const TrainingReport& report) {
  std::string out = "step,l_mle,l_rl,l_com,dev_bleu,mean_reward,grad_norm\n";
  char buf[256];
  for (const EvalRecord& rec : report.records) {
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(rec.step), rec.l_mle, rec.l_rl,
                  rec.l_com, rec.dev_bleu, rec.mean_reward, rec.grad_norm);
    out += buf;
  }
  return out;
}

void write_report_csv(const TrainingReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << report_to_csv(report);
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

int to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + " needs an integer, got '" + value + "'");
  }
}

int64_t to_int64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + " needs an integer, got '" + value + "'");
  }
}

uint64_t to_uint64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + " needs an unsigned integer, got '" +
                      value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + " needs a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("key " + key + " needs a boolean, got '" + value + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    std::string line = raw_line;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("malformed config line '" + trim(raw_line) + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line with empty key");
    cfg.raw.emplace_back(key, value);

    if (key == "mode") {
      if (value == "mle") {
        cfg.train.mode = TrainMode::kMle;
      } else if (value == "rl") {
        cfg.train.mode = TrainMode::kRl;
      } else {
        throw ConfigError("key mode must be 'mle' or 'rl', got '" + value + "'");
      }
    } else if (key == "alpha") {
      cfg.train.alpha = to_double(key, value);
      if (cfg.train.alpha < 0.0 || cfg.train.alpha > 1.0) {
        throw ConfigError("key alpha must lie in [0, 1]");
      }
    } else if (key == "sampling") {
      if (value == "multinomial") {
        cfg.train.sampling = SamplingMode::kMultinomial;
      } else if (value == "beam") {
        cfg.train.sampling = SamplingMode::kBeam;
      } else {
        throw ConfigError("key sampling must be 'multinomial' or 'beam'");
      }
    } else if (key == "sample_beam_width") {
      cfg.train.sample_beam_width = to_int(key, value);
    } else if (key == "beam_all_k") {
      cfg.train.beam_all_k = to_bool(key, value);
    } else if (key == "shaping") {
      cfg.train.shaping = to_bool(key, value);
    } else if (key == "baseline") {
      cfg.train.baseline = to_bool(key, value);
    } else if (key == "lr_mle") {
      cfg.train.lr_mle = to_double(key, value);
      if (cfg.train.lr_mle <= 0) throw ConfigError("key lr_mle must be > 0");
    } else if (key == "lr_rl") {
      cfg.train.lr_rl = to_double(key, value);
      if (cfg.train.lr_rl <= 0) throw ConfigError("key lr_rl must be > 0");
    } else if (key == "lr_baseline") {
      cfg.train.lr_baseline = to_double(key, value);
      if (cfg.train.lr_baseline <= 0) {
        throw ConfigError("key lr_baseline must be > 0");
      }
    } else if (key == "baseline_pretrain_steps") {
      cfg.train.baseline_pretrain_steps = to_int(key, value);
    } else if (key == "baseline_hidden") {
      cfg.train.baseline_hidden = to_int(key, value);
    } else if (key == "adam_beta1") {
      cfg.train.adam_beta1 = to_double(key, value);
    } else if (key == "adam_beta2") {
      cfg.train.adam_beta2 = to_double(key, value);
    } else if (key == "adam_eps") {
      cfg.train.adam_eps = to_double(key, value);
    } else if (key == "max_epochs") {
      cfg.train.max_epochs = to_int(key, value);
    } else if (key == "max_steps") {
      cfg.train.max_steps = to_int64(key, value);
    } else if (key == "eval_every") {
      cfg.train.eval_every = to_int(key, value);
    } else if (key == "eval_beam_width") {
      cfg.train.eval_beam_width = to_int(key, value);
    } else if (key == "batch_max_tokens") {
      cfg.train.batch_max_tokens = static_cast<size_t>(to_int64(key, value));
    } else if (key == "seed") {
      cfg.train.seed = to_uint64(key, value);
    } else if (key == "bleu_max_order") {
      cfg.train.reward.max_order = to_int(key, value);
    } else if (key == "bleu_multiply_ref_len") {
      cfg.train.reward.multiply_by_ref_len = to_bool(key, value);
    } else if (key == "embed_dim") {
      cfg.model.embed_dim = to_int(key, value);
    } else if (key == "hidden_dim") {
      cfg.model.hidden_dim = to_int(key, value);
    } else if (key == "max_decode_len") {
      cfg.model.max_decode_len = to_int(key, value);
    } else if (key == "init_scale") {
      cfg.model.param_init_scale = to_double(key, value);
    } else if (key == "model_seed") {
      cfg.model.seed = to_uint64(key, value);
    } else if (key == "train_src") {
      cfg.train_src = value;
    } else if (key == "train_tgt") {
      cfg.train_tgt = value;
    } else if (key == "dev_src") {
      cfg.dev_src = value;
    } else if (key == "dev_tgt") {
      cfg.dev_tgt = value;
    } else if (key == "test_src") {
      cfg.test_src = value;
    } else if (key == "test_tgt") {
      cfg.test_tgt = value;
    } else if (key == "mono_src") {
      cfg.mono_src = value;
    } else if (key == "mono_tgt") {
      cfg.mono_tgt = value;
    } else if (key == "vocab_src") {
      cfg.vocab_src = value;
    } else if (key == "vocab_tgt") {
      cfg.vocab_tgt = value;
    } else if (key == "init_checkpoint") {
      cfg.init_checkpoint = value;
    } else if (key == "max_len") {
      cfg.corpus_max_len = to_int(key, value);
    } else if (key == "threads") {
      cfg.threads = to_int(key, value);
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config_text(ss.str());
}

}  // namespace seqrl
