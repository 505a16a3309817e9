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

#include "seqrl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "seqrl/errors.hpp"
#include "seqrl/oracle.hpp"
#include "seqrl/rng.hpp"
#include "seqrl/semisup.hpp"

namespace seqrl::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

struct RunContext {
  std::string command;
  std::string out_dir = "seqrl-out";
  std::string config_path;
  const ExperimentConfig* config = nullptr;
  uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> data_files;
  std::vector<std::string> outputs;
};

void write_manifest(const RunContext& ctx) {
  fs::create_directories(ctx.out_dir);
  Json manifest;
  manifest["command"] = ctx.command;
  manifest["git_describe"] = SEQRL_GIT_DESCRIBE;
  manifest["seed"] = ctx.seed;
  manifest["threads"] = ctx.threads;
  Json config = Json::object();
  if (ctx.config != nullptr) {
    for (const auto& [key, value] : ctx.config->raw) config[key] = value;
  }
  manifest["config"] = config;
  if (!ctx.config_path.empty()) manifest["config_path"] = ctx.config_path;
  Json hashes = Json::object();
  for (const auto& path : ctx.data_files) hashes[path] = fnv1a_hex(path);
  manifest["data_hashes"] = hashes;
  manifest["outputs"] = ctx.outputs;
  std::ofstream out(fs::path(ctx.out_dir) / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + ctx.out_dir);
  out << manifest.dump(2) << '\n';
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string require_key(const std::string& value, const char* key) {
  if (value.empty()) {
    throw ConfigError(std::string("missing config key: ") + key);
  }
  return value;
}

struct LoadedData {
  std::shared_ptr<const Vocabulary> src_vocab;
  std::shared_ptr<const Vocabulary> tgt_vocab;
  TrainData data;
  Dataset test;
};

LoadedData load_experiment_data(const ExperimentConfig& cfg, RunContext& ctx) {
  LoadedData loaded;
  const auto src_vocab_path = require_key(cfg.vocab_src, "vocab_src");
  const auto tgt_vocab_path = require_key(cfg.vocab_tgt, "vocab_tgt");
  loaded.src_vocab =
      std::make_shared<const Vocabulary>(load_vocab(src_vocab_path));
  loaded.tgt_vocab =
      std::make_shared<const Vocabulary>(load_vocab(tgt_vocab_path));
  ctx.data_files.push_back(src_vocab_path);
  ctx.data_files.push_back(tgt_vocab_path);

  const auto train_src = require_key(cfg.train_src, "train_src");
  const auto train_tgt = require_key(cfg.train_tgt, "train_tgt");
  loaded.data.train = load_parallel(train_src, train_tgt, loaded.src_vocab,
                                    loaded.tgt_vocab, cfg.corpus_max_len);
  ctx.data_files.push_back(train_src);
  ctx.data_files.push_back(train_tgt);

  if (!cfg.dev_src.empty() || !cfg.dev_tgt.empty()) {
    loaded.data.dev =
        load_parallel(require_key(cfg.dev_src, "dev_src"),
                      require_key(cfg.dev_tgt, "dev_tgt"), loaded.src_vocab,
                      loaded.tgt_vocab, cfg.corpus_max_len);
    ctx.data_files.push_back(cfg.dev_src);
    ctx.data_files.push_back(cfg.dev_tgt);
  } else {
    loaded.data.dev.src_vocab = loaded.src_vocab;
    loaded.data.dev.tgt_vocab = loaded.tgt_vocab;
  }
  if (!cfg.test_src.empty() || !cfg.test_tgt.empty()) {
    loaded.test =
        load_parallel(require_key(cfg.test_src, "test_src"),
                      require_key(cfg.test_tgt, "test_tgt"), loaded.src_vocab,
                      loaded.tgt_vocab, cfg.corpus_max_len);
    ctx.data_files.push_back(cfg.test_src);
    ctx.data_files.push_back(cfg.test_tgt);
  }
  return loaded;
}

// Model config plus initial parameters for a training run. RL runs load both
// from the init checkpoint; MLE runs build the config from config keys and
// may warm-start from an optional checkpoint.
struct ModelSetup {
  ModelConfig cfg;
  std::optional<ModelParams> init;
};

ModelSetup resolve_model(const ExperimentConfig& cfg, const LoadedData& data,
                         RunContext& ctx) {
  ModelSetup setup;
  if (!cfg.init_checkpoint.empty()) {
    auto [params, model_cfg] = load_checkpoint(cfg.init_checkpoint);
    ctx.data_files.push_back(cfg.init_checkpoint);
    if (model_cfg.src_vocab_size != data.src_vocab->size() ||
        model_cfg.tgt_vocab_size != data.tgt_vocab->size()) {
      throw ConfigError(
          "init_checkpoint vocabulary sizes do not match the vocab files");
    }
    setup.cfg = model_cfg;
    setup.init = std::move(params);
    return setup;
  }
  setup.cfg.src_vocab_size = data.src_vocab->size();
  setup.cfg.tgt_vocab_size = data.tgt_vocab->size();
  setup.cfg.embed_dim = cfg.model.embed_dim;
  setup.cfg.hidden_dim = cfg.model.hidden_dim;
  setup.cfg.max_decode_len = cfg.model.max_decode_len;
  setup.cfg.param_init_scale = cfg.model.param_init_scale;
  setup.cfg.seed = cfg.model.seed;
  if (setup.cfg.embed_dim < 1) throw ConfigError("missing config key: embed_dim");
  if (setup.cfg.hidden_dim < 1) {
    throw ConfigError("missing config key: hidden_dim");
  }
  return setup;
}

int do_train(const std::string& command, ExperimentConfig cfg,
             RunContext& ctx) {
  cfg.train.mode = command == "train-rl" ? TrainMode::kRl : TrainMode::kMle;
  if (cfg.train.mode == TrainMode::kRl && cfg.init_checkpoint.empty()) {
    throw ConfigError("missing config key: init_checkpoint");
  }
  LoadedData data = load_experiment_data(cfg, ctx);
  ModelSetup setup = resolve_model(cfg, data, ctx);
  ctx.seed = cfg.train.seed;

  const TrainResult result =
      train(cfg.train, setup.cfg, data.data,
            setup.init.has_value() ? &*setup.init : nullptr);

  fs::create_directories(ctx.out_dir);
  const auto csv_path = (fs::path(ctx.out_dir) / "metrics.csv").string();
  const auto best_path = (fs::path(ctx.out_dir) / "model_best.ckpt").string();
  const auto final_path = (fs::path(ctx.out_dir) / "model_final.ckpt").string();
  write_report_csv(result.report, csv_path);
  save_checkpoint(result.best_params, setup.cfg, best_path);
  save_checkpoint(result.final_params, setup.cfg, final_path);
  ctx.outputs = {csv_path, best_path, final_path};

  if (!data.test.pairs.empty()) {
    const double test_bleu =
        evaluate_corpus_bleu(result.best_params, data.test,
                             cfg.train.eval_beam_width, setup.cfg.max_decode_len);
    std::printf("test_bleu %.2f\n", test_bleu);
  }
  std::printf("best_dev_bleu %.2f\n", result.best_dev_bleu);
  write_manifest(ctx);
  return 0;
}

int do_sweep_alpha(ExperimentConfig cfg, RunContext& ctx) {
  static const double kAlphas[] = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  cfg.train.mode = TrainMode::kRl;
  if (cfg.init_checkpoint.empty()) {
    throw ConfigError("missing config key: init_checkpoint");
  }
  LoadedData data = load_experiment_data(cfg, ctx);
  ModelSetup setup = resolve_model(cfg, data, ctx);
  ctx.seed = cfg.train.seed;

  fs::create_directories(ctx.out_dir);
  std::string csv = "alpha,dev_bleu,test_bleu\n";
  for (const double alpha : kAlphas) {
    TrainConfig run_cfg = cfg.train;
    run_cfg.alpha = alpha;
    const TrainResult result =
        train(run_cfg, setup.cfg, data.data, &*setup.init);
    double test_bleu = std::nan("");
    if (!data.test.pairs.empty()) {
      test_bleu = evaluate_corpus_bleu(result.best_params, data.test,
                                       cfg.train.eval_beam_width,
                                       setup.cfg.max_decode_len);
    }
    char row[128];
    std::snprintf(row, sizeof(row), "%.10g,%.10g,%.10g\n", alpha,
                  result.best_dev_bleu, test_bleu);
    csv += row;
    char name[64];
    std::snprintf(name, sizeof(name), "metrics_alpha_%.1f.csv", alpha);
    const auto per_alpha = (fs::path(ctx.out_dir) / name).string();
    write_report_csv(result.report, per_alpha);
    ctx.outputs.push_back(per_alpha);
  }
  const auto sweep_path = (fs::path(ctx.out_dir) / "sweep.csv").string();
  std::ofstream out(sweep_path);
  if (!out) throw IoError("cannot write " + sweep_path);
  out << csv;
  ctx.outputs.push_back(sweep_path);
  write_manifest(ctx);
  std::printf("%s", csv.c_str());
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Verify suites
// ---------------------------------------------------------------------------

namespace {

ModelParams random_tiny_model(int32_t v_src, int32_t v_tgt, int32_t dims,
                              uint64_t seed, double scale = 0.5) {
  ModelConfig cfg;
  cfg.src_vocab_size = v_src;
  cfg.tgt_vocab_size = v_tgt;
  cfg.embed_dim = dims;
  cfg.hidden_dim = dims;
  cfg.max_decode_len = 8;
  cfg.param_init_scale = scale;
  cfg.seed = seed;
  ModelParams params = init_model(cfg);
  // Random biases as well, so the checks cover every tensor.
  Rng rng(mix64(seed));
  params.b_enc = params.b_enc.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  params.b_dec = params.b_dec.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  params.b_out = params.b_out.unaryExpr(
      [&](double) { return uniform_symmetric(rng, scale); });
  return params;
}

bool suite_enumeration_mass(std::ostream& out) {
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    const ModelParams params = random_tiny_model(5, 4, 3, seed);
    const TokenSequence src = {4, 1};
    const auto space = enumerate_sequences(params, src, 3);
    worst = std::max(worst, std::fabs(space.total_mass - 1.0));
  }
  out << (worst <= 1e-9 ? "ok  " : "FAIL") << " enumeration-mass (max |mass-1| = "
      << worst << ")\n";
  return worst <= 1e-9;
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(params.coordinate_count());
  params.for_each_tensor([&](const char*, const auto& t) {
    flat.insert(flat.end(), t.data(), t.data() + t.size());
  });
  return flat;
}

bool suite_exact_gradient_fd(std::ostream& out) {
  const TokenSequence src = {3, 4};
  const TokenSequence ref = {3};
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    ModelParams params = random_tiny_model(5, 4, 3, 100 + seed);
    const std::vector<double> exact =
        flatten(exact_policy_gradient(params, src, ref, 2));
    const double eps = 1e-5;
    size_t index = 0;
    params.for_each_tensor([&](const char*, auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i, ++index) {
        const double saved = t.data()[i];
        t.data()[i] = saved + eps;
        const double plus = expected_reward(params, src, ref, 2);
        t.data()[i] = saved - eps;
        const double minus = expected_reward(params, src, ref, 2);
        t.data()[i] = saved;
        const double numeric = (plus - minus) / (2 * eps);
        const double analytic = exact[index];
        const double denom =
            std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
        worst = std::max(worst, std::fabs(numeric - analytic) / denom);
      }
    });
  }
  out << (worst <= 1e-4 ? "ok  " : "FAIL")
      << " exact-gradient-vs-fd (max rel err = " << worst << ")\n";
  return worst <= 1e-4;
}

bool suite_mc_consistency(std::ostream& out) {
  const ModelParams params = random_tiny_model(5, 4, 3, 42);
  const TokenSequence src = {2, 3};
  const TokenSequence ref = {0, 1};
  const double exact = expected_reward(params, src, ref, 3);
  const int draws = 50'000;
  double sum = 0.0, sum_sq = 0.0;
  Rng rng(99);
  for (int i = 0; i < draws; ++i) {
    const Hypothesis hyp = multinomial_sample(params, src, 3, rng);
    const double reward = sentence_reward(content_tokens(hyp), ref);
    sum += reward;
    sum_sq += reward * reward;
  }
  const double mean = sum / draws;
  const double var = std::max(0.0, sum_sq / draws - mean * mean);
  const double se = std::sqrt(var / draws);
  const double gap = std::fabs(mean - exact);
  const bool ok = gap <= 3.0 * se + 1e-12;
  out << (ok ? "ok  " : "FAIL") << " expected-reward-monte-carlo (|gap| = "
      << gap << ", 3se = " << 3.0 * se << ")\n";
  return ok;
}

bool suite_beam_exhaustive(std::ostream& out) {
  int agree = 0;
  const int trials = 25;
  for (uint64_t seed = 1; seed <= trials; ++seed) {
    const ModelParams params = random_tiny_model(5, 4, 3, 200 + seed);
    const TokenSequence src = {1, 4};
    const Hypothesis best = exhaustive_best(params, src, 3);
    const auto beams = beam_search(params, src, 64, 3);
    if (beams.front().tokens == best.tokens &&
        std::fabs(beams.front().score - best.score) <= 1e-9) {
      ++agree;
    }
  }
  out << (agree == trials ? "ok  " : "FAIL") << " beam-vs-exhaustive (" << agree
      << "/" << trials << ")\n";
  return agree == trials;
}

bool suite_baseline_unbiasedness(std::ostream& out) {
  double worst = 0.0;
  for (uint64_t trial = 0; trial < 5; ++trial) {
    const ModelParams params = random_tiny_model(5, 4, 3, 300 + trial);
    const TokenSequence src = {2, 4};
    const int max_len = 3;
    Rng rng(400 + trial);
    std::vector<double> baseline(max_len);
    for (double& b : baseline) b = uniform_symmetric(rng, 2.0);

    Gradients total = zeros_like(params);
    const auto space = enumerate_sequences(params, src, max_len);
    for (const auto& seq : space.sequences) {
      TokenSequence target = seq.tokens;
      std::vector<double> weights(target.size());
      for (size_t t = 0; t < target.size(); ++t) weights[t] = baseline[t];
      if (!seq.terminated) {
        target.push_back(kEos);
        weights.push_back(0.0);
      }
      const BackwardResult bw = backward(params, src, target, weights);
      total.add_scaled(bw.grads, seq.probability);
    }
    double max_abs = 0.0;
    total.for_each_tensor([&](const char*, const auto& t) {
      max_abs = std::max(max_abs, t.template lpNorm<Eigen::Infinity>());
    });
    worst = std::max(worst, max_abs);
  }
  out << (worst <= 1e-8 ? "ok  " : "FAIL")
      << " baseline-subtraction-unbiasedness (max |coord| = " << worst << ")\n";
  return worst <= 1e-8;
}

bool suite_model_gradient_fd(std::ostream& out) {
  double worst = 0.0;
  Rng rng(7);
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const ModelParams params = random_tiny_model(6, 5, 3, 500 + seed);
    const TokenSequence src = {4, 5, 1};
    const TokenSequence tgt = {3, 4, kEos};
    std::vector<double> weights(tgt.size());
    for (double& w : weights) w = uniform_symmetric(rng, 2.0);
    const auto check =
        finite_difference_check(params, src, tgt, weights, 1e-5, 400);
    worst = std::max(worst, check.max_rel_err);
  }
  out << (worst <= 1e-4 ? "ok  " : "FAIL")
      << " model-gradient-vs-fd (max rel err = " << worst << ")\n";
  return worst <= 1e-4;
}

bool suite_reward_telescoping(std::ostream& out) {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t hyp_len = 1 + uniform_below(rng, 8);
    const size_t ref_len = 1 + uniform_below(rng, 8);
    TokenSequence hyp(hyp_len), ref(ref_len);
    for (auto& t : hyp) t = static_cast<int32_t>(4 + uniform_below(rng, 5));
    for (auto& t : ref) t = static_cast<int32_t>(4 + uniform_below(rng, 5));
    if (uniform_below(rng, 2) == 0) hyp.push_back(kEos);
    const RewardTrace trace = shaped_rewards(hyp, ref);
    double total = 0.0;
    for (double r : trace.shaped) total += r;
    worst = std::max(worst, std::fabs(total - trace.terminal));
  }
  out << (worst <= 1e-9 ? "ok  " : "FAIL")
      << " reward-telescoping (max |sum r_t - R| = " << worst << ")\n";
  return worst <= 1e-9;
}

}  // namespace

bool run_verify_suites(std::ostream& out) {
  bool ok = true;
  ok &= suite_enumeration_mass(out);
  ok &= suite_exact_gradient_fd(out);
  ok &= suite_mc_consistency(out);
  ok &= suite_beam_exhaustive(out);
  ok &= suite_baseline_unbiasedness(out);
  ok &= suite_model_gradient_fd(out);
  ok &= suite_reward_telescoping(out);
  out << (ok ? "all suites passed\n" : "some suites FAILED\n");
  return ok;
}

// ---------------------------------------------------------------------------
// Argument parsing and dispatch
// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args) {
  CLI::App app{"sequence-level reinforcement training for tiny translation models"};
  app.require_subcommand(1);

  std::string out_dir = "seqrl-out";
  std::string config_path;
  int64_t seed_flag = -1;
  int threads = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker thread cap (0 = default)");
  };

  // make-vocab
  auto* sub_vocab = app.add_subcommand("make-vocab", "build a vocabulary file");
  std::string mv_input, mv_output;
  int mv_min_count = 1, mv_max_size = std::numeric_limits<int32_t>::max();
  sub_vocab->add_option("--input", mv_input)->required();
  sub_vocab->add_option("--output", mv_output)->required();
  sub_vocab->add_option("--min-count", mv_min_count);
  sub_vocab->add_option("--max-size", mv_max_size);
  add_common(sub_vocab);

  // train-mle / train-rl / sweep-alpha
  auto* sub_mle = app.add_subcommand("train-mle", "maximum-likelihood training");
  auto* sub_rl = app.add_subcommand("train-rl", "policy-gradient fine-tuning");
  auto* sub_sweep =
      app.add_subcommand("sweep-alpha", "objective-mix sweep over alpha");
  for (CLI::App* sub : {sub_mle, sub_rl, sub_sweep}) {
    sub->add_option("--config", config_path, "key=value experiment config")
        ->required();
    sub->add_option("--seed", seed_flag, "override the config seed");
    add_common(sub);
  }

  // translate
  auto* sub_translate = app.add_subcommand("translate", "beam-search decoding");
  std::string tr_model, tr_src_vocab, tr_tgt_vocab, tr_input, tr_output;
  int tr_beam_width = 6, tr_max_len = 0;
  int64_t tr_seed = 1;
  sub_translate->add_option("--model", tr_model)->required();
  sub_translate->add_option("--src-vocab", tr_src_vocab)->required();
  sub_translate->add_option("--tgt-vocab", tr_tgt_vocab)->required();
  sub_translate->add_option("--input", tr_input)->required();
  sub_translate->add_option("--output", tr_output)->required();
  sub_translate->add_option("--beam-width", tr_beam_width);
  sub_translate->add_option("--max-len", tr_max_len,
                            "decode cap (0 = model default)");
  sub_translate->add_option("--seed", tr_seed);
  add_common(sub_translate);

  // evaluate
  auto* sub_eval = app.add_subcommand("evaluate", "corpus BLEU of hyp vs ref");
  std::string ev_hyp, ev_ref;
  int ev_max_order = 4;
  sub_eval->add_option("--hyp", ev_hyp)->required();
  sub_eval->add_option("--ref", ev_ref)->required();
  sub_eval->add_option("--max-order", ev_max_order);
  add_common(sub_eval);

  // pseudo-targets / back-translate
  auto* sub_pseudo =
      app.add_subcommand("pseudo-targets", "pseudo references for source mono");
  auto* sub_backtr =
      app.add_subcommand("back-translate", "pseudo sources for target mono");
  std::string ps_model, ps_src_vocab, ps_tgt_vocab, ps_mono;
  std::string ps_out_src, ps_out_tgt, ps_out_tags;
  int ps_beam_width = 4, ps_max_len = 32;
  for (CLI::App* sub : {sub_pseudo, sub_backtr}) {
    sub->add_option(sub == sub_pseudo ? "--model" : "--reverse-model", ps_model)
        ->required();
    sub->add_option("--src-vocab", ps_src_vocab)->required();
    sub->add_option("--tgt-vocab", ps_tgt_vocab)->required();
    sub->add_option("--mono", ps_mono)->required();
    sub->add_option("--out-src", ps_out_src)->required();
    sub->add_option("--out-tgt", ps_out_tgt)->required();
    sub->add_option("--out-tags", ps_out_tags)->required();
    sub->add_option("--beam-width", ps_beam_width);
    sub->add_option("--max-len", ps_max_len);
    add_common(sub);
  }

  // unify
  auto* sub_unify =
      app.add_subcommand("unify", "pack bilingual and pseudo corpora together");
  std::string un_bi_src, un_bi_tgt, un_ms_src, un_ms_tgt, un_mt_src, un_mt_tgt;
  std::string un_out_src, un_out_tgt, un_out_tags;
  int64_t un_seed = 1;
  sub_unify->add_option("--bi-src", un_bi_src)->required();
  sub_unify->add_option("--bi-tgt", un_bi_tgt)->required();
  sub_unify->add_option("--ms-src", un_ms_src);
  sub_unify->add_option("--ms-tgt", un_ms_tgt);
  sub_unify->add_option("--mt-src", un_mt_src);
  sub_unify->add_option("--mt-tgt", un_mt_tgt);
  sub_unify->add_option("--out-src", un_out_src)->required();
  sub_unify->add_option("--out-tgt", un_out_tgt)->required();
  sub_unify->add_option("--out-tags", un_out_tags)->required();
  sub_unify->add_option("--seed", un_seed);
  add_common(sub_unify);

  // verify
  auto* sub_verify = app.add_subcommand("verify", "run the oracle self-checks");
  add_common(sub_verify);

  std::vector<std::string> argv_store = {"seqrl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(argv_store.size());
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e);  // --help
      std::cerr << e.what() << '\n';
      return 1;
    }
    apply_threads(threads);

    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.threads = threads;

    if (sub_vocab->parsed()) {
      ctx.command = "make-vocab";
      std::ifstream in(mv_input);
      if (!in) throw IoError("cannot open " + mv_input);
      const Vocabulary vocab = build_vocab(in, mv_min_count, mv_max_size);
      save_vocab(vocab, mv_output);
      ctx.data_files = {mv_input};
      ctx.outputs = {mv_output};
      write_manifest(ctx);
      std::printf("vocab size %d\n", vocab.size());
      return 0;
    }

    if (sub_mle->parsed() || sub_rl->parsed() || sub_sweep->parsed()) {
      ExperimentConfig cfg = parse_experiment_config(config_path);
      if (seed_flag >= 0) cfg.train.seed = static_cast<uint64_t>(seed_flag);
      if (threads > 0) cfg.threads = threads;
      apply_threads(cfg.threads);
      ctx.config = &cfg;
      ctx.config_path = config_path;
      ctx.threads = cfg.threads;
      if (sub_sweep->parsed()) {
        ctx.command = "sweep-alpha";
        return do_sweep_alpha(cfg, ctx);
      }
      ctx.command = sub_mle->parsed() ? "train-mle" : "train-rl";
      return do_train(ctx.command, cfg, ctx);
    }

    if (sub_translate->parsed()) {
      ctx.command = "translate";
      ctx.seed = static_cast<uint64_t>(tr_seed);
      auto [params, model_cfg] = load_checkpoint(tr_model);
      const Vocabulary src_vocab = load_vocab(tr_src_vocab);
      const Vocabulary tgt_vocab = load_vocab(tr_tgt_vocab);
      if (src_vocab.size() != model_cfg.src_vocab_size ||
          tgt_vocab.size() != model_cfg.tgt_vocab_size) {
        throw ConfigError("vocab files do not match the checkpoint");
      }
      const int max_len = tr_max_len > 0 ? tr_max_len : model_cfg.max_decode_len;
      std::vector<std::string> out_lines;
      std::vector<TokenSequence> srcs;
      std::vector<size_t> positions;
      const auto in_lines = read_lines(tr_input);
      out_lines.resize(in_lines.size());
      for (size_t i = 0; i < in_lines.size(); ++i) {
        if (in_lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        srcs.push_back(encode_sentence(src_vocab, in_lines[i]));
        positions.push_back(i);
      }
      const auto hyps = translate_corpus(params, srcs, tr_beam_width, max_len);
      for (size_t k = 0; k < hyps.size(); ++k) {
        out_lines[positions[k]] =
            decode_sentence(tgt_vocab, content_tokens(hyps[k]));
      }
      write_lines(tr_output, out_lines);
      ctx.data_files = {tr_model, tr_src_vocab, tr_tgt_vocab, tr_input};
      ctx.outputs = {tr_output};
      write_manifest(ctx);
      return 0;
    }

    if (sub_eval->parsed()) {
      ctx.command = "evaluate";
      // Tokens are compared as strings; a private joint dictionary avoids
      // UNK collapsing unrelated words into fake matches.
      Vocabulary joint;
      auto encode_all = [&](const std::string& path) {
        std::vector<TokenSequence> out;
        for (const auto& line : read_lines(path)) {
          TokenSequence ids;
          std::istringstream ss(line);
          std::string tok;
          while (ss >> tok) ids.push_back(joint.add_token(tok));
          out.push_back(std::move(ids));
        }
        return out;
      };
      const auto hyps = encode_all(ev_hyp);
      const auto refs = encode_all(ev_ref);
      const double bleu = corpus_bleu(hyps, refs, ev_max_order);
      std::printf("BLEU = %.2f\n", bleu);
      ctx.data_files = {ev_hyp, ev_ref};
      write_manifest(ctx);
      return 0;
    }

    if (sub_pseudo->parsed() || sub_backtr->parsed()) {
      const bool source_side = sub_pseudo->parsed();
      ctx.command = source_side ? "pseudo-targets" : "back-translate";
      auto [params, model_cfg] = load_checkpoint(ps_model);
      auto src_vocab = std::make_shared<const Vocabulary>(load_vocab(ps_src_vocab));
      auto tgt_vocab = std::make_shared<const Vocabulary>(load_vocab(ps_tgt_vocab));
      const auto& mono_vocab = source_side ? *src_vocab : *tgt_vocab;
      std::vector<TokenSequence> mono;
      for (const auto& line : read_lines(ps_mono)) {
        mono.push_back(encode_sentence(mono_vocab, line));
      }
      const Dataset ds =
          source_side
              ? generate_pseudo_targets(params, mono, src_vocab, tgt_vocab,
                                        ps_beam_width, ps_max_len)
              : back_translate(params, mono, src_vocab, tgt_vocab,
                               ps_beam_width, ps_max_len);
      std::vector<std::string> src_lines, tgt_lines;
      for (const auto& pair : ds.pairs) {
        src_lines.push_back(decode_sentence(*src_vocab, pair.src));
        tgt_lines.push_back(decode_sentence(*tgt_vocab, pair.tgt));
      }
      write_lines(ps_out_src, src_lines);
      write_lines(ps_out_tgt, tgt_lines);
      write_origin_tags(ds, ps_out_tags);
      ctx.data_files = {ps_model, ps_src_vocab, ps_tgt_vocab, ps_mono};
      ctx.outputs = {ps_out_src, ps_out_tgt, ps_out_tags};
      write_manifest(ctx);
      std::printf("pseudo pairs %zu\n", ds.pairs.size());
      return 0;
    }

    if (sub_unify->parsed()) {
      ctx.command = "unify";
      ctx.seed = static_cast<uint64_t>(un_seed);
      struct Tagged {
        std::string src, tgt;
        const char* tag;
      };
      std::vector<Tagged> rows;
      auto append = [&](const std::string& src_path, const std::string& tgt_path,
                        const char* tag) {
        if (src_path.empty() && tgt_path.empty()) return;
        const auto src_lines = read_lines(src_path);
        const auto tgt_lines = read_lines(tgt_path);
        if (src_lines.size() != tgt_lines.size()) {
          throw LineCountMismatch(src_path + " vs " + tgt_path);
        }
        for (size_t i = 0; i < src_lines.size(); ++i) {
          rows.push_back({src_lines[i], tgt_lines[i], tag});
        }
        ctx.data_files.push_back(src_path);
        ctx.data_files.push_back(tgt_path);
      };
      append(un_bi_src, un_bi_tgt, "B");
      append(un_ms_src, un_ms_tgt, "MS");
      append(un_mt_src, un_mt_tgt, "MT");
      Rng rng(static_cast<uint64_t>(un_seed));
      seeded_shuffle(rows, rng);
      std::vector<std::string> src_lines, tgt_lines, tags;
      for (const auto& row : rows) {
        src_lines.push_back(row.src);
        tgt_lines.push_back(row.tgt);
        tags.push_back(row.tag);
      }
      write_lines(un_out_src, src_lines);
      write_lines(un_out_tgt, tgt_lines);
      write_lines(un_out_tags, tags);
      ctx.outputs = {un_out_src, un_out_tgt, un_out_tags};
      write_manifest(ctx);
      std::printf("unified pairs %zu\n", rows.size());
      return 0;
    }

    if (sub_verify->parsed()) {
      ctx.command = "verify";
      const bool ok = run_verify_suites(std::cout);
      write_manifest(ctx);
      return ok ? 0 : 2;
    }

    return 1;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

}  // namespace seqrl::cli
