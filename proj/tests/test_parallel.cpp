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

// The OpenMP kernels compute per-sentence slots and reduce them in index
// order, so their results must be bit-identical to the serial reference for
// any thread count.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqrl/rltrain.hpp"
#include "seqrl/semisup.hpp"
#include "support/toys.hpp"

using namespace seqrl;

namespace {

struct Workload {
  Dataset ds;
  ModelParams params;
  Batch batch;
  std::vector<TokenSequence> srcs;
};

Workload make_workload() {
  Workload w;
  w.ds = testing::copy_dataset(40, 6, 1, 6, 404);
  w.params = testing::random_tiny_model(10, 10, 6, 405);
  w.batch.resize(w.ds.pairs.size());
  for (size_t i = 0; i < w.batch.size(); ++i) w.batch[i] = i;
  for (const auto& pair : w.ds.pairs) w.srcs.push_back(pair.src);
  return w;
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

TEST_CASE("mle gradient assembly is identical across thread counts") {
  const Workload w = make_workload();
  const MleCollect serial = collect_mle_serial(w.params, w.ds, w.batch);
  for (int threads : {1, 2, 4}) {
    set_threads(threads);
    const MleCollect parallel = collect_mle(w.params, w.ds, w.batch);
    CHECK(parallel.grad.equals(serial.grad));
    CHECK(parallel.log_prob_sum == serial.log_prob_sum);
    CHECK(parallel.token_count == serial.token_count);
  }
}

TEST_CASE("combined gradient assembly is identical across thread counts") {
  const Workload w = make_workload();
  TrainConfig cfg;
  const CombinedCollect serial =
      collect_combined_serial(w.params, nullptr, w.ds, w.batch, cfg, 6, 99);
  for (int threads : {1, 2, 4}) {
    set_threads(threads);
    const CombinedCollect parallel =
        collect_combined(w.params, nullptr, w.ds, w.batch, cfg, 6, 99);
    CHECK(parallel.grad_mle.equals(serial.grad_mle));
    CHECK(parallel.grad_rl.equals(serial.grad_rl));
    CHECK(parallel.loss_mle == serial.loss_mle);
    CHECK(parallel.loss_rl == serial.loss_rl);
    CHECK(parallel.mean_reward == serial.mean_reward);
  }
}

TEST_CASE("combined assembly with a baseline matches serially too") {
  const Workload w = make_workload();
  TrainConfig cfg;
  cfg.baseline = true;
  const BaselineParams bp = init_baseline(6, 6, 0.1, 7);
  const CombinedCollect serial =
      collect_combined_serial(w.params, &bp, w.ds, w.batch, cfg, 6, 41);
  set_threads(4);
  const CombinedCollect parallel =
      collect_combined(w.params, &bp, w.ds, w.batch, cfg, 6, 41);
  CHECK(parallel.grad_rl.equals(serial.grad_rl));
  REQUIRE(parallel.baseline_targets.size() == serial.baseline_targets.size());
  for (size_t i = 0; i < serial.baseline_targets.size(); ++i) {
    CHECK(parallel.baseline_targets[i] == serial.baseline_targets[i]);
  }
  CHECK(parallel.baseline_states == serial.baseline_states);
}

TEST_CASE("corpus translation is identical across thread counts") {
  const Workload w = make_workload();
  const auto serial = translate_corpus_serial(w.params, w.srcs, 4, 6);
  for (int threads : {1, 2, 4}) {
    set_threads(threads);
    const auto parallel = translate_corpus(w.params, w.srcs, 4, 6);
    REQUIRE(parallel.size() == serial.size());
    for (size_t i = 0; i < serial.size(); ++i) {
      CHECK(parallel[i].tokens == serial[i].tokens);
      CHECK(parallel[i].score == serial[i].score);
    }
  }
}

TEST_CASE("corpus sampling is identical across thread counts") {
  const Workload w = make_workload();
  const auto serial = sample_corpus_serial(w.params, w.srcs, 6, 31);
  for (int threads : {1, 2, 4}) {
    set_threads(threads);
    const auto parallel = sample_corpus(w.params, w.srcs, 6, 31);
    REQUIRE(parallel.size() == serial.size());
    for (size_t i = 0; i < serial.size(); ++i) {
      CHECK(parallel[i].tokens == serial[i].tokens);
      CHECK(parallel[i].step_log_probs == serial[i].step_log_probs);
    }
  }
}

TEST_CASE("a full training run is thread-count independent") {
  const Dataset train_ds = testing::copy_dataset(20, 6, 1, 4, 406);
  const Dataset dev_ds = testing::copy_dataset(6, 6, 1, 4, 407);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.eval_every = 4;
  cfg.batch_max_tokens = 16;
  const auto model_cfg = testing::tiny_model_cfg(10, 10, 4, 408);

  set_threads(1);
  const TrainResult one = train(cfg, model_cfg, {train_ds, dev_ds});
  set_threads(4);
  const TrainResult four = train(cfg, model_cfg, {train_ds, dev_ds});
  CHECK(report_to_csv(one.report) == report_to_csv(four.report));
  CHECK(one.final_params.equals(four.final_params));
}
