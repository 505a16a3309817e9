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

// Times the OpenMP batch kernels against their serial reference on a
// synthetic workload and checks that both produce identical results.

#include <chrono>
#include <cstdio>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqrl/rltrain.hpp"

using namespace seqrl;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

Dataset synthetic_dataset(int pairs, int vocab, int max_len, uint64_t seed) {
  Dataset ds;
  auto vocab_ptr = std::make_shared<Vocabulary>();
  for (int i = 0; i < vocab - kNumSpecials; ++i) {
    vocab_ptr->add_token("w" + std::to_string(i));
  }
  ds.src_vocab = vocab_ptr;
  ds.tgt_vocab = vocab_ptr;
  Rng rng(seed);
  for (int i = 0; i < pairs; ++i) {
    const size_t len = 4 + uniform_below(rng, static_cast<uint64_t>(max_len - 4));
    TokenSequence src(len);
    for (auto& t : src) {
      t = static_cast<int32_t>(kNumSpecials + uniform_below(rng, uint64_t(vocab - kNumSpecials)));
    }
    ds.pairs.push_back({src, src, Origin::kBilingual});
  }
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  int pairs = 256;
  int hidden = 48;
  int threads = 0;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--pairs") == 0) pairs = std::atoi(argv[i + 1]);
    if (std::strcmp(argv[i], "--hidden") == 0) hidden = std::atoi(argv[i + 1]);
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  (void)threads;
  std::printf("openmp disabled, serial build\n");
#endif

  const int vocab = 64;
  const int max_len = 16;
  const Dataset ds = synthetic_dataset(pairs, vocab, max_len, 17);

  ModelConfig model_cfg;
  model_cfg.src_vocab_size = vocab;
  model_cfg.tgt_vocab_size = vocab;
  model_cfg.embed_dim = hidden;
  model_cfg.hidden_dim = hidden;
  model_cfg.max_decode_len = max_len;
  model_cfg.seed = 3;
  const ModelParams params = init_model(model_cfg);

  Batch batch(ds.pairs.size());
  for (size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  TrainConfig cfg;
  cfg.sampling = SamplingMode::kMultinomial;

  std::vector<TokenSequence> srcs;
  for (const auto& pair : ds.pairs) srcs.push_back(pair.src);

  std::printf("%-26s %10s %10s %8s\n", "kernel", "serial ms", "openmp ms",
              "speedup");

  auto report = [](const char* name, double serial_ms, double parallel_ms,
                   bool same) {
    std::printf("%-26s %10.1f %10.1f %7.2fx%s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, same ? "" : "  MISMATCH");
  };

  {
    auto t0 = Clock::now();
    const auto serial = collect_mle_serial(params, ds, batch);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = collect_mle(params, ds, batch);
    const double parallel_ms = ms_since(t0);
    report("mle batch gradients", serial_ms, parallel_ms,
           serial.grad.equals(parallel.grad) &&
               serial.log_prob_sum == parallel.log_prob_sum);
  }
  {
    auto t0 = Clock::now();
    const auto serial =
        collect_combined_serial(params, nullptr, ds, batch, cfg, max_len, 11);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel =
        collect_combined(params, nullptr, ds, batch, cfg, max_len, 11);
    const double parallel_ms = ms_since(t0);
    report("combined batch gradients", serial_ms, parallel_ms,
           serial.grad_mle.equals(parallel.grad_mle) &&
               serial.grad_rl.equals(parallel.grad_rl) &&
               serial.mean_reward == parallel.mean_reward);
  }
  {
    auto t0 = Clock::now();
    const auto serial = translate_corpus_serial(params, srcs, 4, max_len);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = translate_corpus(params, srcs, 4, max_len);
    const double parallel_ms = ms_since(t0);
    bool same = serial.size() == parallel.size();
    for (size_t i = 0; same && i < serial.size(); ++i) {
      same = serial[i].tokens == parallel[i].tokens &&
             serial[i].score == parallel[i].score;
    }
    report("beam translate corpus", serial_ms, parallel_ms, same);
  }
  {
    auto t0 = Clock::now();
    const auto serial = sample_corpus_serial(params, srcs, max_len, 23);
    const double serial_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = sample_corpus(params, srcs, max_len, 23);
    const double parallel_ms = ms_since(t0);
    bool same = serial.size() == parallel.size();
    for (size_t i = 0; same && i < serial.size(); ++i) {
      same = serial[i].tokens == parallel[i].tokens &&
             serial[i].score == parallel[i].score;
    }
    report("multinomial sample corpus", serial_ms, parallel_ms, same);
  }
  return 0;
}
