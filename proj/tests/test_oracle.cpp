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

#include <cmath>

#include "seqrl/errors.hpp"
#include "seqrl/oracle.hpp"
#include "support/toys.hpp"

using namespace seqrl;

TEST_CASE("one content token plus EOS at max_len 2 has three outcomes") {
  // tgt vocab {0, 1, 2=EOS}; id 1 gets a -700 logit, so the support is one
  // content token plus the terminator: [EOS], [0 EOS], [0 0].
  ModelConfig cfg = testing::tiny_model_cfg(5, 3, 3, 1, 0.0);
  ModelParams params = init_model(cfg);
  params.b_out << std::log(0.7), -700.0, std::log(0.3);
  const auto space = enumerate_sequences(params, TokenSequence{4}, 2);

  int support = 0;
  for (const auto& seq : space.sequences) {
    if (seq.probability <= 1e-12) continue;
    ++support;
    if (seq.tokens == TokenSequence{kEos}) {
      CHECK(seq.probability == doctest::Approx(0.3).epsilon(1e-12));
      CHECK(seq.terminated);
    } else if (seq.tokens == TokenSequence{0, kEos}) {
      CHECK(seq.probability == doctest::Approx(0.7 * 0.3).epsilon(1e-12));
      CHECK(seq.terminated);
    } else if (seq.tokens == TokenSequence{0, 0}) {
      CHECK(seq.probability == doctest::Approx(0.7 * 0.7).epsilon(1e-12));
      CHECK_FALSE(seq.terminated);
    } else {
      FAIL("unexpected sequence in the support");
    }
  }
  CHECK(support == 3);
  CHECK(std::fabs(space.total_mass - 1.0) <= 1e-9);
}

TEST_CASE("uniform zero-init model makes sequences equiprobable by length") {
  const ModelParams params = init_model(testing::tiny_model_cfg(5, 4, 3, 1, 0.0));
  const auto space = enumerate_sequences(params, TokenSequence{4}, 3);
  double mass = 0.0;
  for (const auto& seq : space.sequences) {
    mass += seq.probability;
    // natural: (1/V)^len including the EOS draw; cut: (1/V)^max_len.
    const double want = seq.terminated
                            ? std::pow(0.25, double(seq.tokens.size()))
                            : std::pow(0.25, 3.0);
    CHECK(seq.probability == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(std::fabs(mass - 1.0) <= 1e-9);
}

TEST_CASE("probability mass is conserved on random models") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const ModelParams params = testing::random_tiny_model(5, 4, 3, seed);
    const auto space = enumerate_sequences(params, TokenSequence{4, 1}, 3);
    CHECK(std::fabs(space.total_mass - 1.0) <= 1e-9);
  }
}

TEST_CASE("enumeration rejects spaces over the budget") {
  const ModelParams params = testing::random_tiny_model(5, 4, 3, 3);
  CHECK_THROWS_AS(enumerate_sequences(params, TokenSequence{4}, 3, 50),
                  SpaceTooLarge);
  CHECK_THROWS_AS(expected_reward(params, TokenSequence{4}, TokenSequence{0},
                                  12, {}, 1000),
                  SpaceTooLarge);
}

TEST_CASE("constant reward makes the expected reward that constant") {
  const ModelParams params = testing::random_tiny_model(5, 4, 3, 4);
  const double value = expected_reward(
      params, TokenSequence{4}, [](const TokenSequence&) { return 2.5; }, 3);
  CHECK(value == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("single-step expected reward is a dot product") {
  // Two-token vocab (EOS does not exist), probs pinned by the output bias.
  ModelConfig cfg = testing::tiny_model_cfg(5, 2, 3, 1, 0.0);
  ModelParams params = init_model(cfg);
  params.b_out << std::log(0.7), std::log(0.3);
  const double value = expected_reward(
      params, TokenSequence{4},
      [](const TokenSequence& y) { return y[0] == 0 ? 1.0 : 0.0; }, 1);
  CHECK(value == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("expected reward agrees with Monte-Carlo sampling") {
  const ModelParams params = testing::random_tiny_model(5, 4, 3, 42);
  const TokenSequence src = {2, 3};
  const TokenSequence ref = {0, 1};
  const double exact = expected_reward(params, src, ref, 3);
  const int draws = 200'000;
  double sum = 0.0, sum_sq = 0.0;
  Rng rng(7);
  for (int i = 0; i < draws; ++i) {
    const Hypothesis hyp = multinomial_sample(params, src, 3, rng);
    const double reward = sentence_reward(content_tokens(hyp), ref);
    sum += reward;
    sum_sq += reward * reward;
  }
  const double mean = sum / draws;
  const double se =
      std::sqrt(std::max(0.0, sum_sq / draws - mean * mean) / draws);
  CHECK(std::fabs(mean - exact) <= 3.0 * se + 1e-12);
}

TEST_CASE("constant reward zeroes the exact policy gradient") {
  const ModelParams params = testing::random_tiny_model(5, 4, 3, 5);
  const Gradients grad = exact_policy_gradient(
      params, TokenSequence{4, 3}, [](const TokenSequence&) { return 1.0; }, 3);
  double max_abs = 0.0;
  grad.for_each_tensor([&](const char*, const auto& t) {
    max_abs = std::max(max_abs, t.template lpNorm<Eigen::Infinity>());
  });
  CHECK(max_abs <= 1e-10);
}

TEST_CASE("exact policy gradient matches finite differences of E[R]") {
  const TokenSequence src = {3, 4};
  const TokenSequence ref = {3};
  ModelParams params = testing::random_tiny_model(5, 4, 3, 8);
  const Gradients exact = exact_policy_gradient(params, src, ref, 2);

  std::vector<double> flat;
  exact.for_each_tensor([&](const char*, const auto& t) {
    flat.insert(flat.end(), t.data(), t.data() + t.size());
  });
  const double eps = 1e-5;
  size_t index = 0;
  double worst = 0.0;
  params.for_each_tensor([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i, ++index) {
      const double saved = t.data()[i];
      t.data()[i] = saved + eps;
      const double plus = expected_reward(params, src, ref, 2);
      t.data()[i] = saved - eps;
      const double minus = expected_reward(params, src, ref, 2);
      t.data()[i] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      const double denom =
          std::max({std::fabs(numeric), std::fabs(flat[index]), 1e-8});
      worst = std::max(worst, std::fabs(numeric - flat[index]) / denom);
    }
  });
  CHECK(worst <= 1e-4);
}

TEST_CASE("sampled REINFORCE gradients converge to the exact gradient") {
  // Single-step two-token instance: the exact gradient wrt the output bias
  // is (p0 p1 dr, -p0 p1 dr) = (0.21, -0.21).
  ModelConfig cfg = testing::tiny_model_cfg(5, 2, 3, 1, 0.0);
  ModelParams params = init_model(cfg);
  params.b_out << std::log(0.7), std::log(0.3);
  const TokenSequence src = {4};
  auto reward = [](const TokenSequence& y) { return y[0] == 0 ? 1.0 : 0.0; };

  const Gradients exact = exact_policy_gradient(params, src, reward, 1);
  CHECK(exact.b_out[0] == doctest::Approx(0.21).epsilon(1e-9));
  CHECK(exact.b_out[1] == doctest::Approx(-0.21).epsilon(1e-9));

  const int draws = 100'000;
  Vec mean = Vec::Zero(2);
  Rng rng(11);
  for (int i = 0; i < draws; ++i) {
    const Hypothesis hyp = multinomial_sample(params, src, 1, rng);
    const std::vector<double> weight = {reward(hyp.tokens)};
    const BackwardResult bw = backward(params, src, hyp.tokens, weight);
    mean += bw.grads.b_out;
  }
  mean /= double(draws);
  CHECK(std::fabs(mean[0] - 0.21) / 0.21 <= 0.05);
  CHECK(std::fabs(mean[1] + 0.21) / 0.21 <= 0.05);
}

TEST_CASE("exhaustive_best of a sharply peaked model is the early terminator") {
  const ModelParams params =
      testing::table_model({1e-9, 1e-9, 0.4, 0.6 - 2e-9});
  // p(3) = 0.6, p(EOS) = 0.4: [EOS] (0.4) beats every longer sequence.
  const Hypothesis best = exhaustive_best(params, TokenSequence{4}, 3);
  CHECK(best.tokens == TokenSequence{kEos});
  CHECK(best.terminated);
}

TEST_CASE("exhaustive_best equals wide-beam top-1") {
  for (uint64_t seed = 600; seed < 610; ++seed) {
    const ModelParams params = testing::random_tiny_model(5, 4, 3, seed);
    const TokenSequence src = {4};
    const Hypothesis best = exhaustive_best(params, src, 3);
    const auto beam = beam_search(params, src, 64, 3);
    CHECK(best.tokens == beam.front().tokens);
    CHECK(best.score == doctest::Approx(beam.front().score).epsilon(1e-9));
  }
}
