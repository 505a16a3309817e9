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

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace seqrl {

// mt19937_64 is fully specified by the standard; the distribution helpers
// below avoid std::uniform_*_distribution, whose output is not.
using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent seed for a numbered stream (per sentence, per step,
// per epoch) from a base seed.
inline uint64_t stream_seed(uint64_t base, uint64_t stream) {
  return mix64(base ^ mix64(stream + 0x632be59bd9b4e019ull));
}

// Unbiased draw in [0, n) via rejection sampling.
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [-scale, +scale].
inline double uniform_symmetric(Rng& rng, double scale) {
  return (2.0 * uniform_unit(rng) - 1.0) * scale;
}

// Fisher-Yates with the explicit draw above; identical order on every
// platform for a given seed.
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace seqrl
