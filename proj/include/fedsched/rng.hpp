// Copyright 2026 The fedsched Authors
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

namespace fedsched {

using Rng = std::mt19937_64;

/// Independent purposes that get their own RNG sub-streams. Values are part of
/// the reproducibility contract; append, never renumber.
enum class Stream : std::uint64_t {
  kData = 1,
  kInit = 2,
  kChannel = 3,
  kSelection = 4,
  kMinibatch = 5,
  kBaseline = 6,
  kForce = 7,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives the seed of sub-stream (`stream`, `index`) from a master seed.
/// Streams for device n never depend on the total device count.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t h = detail::splitmix64(master);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return detail::splitmix64(h ^ (index * 0xD6E8FEB86659FD93ULL));
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

/// Uniform draw on [0, 1).
inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace fedsched
