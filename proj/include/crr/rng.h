// Copyright 2026 The CRR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Portable random streams. Everything here is bit-identical across
// platforms: std::mt19937_64 is fully specified by the standard, and doubles
// are formed from the top 53 bits of its output rather than through a
// library distribution.

#ifndef CRR_RNG_H_
#define CRR_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace crr {

// SplitMix64 finalizer.
constexpr std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Seed of candidate `index` for `example_id`:
//   MixBits(MixBits(base_seed ^ MixBits(Fnv1a64(example_id))) + index)
constexpr std::uint64_t CandidateSeed(std::uint64_t base_seed,
                                      std::string_view example_id,
                                      std::uint64_t index) {
  return MixBits(MixBits(base_seed ^ MixBits(Fnv1a64(example_id))) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crr

#endif  // CRR_RNG_H_
