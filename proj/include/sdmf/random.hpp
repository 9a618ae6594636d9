// Copyright 2026 The SDMF Authors
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

#ifndef SDMF_RANDOM_HPP_
#define SDMF_RANDOM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace sdmf {

// Purposes for which independent random streams are derived from a master
// seed. Every consumer of randomness owns one stream per (purpose, owner, t)
// so results do not depend on scheduling.
enum class Stream : std::uint64_t {
  kUserInit = 1,
  kItemInit = 2,
  kPrior = 3,
  kPrr = 4,
  kIrr = 5,
  kNoise = 6,
  kFakeError = 7,
  kPairing = 8,
  kSplit = 9,
  kSubsample = 10,
  kIsgld = 11,
  kSynthetic = 12,
  kRepetition = 13,
};

namespace internal {
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace internal

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = internal::splitmix64(master);
  h = internal::splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = internal::splitmix64(h ^ a);
  return internal::splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

// Thin wrapper over a 64-bit Mersenne twister. Draw sequences are fully
// determined by the seed for a given standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, Stream stream, std::uint64_t a = 0,
      std::uint64_t b = 0)
      : engine_(derive_seed(master, stream, a, b)) {}

  // Uniform on [0, 1).
  double uniform() { return unit_(engine_); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean, double stddev) {
    return normal_(engine_,
                   std::normal_distribution<double>::param_type(mean, stddev));
  }

  // Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  // Zero-mean Laplace with scale b, by inversion.
  double laplace(double scale) {
    double u = uniform() - 0.5;
    double sign = u < 0 ? -1.0 : 1.0;
    return -scale * sign * std::log1p(-2.0 * std::fabs(u));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_;
};

}  // namespace sdmf

#endif  // SDMF_RANDOM_HPP_
