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

#ifndef SDMF_FAKE_GRAD_HPP_
#define SDMF_FAKE_GRAD_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>

#include "sdmf/errors.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Mean and population standard deviation of a client's observed errors.
struct ErrorStats {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
};

inline ErrorStats error_stats(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("error_stats of an empty set");
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double n = static_cast<double>(errors.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - mu) * (e - mu);
  return {mu, std::sqrt(ss / n), errors.size()};
}

// Probability mass of N(mu, sigma) on [-alpha, alpha].
inline double coverage(double alpha, double mu, double sigma) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  if (std::isinf(alpha)) return 1.0;
  if (sigma == 0.0) return std::fabs(mu) < alpha ? 1.0 : 0.0;

  if (alpha < 1e-3 * sigma) {
    // Narrow window: erf differences cancel, Simpson's rule does not.
    auto pdf = [&](double x) {
      double z = (x - mu) / sigma;
      return std::exp(-0.5 * z * z) /
             (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    return alpha / 3.0 * (pdf(-alpha) + 4.0 * pdf(0.0) + pdf(alpha));
  }
  const double scale = sigma * std::numbers::sqrt2;
  const double a = (-alpha - mu) / scale;
  const double b = (alpha - mu) / scale;
  if (a >= 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
  if (b <= 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
  return 0.5 * (std::erf(b) - std::erf(a));
}

// Budget of fake errors truncated to (-alpha, alpha): ln(1 / coverage).
inline double epsilon_g_of(double alpha, double mu, double sigma) {
  const double c = coverage(alpha, mu, sigma);
  if (c <= 0.0) {
    throw InfiniteBudget("bound excludes all probability mass");
  }
  return -std::log(c);
}

struct AlphaBound {
  double alpha = kUnbounded;
  double eps_g_achieved = 0.0;
  double alpha_max = kUnbounded;
  bool clamped = false;        // requested budget unreachable below alpha_max
  bool sigma_floored = false;  // sigma was 0 and replaced by kSigmaFloor
};

inline constexpr double kSigmaFloor = 1e-6;

// Bisection on (0, alpha_max] for an alpha whose budget lies in
// [eps_g - delta, eps_g], with alpha_max = max(|mu + 2 sigma|,
// |mu - 2 sigma|). A budget smaller than that of alpha_max is clamped to
// alpha_max and the achieved value is reported.
inline AlphaBound solve_alpha(double eps_g, double mu, double sigma,
                              double delta = 1e-6) {
  if (!(eps_g > 0.0)) throw InvalidArgument("eps_g must be positive");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  if (!std::isfinite(mu)) throw InvalidArgument("mu must be finite");

  AlphaBound out;
  out.alpha_max = std::max(std::fabs(mu + 2.0 * sigma),
                           std::fabs(mu - 2.0 * sigma));
  const double eps_at_max = epsilon_g_of(out.alpha_max, mu, sigma);
  if (eps_g < eps_at_max) {
    out.alpha = out.alpha_max;
    out.eps_g_achieved = eps_at_max;
    out.clamped = true;
    return out;
  }
  // The budget decreases in alpha; hi always satisfies eps(hi) <= eps_g.
  double lo = 0.0;
  double hi = out.alpha_max;
  double eps_hi = eps_at_max;
  for (int iter = 0; iter < 200; ++iter) {
    if (eps_hi >= eps_g - delta) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double c = coverage(mid, mu, sigma);
    const double e = c > 0.0 ? -std::log(c) : kUnbounded;
    if (e > eps_g) {
      lo = mid;
    } else {
      hi = mid;
      eps_hi = e;
    }
  }
  out.alpha = hi;
  out.eps_g_achieved = eps_hi;
  return out;
}

// solve_alpha on a client's error statistics, flooring sigma = 0.
inline AlphaBound solve_alpha_for(const ErrorStats& stats, double eps_g,
                                  double delta = 1e-6) {
  const bool floored = !(stats.sigma > 0.0);
  AlphaBound bound =
      solve_alpha(eps_g, stats.mu, floored ? kSigmaFloor : stats.sigma, delta);
  bound.sigma_floored = floored;
  return bound;
}

inline constexpr std::size_t kMaxRejections = 1'000'000;

// Draws from N(mu, sigma) restricted to (-alpha, alpha) by rejection.
inline double sample_fake_error(double mu, double sigma, double alpha,
                                Rng& rng) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  if (std::isinf(alpha)) return rng.normal(mu, sigma);
  for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
    double x = rng.normal(mu, sigma);
    if (x > -alpha && x < alpha) return x;
  }
  throw DegenerateBound("no sample of N(mu, sigma) fell inside (-alpha, alpha)"
                        " after 1e6 draws");
}

}  // namespace sdmf

#endif  // SDMF_FAKE_GRAD_HPP_
