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

#ifndef SDMF_RR_HPP_
#define SDMF_RR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sdmf/errors.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

// Per-iteration privacy budgets of one client.
struct PrivacyBudget {
  double eps_I = 1.0;
  std::optional<double> eps_P;  // unset: 2 * eps_I
  std::optional<double> eps_g;  // unset: fake errors are not bounded

  double permanent_eps() const { return eps_P.value_or(2.0 * eps_I); }

  void validate() const {
    if (!(eps_I > 0.0)) throw InvalidArgument("eps_I must be positive");
    if (!(permanent_eps() > 0.0)) {
      throw InvalidArgument("eps_P must be positive");
    }
    if (eps_g && !(*eps_g > 0.0)) {
      throw InvalidArgument("eps_g must be positive");
    }
  }
};

// Two-stage randomized-response parameters of one client.
//   f       PRR perturbation probability
//   p, q    IRR send probability for a 0 / 1 bit of the permanent vector
//   p_star  composite send probability of an unrated item
//   q_star  composite send probability of a rated item
//   h       number of rated items
//   z       expected gradients sent per round
struct RRParams {
  double f = 0.0;
  double p = 0.0;
  double q = 1.0;
  double p_star = 0.0;
  double q_star = 1.0;
  std::size_t h = 0;
  double z = 0.0;
};

// One entry per item: 1 if rated (or selected), else 0.
using BitVector = std::vector<std::uint8_t>;

namespace internal {
inline void check_probability(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
  }
}
}  // namespace internal

// PRR budget: 2h * ln((1 - f/2) / (f/2)). f = 1 gives 0; f = 0 is unbounded.
inline double epsilon_P_of(double f, std::size_t h) {
  internal::check_probability(f, "f");
  if (f == 0.0) throw InfiniteBudget("f = 0 gives an unbounded PRR budget");
  // (1 - f/2) / (f/2) = 1 + 2(1 - f)/f
  return 2.0 * static_cast<double>(h) * std::log1p(2.0 * (1.0 - f) / f);
}

// Inverse of epsilon_P_of: f = 2 / (1 + exp(eps_P / 2h)).
inline double solve_f(double eps_P, std::size_t h) {
  if (h == 0) {
    throw InvalidArgument("PRR budget undefined for a client with no ratings");
  }
  if (!(eps_P > 0.0)) throw InvalidArgument("eps_P must be positive");
  const double x = eps_P / (2.0 * static_cast<double>(h));
  return 2.0 / (2.0 + std::expm1(x));
}

// IRR budget: h * ln(q*(1 - p*) / (p*(1 - q*))).
inline double epsilon_I_of(double p_star, double q_star, std::size_t h) {
  internal::check_probability(p_star, "p_star");
  internal::check_probability(q_star, "q_star");
  if (p_star > q_star) throw InvalidArgument("p_star must not exceed q_star");
  if (p_star == 0.0 || q_star == 1.0) {
    throw InfiniteBudget("boundary send probability gives an unbounded budget");
  }
  return static_cast<double>(h) *
         (std::log(q_star) - std::log(p_star) + std::log1p(-p_star) -
          std::log1p(-q_star));
}

struct CompositeProbs {
  double p_star;
  double q_star;
};

// Send probabilities of unrated / rated items through PRR then IRR.
inline CompositeProbs effective_probs(double f, double p, double q) {
  internal::check_probability(f, "f");
  internal::check_probability(p, "p");
  internal::check_probability(q, "q");
  const double half = 0.5 * f;
  return {half * q + (1.0 - half) * p, (1.0 - half) * q + half * p};
}

inline double expected_sends(std::size_t h, std::size_t n_items, double p_star,
                             double q_star) {
  if (h > n_items) throw InvalidArgument("h exceeds the item universe");
  return static_cast<double>(h) * q_star +
         static_cast<double>(n_items - h) * p_star;
}

// RRParams for explicitly chosen (f, p, q), e.g. to switch privacy off.
inline RRParams rr_params_from(double f, double p, double q, std::size_t h,
                               std::size_t n_items) {
  auto [ps, qs] = effective_probs(f, p, q);
  return {f, p, q, ps, qs, h, expected_sends(h, n_items, ps, qs)};
}

// Finds (f, p, q) such that the composite channel meets eps_I exactly, PRR
// meets eps_P, and the client sends z_target gradients per round in
// expectation.
//
// With r = exp(eps_I / h) the budget pins q* = r p* / (1 + (r - 1) p*);
// the expected send count is then strictly increasing in p*, so p* is found
// by bisection. (p, q) follow from inverting the linear PRR mixing.
inline RRParams calibrate(double eps_I, double eps_P, std::size_t h,
                          std::size_t n_items, double z_target) {
  if (h < 1) throw InvalidArgument("calibration requires h >= 1");
  if (h > n_items) throw InvalidArgument("h exceeds the item universe");
  if (!(eps_I > 0.0)) throw InvalidArgument("eps_I must be positive");
  if (!(eps_P > 0.0)) throw InvalidArgument("eps_P must be positive");
  const double n = static_cast<double>(n_items);
  if (!(z_target > 0.0)) throw InvalidArgument("z_target must be positive");
  if (!(z_target < n)) {
    std::ostringstream msg;
    msg << "z_target " << z_target << " is not below n_items " << n_items;
    throw InfeasibleCalibration("z_target < n_items", msg.str());
  }

  const double r_minus_1 = std::expm1(eps_I / static_cast<double>(h));
  auto q_of = [&](double ps) {
    return (1.0 + r_minus_1) * ps / (1.0 + r_minus_1 * ps);
  };
  auto z_of = [&](double ps) { return expected_sends(h, n_items, ps, q_of(ps)); };

  constexpr double kEdge = 1e-12;
  double lo = kEdge;
  double hi = 1.0 - kEdge;
  if (z_of(lo) > z_target || z_of(hi) < z_target) {
    std::ostringstream msg;
    msg << "z_target " << z_target << " unreachable with p_star in ["
        << kEdge << ", 1 - " << kEdge << "]";
    throw InfeasibleCalibration("0 < p_star < 1", msg.str());
  }
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (z_of(mid) < z_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double p_star =
      std::fabs(z_of(lo) - z_target) <= std::fabs(z_of(hi) - z_target) ? lo
                                                                        : hi;
  const double q_star = q_of(p_star);

  const double f = solve_f(eps_P, h);
  if (!(f < 1.0)) {
    throw InfeasibleCalibration(
        "f < 1", "f = 1: PRR output is independent of B and (p, q) cannot be "
                 "recovered");
  }
  // p* + q* = p + q;  q* - p* = (1 - f)(q - p)
  const double spread = (q_star - p_star) / (1.0 - f);
  const double total = p_star + q_star;
  const double q = 0.5 * (total + spread);
  const double p = 0.5 * (total - spread);
  if (p < 0.0) {
    std::ostringstream msg;
    msg << "infeasible calibration: p = " << p << " < 0 (f = " << f
        << ", p* = " << p_star << ", q* = " << q_star << ")";
    throw InfeasibleCalibration("p >= 0", msg.str());
  }
  if (q > 1.0) {
    std::ostringstream msg;
    msg << "infeasible calibration: q = " << q << " > 1 (f = " << f
        << ", p* = " << p_star << ", q* = " << q_star << ")";
    throw InfeasibleCalibration("q <= 1", msg.str());
  }
  return {f, p, q, p_star, q_star, h, z_of(p_star)};
}

// Permanent randomized response: each bit becomes 1 w.p. f/2, 0 w.p. f/2,
// and is kept w.p. 1 - f.
inline BitVector prr(std::span<const std::uint8_t> bits, double f, Rng& rng) {
  internal::check_probability(f, "f");
  BitVector out(bits.size());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    double u = rng.uniform();
    if (u < 0.5 * f) {
      out[j] = 1;
    } else if (u < f) {
      out[j] = 0;
    } else {
      out[j] = bits[j];
    }
  }
  return out;
}

// Instantaneous randomized response: bit j is 1 w.p. q if B'_j = 1, else p.
inline BitVector irr(std::span<const std::uint8_t> permanent, double p,
                     double q, Rng& rng) {
  internal::check_probability(p, "p");
  internal::check_probability(q, "q");
  BitVector out(permanent.size());
  for (std::size_t j = 0; j < permanent.size(); ++j) {
    out[j] = rng.uniform() < (permanent[j] ? q : p) ? 1 : 0;
  }
  return out;
}

// Per-item send frequency over rounds, as seen by a curious server.
inline std::vector<double> average_attack(std::span<const BitVector> samples) {
  if (samples.empty()) throw InvalidArgument("average attack needs T >= 1");
  std::vector<double> mean(samples.front().size(), 0.0);
  for (const BitVector& s : samples) {
    if (s.size() != mean.size()) {
      throw InvalidArgument("samples differ in length");
    }
    for (std::size_t j = 0; j < s.size(); ++j) mean[j] += s[j];
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  return mean;
}

// Labels an item rated when its frequency is closer to q* than to p*.
inline BitVector classify_attack(std::span<const double> frequencies,
                                 double p_star, double q_star) {
  const double mid = 0.5 * (p_star + q_star);
  BitVector out(frequencies.size());
  for (std::size_t j = 0; j < frequencies.size(); ++j) {
    out[j] = q_star > p_star ? (frequencies[j] > mid ? 1 : 0)
                             : (frequencies[j] < mid ? 1 : 0);
  }
  return out;
}

}  // namespace sdmf

#endif  // SDMF_RR_HPP_
