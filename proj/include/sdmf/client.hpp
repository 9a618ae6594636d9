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

#ifndef SDMF_CLIENT_HPP_
#define SDMF_CLIENT_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdmf/codec.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/fake_grad.hpp"
#include "sdmf/matrix.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/random.hpp"
#include "sdmf/rr.hpp"

namespace sdmf {

enum class Task {
  kNumerical,  // rating prediction, RMSE
  kOneClass,   // rating-action prediction with pairwise ranking, AUC
};

// Explicit randomizer probabilities used instead of budget calibration.
// {0, 0, 1} sends exactly the rated items.
struct FixedRandomizer {
  double f = 0.0;
  double p = 0.0;
  double q = 1.0;
};

struct SessionConfig {
  Task task = Task::kNumerical;
  PrivacyBudget budget;
  std::optional<FixedRandomizer> randomizer;
  // Expected gradients per client per round; unset means |R| / |U|.
  std::optional<double> z_target;
  double alpha_delta = 1e-6;
  ItemAveraging averaging = ItemAveraging::kGlobalCount;
};

// Everything a client keeps locally. Nothing here is ever sent as is.
struct ClientState {
  std::uint32_t client_id = 0;
  std::shared_ptr<const Hyperparams> hp;
  std::size_t n_items = 0;
  std::vector<double> u;
  std::vector<ItemRating> ratings;  // sorted by item
  BitVector rated;                  // B
  BitVector permanent;              // B', fixed at init
  RRParams rr;
  PrivacyBudget budget;
  double alpha_delta = 1e-6;
};

// Output of one client round: gradient frames in item order, then finish.
struct ClientRound {
  std::vector<Message> messages;
  std::size_t gradients = 0;
  std::size_t skipped = 0;  // selected items that produced no gradient
  AlphaBound alpha;
};

// Initializes a client: user factor, PRR'd bit vector, and (p, q).
// Returns nullopt for a client without ratings.
inline std::optional<ClientState> client_init(
    std::uint32_t client_id, std::span<const ItemRating> ratings,
    std::size_t n_items, std::shared_ptr<const Hyperparams> hp,
    const SessionConfig& config, double z_target) {
  if (ratings.empty()) return std::nullopt;
  ClientState s;
  s.client_id = client_id;
  s.hp = std::move(hp);
  s.n_items = n_items;
  s.u = init_user_factor(*s.hp, client_id);
  s.ratings.assign(ratings.begin(), ratings.end());
  s.rated.assign(n_items, 0);
  for (const ItemRating& r : s.ratings) s.rated[r.item] = 1;
  s.budget = config.budget;
  s.alpha_delta = config.alpha_delta;
  const std::size_t h = s.ratings.size();

  double f = 0.0;
  if (config.randomizer) {
    s.rr = rr_params_from(config.randomizer->f, config.randomizer->p,
                          config.randomizer->q, h, n_items);
    f = s.rr.f;
  } else {
    config.budget.validate();
    f = solve_f(config.budget.permanent_eps(), h);
  }
  Rng prr_rng(s.hp->seed, Stream::kPrr, client_id);
  s.permanent = prr(s.rated, f, prr_rng);
  if (!config.randomizer) {
    try {
      s.rr = calibrate(config.budget.eps_I, config.budget.permanent_eps(), h,
                       n_items, z_target);
    } catch (const InfeasibleCalibration& e) {
      throw InfeasibleCalibration(
          e.bound(), "client " + std::to_string(client_id) + ": " + e.what());
    }
  }
  return s;
}

namespace internal {
inline void apply_average(std::vector<double>& u,
                          const std::vector<double>& sum, std::size_t n) {
  if (n == 0) return;
  const double d = static_cast<double>(n);
  for (std::size_t c = 0; c < u.size(); ++c) u[c] += sum[c] / d;
}
}  // namespace internal

// One numerical-task round on the client.
//
// Errors on all rated items drive the local user update (averaged over h,
// applied after sending). The item set to transmit is drawn by IRR from
// B'. Selected rated items carry their real error; selected unrated items
// carry an error sampled from the client's error distribution restricted
// to (-alpha, alpha), with alpha recomputed from this round's errors.
inline ClientRound client_iteration(ClientState& s, const Matrix& items,
                                    std::size_t t) {
  const Hyperparams& hp = *s.hp;
  const double eta = learning_rate(t, hp);
  const std::size_t k = hp.k;

  Rng irr_rng(hp.seed, Stream::kIrr, s.client_id, t);
  const BitVector selected = irr(s.permanent, s.rr.p, s.rr.q, irr_rng);
  Rng noise(hp.seed, Stream::kNoise, s.client_id, t);

  std::vector<double> errors;
  errors.reserve(s.ratings.size());
  std::vector<double> user_sum(k, 0.0);
  for (const ItemRating& r : s.ratings) {
    auto v = items.row(r.item);
    double e = rating_error(r.rating, s.u, v);
    errors.push_back(e);
    GradDelta d = user_step(s.u, e, v, eta, hp, noise);
    for (std::size_t c = 0; c < k; ++c) user_sum[c] += d[c];
  }

  ClientRound out;
  const ErrorStats stats = error_stats(errors);
  const double sigma = stats.sigma > 0.0 ? stats.sigma : kSigmaFloor;
  if (s.budget.eps_g) {
    out.alpha = solve_alpha_for(stats, *s.budget.eps_g, s.alpha_delta);
  } else {
    out.alpha.sigma_floored = !(stats.sigma > 0.0);
  }

  Rng fake(hp.seed, Stream::kFakeError, s.client_id, t);
  std::size_t next_rated = 0;
  for (std::size_t j = 0; j < s.n_items; ++j) {
    const bool is_rated = s.rated[j] != 0;
    const std::size_t rated_idx = next_rated;
    if (is_rated) ++next_rated;
    if (!selected[j]) continue;
    double e = 0.0;
    if (is_rated) {
      e = errors[rated_idx];
    } else {
      try {
        e = sample_fake_error(stats.mu, sigma, out.alpha.alpha, fake);
      } catch (const DegenerateBound& err) {
        warn("client " + std::to_string(s.client_id) + ", item " +
             std::to_string(j) + ": " + err.what() + "; item skipped");
        ++out.skipped;
        continue;
      }
    }
    GradDelta d = item_step(items.row(j), e, s.u, eta, hp, noise);
    out.messages.emplace_back(
        GradientMessage{static_cast<std::uint32_t>(j), std::move(d)});
    ++out.gradients;
  }
  out.messages.emplace_back(FinishMessage{s.client_id});
  internal::apply_average(s.u, user_sum, s.ratings.size());
  return out;
}

}  // namespace sdmf

#endif  // SDMF_CLIENT_HPP_
