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

#ifndef SDMF_BPR_HPP_
#define SDMF_BPR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdmf/client.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/matrix.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

// A rated item paired with an unrated one for user `user`.
struct PairwiseSample {
  std::uint32_t user = 0;
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;
};

// Score gap between the positive and the negative item.
inline double bpr_margin(std::span<const double> u,
                         std::span<const double> v_pos,
                         std::span<const double> v_neg) {
  return predict(u, v_pos) - predict(u, v_neg);
}

// e^{-x} / (1 + e^{-x}), i.e. 1 - logistic(x), without overflow.
inline double logistic_complement(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

struct BprErrors {
  double positive;  // error used in place of e_ij for the rated item
  double negative;  // error used for the unrated item
};

inline BprErrors bpr_errors(double x) {
  const double s = logistic_complement(x);
  return {-s, s};
}

struct BprDeltas {
  GradDelta u;
  GradDelta positive;
  GradDelta negative;
};

// Additive SGLD deltas descending -ln logistic(x) plus the Gaussian priors.
// Noise is drawn for u, then the positive item, then the negative item.
inline BprDeltas bpr_step(std::span<const double> u,
                          std::span<const double> v_pos,
                          std::span<const double> v_neg, double eta,
                          const Hyperparams& hp, Rng& rng) {
  const std::size_t k = u.size();
  if (v_pos.size() != k || v_neg.size() != k || hp.lambda_u.size() != k ||
      hp.lambda_v.size() != k) {
    throw InvalidArgument("factor dimension mismatch");
  }
  const double s = logistic_complement(bpr_margin(u, v_pos, v_neg));
  const double noise_sd = std::sqrt(eta);
  auto noise = [&]() { return hp.noise_enabled ? rng.normal(0.0, noise_sd) : 0.0; };
  BprDeltas d{GradDelta(k), GradDelta(k), GradDelta(k)};
  for (std::size_t c = 0; c < k; ++c) {
    d.u[c] = -eta * (s * (v_neg[c] - v_pos[c]) + hp.lambda_u[c] * u[c]) + noise();
  }
  for (std::size_t c = 0; c < k; ++c) {
    d.positive[c] = -eta * (-s * u[c] + hp.lambda_v[c] * v_pos[c]) + noise();
  }
  for (std::size_t c = 0; c < k; ++c) {
    d.negative[c] = -eta * (s * u[c] + hp.lambda_v[c] * v_neg[c]) + noise();
  }
  return d;
}

inline BprDeltas bpr_step(const PairwiseSample& sample, const FactorModel& model,
                          double eta, const Hyperparams& hp, Rng& rng) {
  return bpr_step(model.users.row(sample.user), model.items.row(sample.positive),
                  model.items.row(sample.negative), eta, hp, rng);
}

// Uniform draw among the items missing from `rated` (sorted by item).
// Requires rated.size() < n_items.
inline std::uint32_t sample_unrated(std::span<const ItemRating> rated,
                                    std::size_t n_items, Rng& rng) {
  std::size_t candidate = rng.index(n_items - rated.size());
  for (const ItemRating& r : rated) {
    if (r.item <= candidate) {
      ++candidate;
    } else {
      break;
    }
  }
  return static_cast<std::uint32_t>(candidate);
}

// One one-class round on the client.
//
// Every IRR-selected item is transmitted exactly once, in the role its true
// ratedness dictates: a selected rated item is paired with a uniformly drawn
// unrated partner and sends its positive-role delta; a selected unrated item
// is paired with a uniformly drawn rated partner and sends its negative-role
// delta. Partners are never transmitted on account of the pairing. The user
// factor moves by the average u-delta over the pairs formed this round.
inline ClientRound sd_bpr_client_iteration(ClientState& s, const Matrix& items,
                                           std::size_t t) {
  const Hyperparams& hp = *s.hp;
  const double eta = learning_rate(t, hp);
  const std::size_t k = hp.k;
  Rng irr_rng(hp.seed, Stream::kIrr, s.client_id, t);
  const BitVector selected = irr(s.permanent, s.rr.p, s.rr.q, irr_rng);
  Rng noise(hp.seed, Stream::kNoise, s.client_id, t);
  Rng pairing(hp.seed, Stream::kPairing, s.client_id, t);

  ClientRound out;
  std::vector<double> user_sum(k, 0.0);
  std::size_t pairs = 0;
  const bool all_rated = s.ratings.size() == s.n_items;
  for (std::size_t j = 0; j < s.n_items; ++j) {
    if (!selected[j]) continue;
    BprDeltas d;
    if (s.rated[j]) {
      if (all_rated) {
        ++out.skipped;
        continue;
      }
      const std::uint32_t partner = sample_unrated(s.ratings, s.n_items, pairing);
      d = bpr_step(s.u, items.row(j), items.row(partner), eta, hp, noise);
      out.messages.emplace_back(
          GradientMessage{static_cast<std::uint32_t>(j), std::move(d.positive)});
    } else {
      const std::uint32_t partner =
          s.ratings[pairing.index(s.ratings.size())].item;
      d = bpr_step(s.u, items.row(partner), items.row(j), eta, hp, noise);
      out.messages.emplace_back(
          GradientMessage{static_cast<std::uint32_t>(j), std::move(d.negative)});
    }
    for (std::size_t c = 0; c < k; ++c) user_sum[c] += d.u[c];
    ++pairs;
    ++out.gradients;
  }
  if (out.skipped > 0) {
    warn("client " + std::to_string(s.client_id) +
         " rated every item; no negative item to pair with");
  }
  out.messages.emplace_back(FinishMessage{s.client_id});
  internal::apply_average(s.u, user_sum, pairs);
  return out;
}

enum class BprPairUpdate {
  kBoth,          // standard BPR: both items of a pair move
  kPositiveOnly,  // only the rated item moves (mirrors the distributed pairing)
};

// Non-private BPR-MF reference. Each round every user pairs each rated item
// with a uniformly drawn unrated item (same random streams as the
// distributed client), averages its u-deltas, and contributes item deltas.
inline FactorModel centralized_bpr_train(const RatingDataset& train,
                                         const Hyperparams& hp,
                                         std::size_t rounds,
                                         BprPairUpdate update,
                                         const TrainOptions& options = {}) {
  hp.validate();
  if (rounds < 1) throw InvalidArgument("at least one round is required");
  FactorModel model = init_model(train.n_users(), train.n_items(), hp);
  const std::size_t k = hp.k;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const double eta = learning_rate(t, hp);
    ItemAccumulator acc(train.n_items(), k);
    for (std::size_t i = 0; i < train.n_users(); ++i) {
      auto ratings = train.user_ratings(i);
      if (ratings.empty() || ratings.size() == train.n_items()) continue;
      Rng noise(hp.seed, Stream::kNoise, i, t);
      Rng pairing(hp.seed, Stream::kPairing, i, t);
      std::span<double> u = model.users.row(i);
      std::vector<double> user_sum(k, 0.0);
      for (const ItemRating& r : ratings) {
        const std::uint32_t neg = sample_unrated(ratings, train.n_items(), pairing);
        BprDeltas d = bpr_step(u, model.items.row(r.item), model.items.row(neg),
                               eta, hp, noise);
        for (std::size_t c = 0; c < k; ++c) user_sum[c] += d.u[c];
        acc.add(r.item, d.positive);
        if (update == BprPairUpdate::kBoth) acc.add(neg, d.negative);
      }
      const double n = static_cast<double>(ratings.size());
      for (std::size_t c = 0; c < k; ++c) u[c] += user_sum[c] / n;
    }
    acc.apply(model.items, options.averaging);
    if (options.on_round) options.on_round(t, model);
  }
  return model;
}

}  // namespace sdmf

#endif  // SDMF_BPR_HPP_
