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

#ifndef SDMF_MF_HPP_
#define SDMF_MF_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/exact_sum.hpp"
#include "sdmf/matrix.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

// Additive update to one latent-factor row: x <- x + delta.
using GradDelta = std::vector<double>;

struct Hyperparams {
  std::size_t k = 50;
  double eta0 = 5e-6;
  double gamma = 0.6;
  std::vector<double> lambda_u;  // diagonal of the user prior precision
  std::vector<double> lambda_v;  // diagonal of the item prior precision
  std::uint64_t seed = 0;
  bool noise_enabled = true;
  // Standard deviation of the initial factor entries; <= 0 selects
  // 0.1 / sqrt(k).
  double init_sd = 0.0;

  double initial_sd() const {
    return init_sd > 0.0 ? init_sd : 0.1 / std::sqrt(static_cast<double>(k));
  }

  void validate() const {
    if (k < 1) throw InvalidArgument("K must be at least 1");
    if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
    if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
    if (lambda_u.size() != k || lambda_v.size() != k) {
      throw InvalidArgument("regularizer vectors must have length K");
    }
    for (double l : lambda_u) {
      if (!(l > 0.0)) throw InvalidArgument("lambda_u entries must be > 0");
    }
    for (double l : lambda_v) {
      if (!(l > 0.0)) throw InvalidArgument("lambda_v entries must be > 0");
    }
  }
};

// Draws the diagonal priors from Gamma(shape, rate) using the master seed.
inline Hyperparams make_hyperparams(std::size_t k, double eta0, double gamma,
                                    std::uint64_t seed,
                                    bool noise_enabled = true,
                                    double prior_shape = 1.0,
                                    double prior_rate = 100.0) {
  Hyperparams hp;
  hp.k = k;
  hp.eta0 = eta0;
  hp.gamma = gamma;
  hp.seed = seed;
  hp.noise_enabled = noise_enabled;
  Rng rng(seed, Stream::kPrior);
  hp.lambda_u.resize(k);
  hp.lambda_v.resize(k);
  for (double& l : hp.lambda_u) l = rng.gamma(prior_shape, 1.0 / prior_rate);
  for (double& l : hp.lambda_v) l = rng.gamma(prior_shape, 1.0 / prior_rate);
  hp.validate();
  return hp;
}

struct FactorModel {
  Matrix users;  // n_users x K
  Matrix items;  // n_items x K

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

// eta0 / t^gamma, for t >= 1.
inline double learning_rate(std::size_t t, const Hyperparams& hp) {
  if (t < 1) throw InvalidArgument("iteration index starts at 1");
  return hp.eta0 / std::pow(static_cast<double>(t), hp.gamma);
}

inline double predict(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("factor dimension mismatch: " +
                          std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

inline double rating_error(double r, std::span<const double> u,
                           std::span<const double> v) {
  return r - predict(u, v);
}

namespace internal {
// eta * (e * other - lambda o self) + N(0, eta I).
inline GradDelta langevin_step(std::span<const double> self, double e,
                               std::span<const double> other,
                               std::span<const double> lambda, double eta,
                               bool noise, Rng& rng) {
  if (self.size() != other.size() || self.size() != lambda.size()) {
    throw InvalidArgument("factor dimension mismatch");
  }
  GradDelta delta(self.size());
  const double noise_sd = std::sqrt(eta);
  for (std::size_t k = 0; k < self.size(); ++k) {
    delta[k] = eta * (e * other[k] - lambda[k] * self[k]);
    if (noise) delta[k] += rng.normal(0.0, noise_sd);
  }
  return delta;
}
}  // namespace internal

// SGLD step for a user row given the error on one of its ratings.
inline GradDelta user_step(std::span<const double> u, double e,
                           std::span<const double> v, double eta,
                           const Hyperparams& hp, Rng& rng) {
  return internal::langevin_step(u, e, v, hp.lambda_u, eta, hp.noise_enabled,
                                 rng);
}

// SGLD step for an item row given the error of one user on it.
inline GradDelta item_step(std::span<const double> v, double e,
                           std::span<const double> u, double eta,
                           const Hyperparams& hp, Rng& rng) {
  return internal::langevin_step(v, e, u, hp.lambda_v, eta, hp.noise_enabled,
                                 rng);
}

inline std::vector<double> init_user_factor(const Hyperparams& hp,
                                            std::size_t user) {
  Rng rng(hp.seed, Stream::kUserInit, user);
  std::vector<double> u(hp.k);
  for (double& x : u) x = rng.normal(0.0, hp.initial_sd());
  return u;
}

inline std::vector<double> init_item_factor(const Hyperparams& hp,
                                            std::size_t item) {
  Rng rng(hp.seed, Stream::kItemInit, item);
  std::vector<double> v(hp.k);
  for (double& x : v) x = rng.normal(0.0, hp.initial_sd());
  return v;
}

inline Matrix init_item_matrix(std::size_t n_items, const Hyperparams& hp) {
  Matrix items(n_items, hp.k);
  for (std::size_t j = 0; j < n_items; ++j) {
    auto v = init_item_factor(hp, j);
    std::copy(v.begin(), v.end(), items.row(j).begin());
  }
  return items;
}

inline FactorModel init_model(std::size_t n_users, std::size_t n_items,
                              const Hyperparams& hp) {
  FactorModel model{Matrix(n_users, hp.k), init_item_matrix(n_items, hp)};
  for (std::size_t i = 0; i < n_users; ++i) {
    auto u = init_user_factor(hp, i);
    std::copy(u.begin(), u.end(), model.users.row(i).begin());
  }
  return model;
}

// How the server turns a round's summed item deltas into an update.
enum class ItemAveraging {
  kGlobalCount,  // divide every item's sum by the round's total message count
  kPerItem,      // divide by the number of messages that item received
};

// Per-item sums of a round's item deltas, reduced order-independently.
class ItemAccumulator {
 public:
  ItemAccumulator(std::size_t n_items, std::size_t k)
      : k_(k), sums_(n_items * k), counts_(n_items, 0) {}

  void add(std::size_t item, std::span<const double> delta) {
    for (std::size_t c = 0; c < k_; ++c) sums_[item * k_ + c].add(delta[c]);
    ++counts_[item];
    ++total_;
  }

  std::size_t total() const { return total_; }
  std::size_t count(std::size_t item) const { return counts_[item]; }

  // items <- items + sum / divisor. No-op when nothing was received.
  void apply(Matrix& items, ItemAveraging mode) const {
    if (total_ == 0) return;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] == 0) continue;
      const double divisor = static_cast<double>(
          mode == ItemAveraging::kGlobalCount ? total_ : counts_[j]);
      for (std::size_t c = 0; c < k_; ++c) {
        items(j, c) += sums_[j * k_ + c].value() / divisor;
      }
    }
  }

 private:
  std::size_t k_;
  std::vector<ExactSum> sums_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

struct TrainOptions {
  ItemAveraging averaging = ItemAveraging::kGlobalCount;
  // Called after every round with the round index and current model.
  std::function<void(std::size_t, const FactorModel&)> on_round;
};

// Non-private reference training.
//
// Every round, each user computes errors against the round-start item
// matrix, applies the average of its per-rating SGLD user steps once, and
// contributes one item step per rating; item steps are reduced and applied
// once at the end of the round. Noise for user i in round t is drawn from
// its own stream: user steps in item order, then item steps in item order.
inline FactorModel centralized_train(const RatingDataset& train,
                                     const Hyperparams& hp, std::size_t rounds,
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
      if (ratings.empty()) continue;
      Rng noise(hp.seed, Stream::kNoise, i, t);
      std::span<double> u = model.users.row(i);
      std::vector<double> errors;
      errors.reserve(ratings.size());
      std::vector<double> user_sum(k, 0.0);
      for (const ItemRating& r : ratings) {
        auto v = model.items.row(r.item);
        double e = rating_error(r.rating, u, v);
        errors.push_back(e);
        GradDelta d = user_step(u, e, v, eta, hp, noise);
        for (std::size_t c = 0; c < k; ++c) user_sum[c] += d[c];
      }
      for (std::size_t n = 0; n < ratings.size(); ++n) {
        GradDelta d = item_step(model.items.row(ratings[n].item), errors[n], u,
                                eta, hp, noise);
        acc.add(ratings[n].item, d);
      }
      const double h = static_cast<double>(ratings.size());
      for (std::size_t c = 0; c < k; ++c) u[c] += user_sum[c] / h;
    }
    acc.apply(model.items, options.averaging);
    if (options.on_round) options.on_round(t, model);
  }
  return model;
}

}  // namespace sdmf

#endif  // SDMF_MF_HPP_
