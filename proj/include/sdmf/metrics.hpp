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

#ifndef SDMF_METRICS_HPP_
#define SDMF_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/exact_sum.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

inline double rmse(const RatingDataset& test, const FactorModel& model) {
  if (test.empty()) throw InvalidArgument("rmse of an empty test set");
  ExactSum sq;
  for (const RatingTriple& r : test.triples()) {
    const double e =
        r.rating - predict(model.users.row(r.user), model.items.row(r.item));
    sq.add(e * e);
  }
  return std::sqrt(sq.value() / static_cast<double>(test.size()));
}

// Leave-one-out AUC. For every user with a test item, the fraction of
// candidate items (neither in train nor in test for that user) scored below
// the held-out item, ties counting one half. Users without candidates are
// skipped. Returns NaN when no user qualifies.
inline double auc(const RatingDataset& test, const RatingDataset& train,
                  const FactorModel& model) {
  ExactSum total;
  std::size_t users = 0;
  std::vector<std::uint8_t> excluded(test.n_items(), 0);
  for (std::size_t u = 0; u < test.n_users(); ++u) {
    auto held = test.user_ratings(u);
    if (held.empty()) continue;
    std::fill(excluded.begin(), excluded.end(), 0);
    for (const ItemRating& r : held) excluded[r.item] = 1;
    for (const ItemRating& r : train.user_ratings(u)) excluded[r.item] = 1;
    auto uf = model.users.row(u);
    for (const ItemRating& pos : held) {
      const double s = predict(uf, model.items.row(pos.item));
      double below = 0.0;
      std::size_t candidates = 0;
      for (std::size_t j = 0; j < test.n_items(); ++j) {
        if (excluded[j]) continue;
        ++candidates;
        const double x = predict(uf, model.items.row(j));
        if (x < s) {
          below += 1.0;
        } else if (x == s) {
          below += 0.5;
        }
      }
      if (candidates == 0) continue;
      total.add(below / static_cast<double>(candidates));
      ++users;
    }
  }
  if (users == 0) return std::nan("");
  return total.value() / static_cast<double>(users);
}

// Input perturbation: r <- clamp(r + Laplace(width / eps)). Which pairs are
// rated is left unchanged.
inline RatingDataset isgld_perturb(const RatingDataset& train, double eps,
                                   const ScoreRange& range, Rng& rng) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  const double b = range.width() / eps;
  std::vector<RatingTriple> out(train.triples().begin(),
                                train.triples().end());
  for (RatingTriple& r : out) r.rating = range.clamp(r.rating + rng.laplace(b));
  return train.derive(std::move(out));
}

}  // namespace sdmf

#endif  // SDMF_METRICS_HPP_
