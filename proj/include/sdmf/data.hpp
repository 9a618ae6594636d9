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

#ifndef SDMF_DATA_HPP_
#define SDMF_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdmf/errors.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

struct ScoreRange {
  double min = 1.0;
  double max = 5.0;

  double width() const { return max - min; }
  bool contains(double r) const { return r >= min && r <= max; }
  double clamp(double r) const { return std::clamp(r, min, max); }
};

struct RatingTriple {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double rating = 0.0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct ItemRating {
  std::uint32_t item = 0;
  double rating = 0.0;

  friend bool operator==(const ItemRating&, const ItemRating&) = default;
};

// Sparse user-item ratings over dense 0-based ids.
//
// Datasets derived from one another (splits, perturbations) share the
// mapping back to the ids found in the source file.
class RatingDataset {
 public:
  RatingDataset() : ids_(std::make_shared<IdMap>()) {}

  // Throws InvalidArgument on out-of-range ids or ratings and on duplicate
  // (user, item) pairs. Empty id vectors mean original id == internal id.
  RatingDataset(std::size_t n_users, std::size_t n_items,
                std::vector<RatingTriple> triples, ScoreRange range = {},
                std::vector<std::int64_t> user_ids = {},
                std::vector<std::int64_t> item_ids = {})
      : n_users_(n_users),
        n_items_(n_items),
        range_(range),
        triples_(std::move(triples)),
        ids_(std::make_shared<IdMap>(
            IdMap{std::move(user_ids), std::move(item_ids)})) {
    if (!ids_->users.empty() && ids_->users.size() != n_users_) {
      throw InvalidArgument("user id map size does not match n_users");
    }
    if (!ids_->items.empty() && ids_->items.size() != n_items_) {
      throw InvalidArgument("item id map size does not match n_items");
    }
    build_index();
  }

  // A dataset over the same universe (dimensions, id map, score range) with
  // a different set of ratings.
  RatingDataset derive(std::vector<RatingTriple> triples) const {
    RatingDataset out;
    out.n_users_ = n_users_;
    out.n_items_ = n_items_;
    out.range_ = range_;
    out.ids_ = ids_;
    out.triples_ = std::move(triples);
    out.build_index();
    return out;
  }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const ScoreRange& score_range() const { return range_; }
  std::span<const RatingTriple> triples() const { return triples_; }

  // Ratings of `user`, sorted by item id.
  std::span<const ItemRating> user_ratings(std::size_t user) const {
    return per_user_[user];
  }

  std::optional<double> rating(std::size_t user, std::uint32_t item) const {
    const auto& row = per_user_[user];
    auto it = std::lower_bound(
        row.begin(), row.end(), item,
        [](const ItemRating& r, std::uint32_t i) { return r.item < i; });
    if (it == row.end() || it->item != item) return std::nullopt;
    return it->rating;
  }

  std::int64_t original_user_id(std::size_t user) const {
    return ids_->users.empty() ? static_cast<std::int64_t>(user)
                               : ids_->users[user];
  }
  std::int64_t original_item_id(std::size_t item) const {
    return ids_->items.empty() ? static_cast<std::int64_t>(item)
                               : ids_->items[item];
  }

  std::optional<std::size_t> internal_user_id(std::int64_t original) const {
    return lookup(ids_->users, original, n_users_);
  }
  std::optional<std::size_t> internal_item_id(std::int64_t original) const {
    return lookup(ids_->items, original, n_items_);
  }

 private:
  struct IdMap {
    std::vector<std::int64_t> users;  // sorted ascending
    std::vector<std::int64_t> items;  // sorted ascending
  };

  static std::optional<std::size_t> lookup(
      const std::vector<std::int64_t>& ids, std::int64_t original,
      std::size_t n) {
    if (ids.empty()) {
      if (original < 0 || static_cast<std::size_t>(original) >= n) {
        return std::nullopt;
      }
      return static_cast<std::size_t>(original);
    }
    auto it = std::lower_bound(ids.begin(), ids.end(), original);
    if (it == ids.end() || *it != original) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
  }

  void build_index() {
    per_user_.assign(n_users_, {});
    for (const RatingTriple& t : triples_) {
      if (t.user >= n_users_ || t.item >= n_items_) {
        throw InvalidArgument("rating (" + std::to_string(t.user) + ", " +
                              std::to_string(t.item) +
                              ") outside dataset dimensions");
      }
      if (!std::isfinite(t.rating) || !range_.contains(t.rating)) {
        throw InvalidArgument("rating " + std::to_string(t.rating) +
                              " outside score range");
      }
      per_user_[t.user].push_back({t.item, t.rating});
    }
    for (std::size_t u = 0; u < n_users_; ++u) {
      auto& row = per_user_[u];
      std::sort(row.begin(), row.end(),
                [](const ItemRating& a, const ItemRating& b) {
                  return a.item < b.item;
                });
      auto dup = std::adjacent_find(
          row.begin(), row.end(), [](const ItemRating& a, const ItemRating& b) {
            return a.item == b.item;
          });
      if (dup != row.end()) {
        throw InvalidArgument("duplicate rating for (user " +
                              std::to_string(u) + ", item " +
                              std::to_string(dup->item) + ")");
      }
    }
  }

  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  ScoreRange range_;
  std::vector<RatingTriple> triples_;
  std::vector<std::vector<ItemRating>> per_user_;
  std::shared_ptr<const IdMap> ids_;
};

// ---------------------------------------------------------------------------
// Parsing

enum class Delimiter { kAuto, kTab, kComma };

struct ParseOptions {
  Delimiter delimiter = Delimiter::kAuto;
  ScoreRange score_range;
};

namespace internal {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' ||
                        s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace internal

// Parses "user<d>item<d>rating[<d>timestamp...]" lines, where <d> is a tab
// or a comma (auto-detected from the first non-empty line unless fixed by
// `options`). Original ids must be positive integers; they are reindexed
// to dense 0-based ids in ascending order of the original id.
inline RatingDataset parse_ratings(std::string_view text,
                                   const ParseOptions& options = {}) {
  struct Raw {
    std::int64_t user;
    std::int64_t item;
    double rating;
    std::size_t line;
  };
  std::vector<Raw> raw;
  char delim = options.delimiter == Delimiter::kTab     ? '\t'
               : options.delimiter == Delimiter::kComma ? ','
                                                        : '\0';

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (internal::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (delim == '\0') {
      if (line.find('\t') != std::string_view::npos) {
        delim = '\t';
      } else if (line.find(',') != std::string_view::npos) {
        delim = ',';
      } else {
        throw ParseError(line_no, "cannot detect delimiter (tab or comma)");
      }
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t cut = line.find(delim, start);
      fields.push_back(line.substr(start, cut - start));
      if (cut == std::string_view::npos) break;
      start = cut + 1;
    }
    if (fields.size() < 3) {
      throw ParseError(line_no, "expected at least 3 fields, found " +
                                    std::to_string(fields.size()));
    }
    Raw r{0, 0, 0.0, line_no};
    if (!internal::parse_number(fields[0], r.user) || r.user <= 0) {
      throw ParseError(line_no, "user id is not a positive integer");
    }
    if (!internal::parse_number(fields[1], r.item) || r.item <= 0) {
      throw ParseError(line_no, "item id is not a positive integer");
    }
    if (!internal::parse_number(fields[2], r.rating) ||
        !std::isfinite(r.rating)) {
      throw ParseError(line_no, "rating is not a number");
    }
    if (!options.score_range.contains(r.rating)) {
      throw ParseError(line_no, "rating outside score range");
    }
    raw.push_back(r);
    if (end == text.size()) break;
  }

  std::vector<std::int64_t> users;
  std::vector<std::int64_t> items;
  users.reserve(raw.size());
  items.reserve(raw.size());
  for (const Raw& r : raw) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  auto unique_sorted = [](std::vector<std::int64_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(users);
  unique_sorted(items);

  auto index_of = [](const std::vector<std::int64_t>& v, std::int64_t id) {
    return static_cast<std::uint32_t>(
        std::lower_bound(v.begin(), v.end(), id) - v.begin());
  };
  std::vector<RatingTriple> triples;
  triples.reserve(raw.size());
  std::vector<std::pair<std::uint64_t, std::size_t>> keys;
  keys.reserve(raw.size());
  for (const Raw& r : raw) {
    RatingTriple t{index_of(users, r.user), index_of(items, r.item), r.rating};
    keys.emplace_back((static_cast<std::uint64_t>(t.user) << 32) | t.item,
                      r.line);
    triples.push_back(t);
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i].first == keys[i - 1].first) {
      throw ParseError(keys[i].second, "duplicate (user, item) pair");
    }
  }
  std::size_t n_users = users.size();
  std::size_t n_items = items.size();
  return RatingDataset(n_users, n_items, std::move(triples),
                       options.score_range, std::move(users),
                       std::move(items));
}

inline RatingDataset load_ratings(const std::string& path,
                                  const ParseOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rating file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ratings(buffer.str(), options);
}

// ---------------------------------------------------------------------------
// Splitting

enum class SplitMode { kRandomHoldout, kLeaveOneOut };

struct SplitSpec {
  SplitMode mode = SplitMode::kRandomHoldout;
  double fraction = 0.2;  // share of triples held out (random mode only)
  std::uint64_t seed = 0;
};

struct Split {
  RatingDataset train;
  RatingDataset test;
};

inline Split split(const RatingDataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw InvalidArgument("cannot split an empty dataset");
  Rng rng(spec.seed, Stream::kSplit);
  const auto triples = dataset.triples();
  std::vector<bool> in_test(triples.size(), false);

  if (spec.mode == SplitMode::kRandomHoldout) {
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) {
      throw InvalidArgument("split fraction must lie in (0, 1)");
    }
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(spec.fraction * static_cast<double>(triples.size())));
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_test positions become the test set.
    for (std::size_t i = 0; i < n_test; ++i) {
      std::size_t j = i + rng.index(order.size() - i);
      std::swap(order[i], order[j]);
      in_test[order[i]] = true;
    }
  } else {
    std::vector<std::vector<std::size_t>> by_user(dataset.n_users());
    for (std::size_t i = 0; i < triples.size(); ++i) {
      by_user[triples[i].user].push_back(i);
    }
    std::size_t skipped = 0;
    for (const auto& rows : by_user) {
      if (rows.empty()) continue;
      if (rows.size() < 2) {
        ++skipped;
        continue;
      }
      in_test[rows[rng.index(rows.size())]] = true;
    }
    if (skipped > 0) {
      warn("leave-one-out: " + std::to_string(skipped) +
           " user(s) with a single rating kept entirely in train");
    }
  }

  std::vector<RatingTriple> train;
  std::vector<RatingTriple> test;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    (in_test[i] ? test : train).push_back(triples[i]);
  }
  return {dataset.derive(std::move(train)), dataset.derive(std::move(test))};
}

// ---------------------------------------------------------------------------
// Subsampling

// Keeps the `n_items` most-rated items (ties by lower id), then draws
// `n_users` users uniformly among those with at least `min_ratings` ratings
// on the kept items. Ids are re-densified; original ids are preserved.
inline RatingDataset subsample(const RatingDataset& dataset,
                               std::size_t n_users, std::size_t n_items,
                               std::size_t min_ratings, std::uint64_t seed) {
  if (n_users > dataset.n_users() || n_items > dataset.n_items()) {
    throw InvalidArgument("subsample larger than the dataset");
  }
  std::vector<std::size_t> popularity(dataset.n_items(), 0);
  for (const RatingTriple& t : dataset.triples()) ++popularity[t.item];
  std::vector<std::uint32_t> by_popularity(dataset.n_items());
  std::iota(by_popularity.begin(), by_popularity.end(), 0u);
  std::stable_sort(by_popularity.begin(), by_popularity.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return popularity[a] > popularity[b];
                   });
  std::vector<std::uint32_t> kept_items(by_popularity.begin(),
                                        by_popularity.begin() + n_items);
  std::sort(kept_items.begin(), kept_items.end());
  std::vector<std::int64_t> item_slot(dataset.n_items(), -1);
  for (std::size_t i = 0; i < kept_items.size(); ++i) {
    item_slot[kept_items[i]] = static_cast<std::int64_t>(i);
  }

  std::vector<std::uint32_t> qualifying;
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    std::size_t count = 0;
    for (const ItemRating& r : dataset.user_ratings(u)) {
      if (item_slot[r.item] >= 0) ++count;
    }
    if (count >= min_ratings && count > 0) {
      qualifying.push_back(static_cast<std::uint32_t>(u));
    }
  }
  std::vector<std::uint32_t> kept_users;
  if (qualifying.size() < n_users) {
    warn("subsample: only " + std::to_string(qualifying.size()) +
         " user(s) have at least " + std::to_string(min_ratings) +
         " ratings on the kept items; " + std::to_string(n_users) +
         " requested");
    kept_users = qualifying;
  } else {
    Rng rng(seed, Stream::kSubsample);
    for (std::size_t i = 0; i < n_users; ++i) {
      std::size_t j = i + rng.index(qualifying.size() - i);
      std::swap(qualifying[i], qualifying[j]);
    }
    kept_users.assign(qualifying.begin(), qualifying.begin() + n_users);
    std::sort(kept_users.begin(), kept_users.end());
  }

  std::vector<RatingTriple> triples;
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  for (std::uint32_t item : kept_items) {
    item_ids.push_back(dataset.original_item_id(item));
  }
  for (std::size_t nu = 0; nu < kept_users.size(); ++nu) {
    std::uint32_t u = kept_users[nu];
    user_ids.push_back(dataset.original_user_id(u));
    for (const ItemRating& r : dataset.user_ratings(u)) {
      if (item_slot[r.item] < 0) continue;
      triples.push_back({static_cast<std::uint32_t>(nu),
                         static_cast<std::uint32_t>(item_slot[r.item]),
                         r.rating});
    }
  }
  return RatingDataset(kept_users.size(), kept_items.size(),
                       std::move(triples), dataset.score_range(),
                       std::move(user_ids), std::move(item_ids));
}

// ---------------------------------------------------------------------------
// Synthetic data

// Low-rank explicit-feedback generator with skewed item popularity and
// user activity, shaped like public movie-rating datasets. Which items a
// user rates depends on the same latent taste that drives rating values,
// so the data carries signal for both rating and ranking tasks.
struct SyntheticSpec {
  std::size_t n_users = 943;
  std::size_t n_items = 1682;
  std::size_t n_ratings = 100000;
  std::size_t rank = 5;
  std::size_t min_per_user = 20;
  double global_mean = 3.53;
  double signal_sd = 0.8;    // sd of the latent dot product
  double noise_sd = 0.5;     // rating noise before rounding
  double affinity = 1.5;     // strength of taste in item choice
  std::uint64_t seed = 0;
  ScoreRange score_range;
};

inline RatingDataset synthetic_ratings(const SyntheticSpec& spec) {
  const std::size_t nu = spec.n_users;
  const std::size_t ni = spec.n_items;
  const std::size_t cap = std::max<std::size_t>(1, ni / 2);
  if (nu == 0 || ni == 0) throw InvalidArgument("empty synthetic shape");
  if (spec.min_per_user * nu > spec.n_ratings || spec.n_ratings > nu * cap) {
    throw InvalidArgument("synthetic rating count incompatible with shape");
  }
  Rng rng(spec.seed, Stream::kSynthetic);
  const std::size_t rank = std::max<std::size_t>(1, spec.rank);
  const double coord_sd = std::pow(
      spec.signal_sd * spec.signal_sd / static_cast<double>(rank), 0.25);

  std::vector<double> user_f(nu * rank), item_f(ni * rank);
  for (double& x : user_f) x = rng.normal(0.0, coord_sd);
  for (double& x : item_f) x = rng.normal(0.0, coord_sd);
  std::vector<double> user_bias(nu), item_bias(ni);
  for (double& b : user_bias) b = rng.normal(0.0, 0.4);
  for (double& b : item_bias) b = rng.normal(0.0, 0.5);

  // Zipf-like popularity over a random permutation of items.
  std::vector<std::size_t> perm(ni);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = ni; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  std::vector<double> log_pop(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    log_pop[perm[i]] = -std::log(static_cast<double>(i + 1));
  }

  // Activity: lognormal shares of the ratings above the per-user minimum,
  // rounded by largest remainder so the total is exact.
  std::vector<double> share(nu);
  double share_sum = 0.0;
  for (double& s : share) {
    s = std::exp(rng.normal(0.0, 1.0));
    share_sum += s;
  }
  const double extra = static_cast<double>(spec.n_ratings -
                                           spec.min_per_user * nu);
  std::vector<std::size_t> activity(nu);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t u = 0; u < nu; ++u) {
    double want = spec.min_per_user + extra * share[u] / share_sum;
    want = std::min(want, static_cast<double>(cap));
    activity[u] = static_cast<std::size_t>(std::floor(want));
    assigned += activity[u];
    remainders.emplace_back(want - std::floor(want), u);
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) {
              return a.first != b.first ? a.first > b.first
                                        : a.second < b.second;
            });
  while (assigned < spec.n_ratings) {
    bool progressed = false;
    for (const auto& [frac, u] : remainders) {
      if (assigned == spec.n_ratings) break;
      if (activity[u] < cap) {
        ++activity[u];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }

  auto dot = [&](std::size_t u, std::size_t i) {
    double s = 0.0;
    for (std::size_t k = 0; k < rank; ++k) {
      s += user_f[u * rank + k] * item_f[i * rank + k];
    }
    return s;
  };

  std::vector<RatingTriple> triples;
  triples.reserve(spec.n_ratings);
  std::vector<std::pair<double, std::uint32_t>> keys(ni);
  for (std::size_t u = 0; u < nu; ++u) {
    // Weighted sampling without replacement (exponential keys).
    for (std::size_t i = 0; i < ni; ++i) {
      double log_w = log_pop[i] + spec.affinity * dot(u, i);
      double e = -std::log(1.0 - rng.uniform());
      keys[i] = {std::log(e) - log_w, static_cast<std::uint32_t>(i)};
    }
    std::size_t a = activity[u];
    if (a == 0) continue;
    std::nth_element(keys.begin(), keys.begin() + (a - 1), keys.end());
    std::vector<std::uint32_t> chosen;
    for (std::size_t k = 0; k < a; ++k) chosen.push_back(keys[k].second);
    std::sort(chosen.begin(), chosen.end());
    for (std::uint32_t i : chosen) {
      double r = spec.global_mean + user_bias[u] + item_bias[i] + dot(u, i) +
                 rng.normal(0.0, spec.noise_sd);
      r = spec.score_range.clamp(std::round(r));
      triples.push_back({static_cast<std::uint32_t>(u), i, r});
    }
  }
  return RatingDataset(nu, ni, std::move(triples), spec.score_range);
}

}  // namespace sdmf

#endif  // SDMF_DATA_HPP_
