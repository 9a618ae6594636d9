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


// Acceptance suite. Prints one PASS, FAIL or SKIP line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "sdmf/sdmf.hpp"

#ifndef SDMF_SOURCE_DIR
#define SDMF_SOURCE_DIR "."
#endif

namespace sdmf {
namespace {

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind = kFail;
  std::string detail;
};

Outcome Check(bool ok, const std::string& detail) {
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

std::string Fmt(double x, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

double RelErr(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

// 1. Calibration round trips over the budget grid.
Outcome BudgetSolverRoundTrips() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t feasible = 0, infeasible = 0, bad = 0;
  double worst = 0.0;
  for (double eps : {0.0625, 0.25, 1.0, 4.0}) {
    for (std::size_t h : {1, 5, 20, 100}) {
      for (std::size_t n : {100, 1682}) {
        for (double mult : {0.5, 1.0, 2.0}) {
          const double z = mult * static_cast<double>(h);
          try {
            const RRParams rr = calibrate(eps, 2 * eps, h, n, z);
            const double e1 = RelErr(epsilon_I_of(rr.p_star, rr.q_star, h), eps);
            const double e2 =
                RelErr(expected_sends(h, n, rr.p_star, rr.q_star), z);
            worst = std::max({worst, e1, e2});
            if (e1 > 1e-9 || e2 > 1e-9) ++bad;
            ++feasible;
          } catch (const InfeasibleCalibration& e) {
            if (e.bound().empty()) ++bad;
            ++infeasible;
          }
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return Check(bad == 0 && secs < 1.0,
               std::to_string(feasible) + " feasible (max rel err " +
                   Fmt(worst, 3) + "), " + std::to_string(infeasible) +
                   " infeasible with bound, " + Fmt(secs, 3) + " s");
}

// 2. Monte-Carlo send frequencies of the two-stage randomizer.
Outcome EmpiricalLikelihoodRatios() {
  constexpr std::size_t kBits = 1'000'000;
  bool ok = true;
  std::ostringstream detail;
  std::uint64_t seed = 100;
  for (double eps : {1.0, 4.0}) {
    const std::size_t h = 20, n = 1682;
    const RRParams rr = calibrate(eps, 2 * eps, h, n, static_cast<double>(h));
    const double ratio =
        rr.q_star * (1 - rr.p_star) / (rr.p_star * (1 - rr.q_star));
    const double ratio_err = RelErr(ratio, std::exp(eps / h));
    auto frequency = [&](std::uint8_t bit) {
      Rng rng(++seed);
      const BitVector truth(kBits, bit);
      const BitVector sent = irr(prr(truth, rr.f, rng), rr.p, rr.q, rng);
      return static_cast<double>(std::count(sent.begin(), sent.end(), 1)) /
             static_cast<double>(kBits);
    };
    const double hat_q = frequency(1);
    const double hat_p = frequency(0);
    const double sd_q = std::sqrt(rr.q_star * (1 - rr.q_star) / kBits);
    const double sd_p = std::sqrt(rr.p_star * (1 - rr.p_star) / kBits);
    // Delta-method sd of the empirical ratio q/p.
    const double sd_ratio =
        (rr.q_star / rr.p_star) *
        std::sqrt(std::pow(sd_q / rr.q_star, 2) + std::pow(sd_p / rr.p_star, 2));
    const double z_q = std::fabs(hat_q - rr.q_star) / sd_q;
    const double z_p = std::fabs(hat_p - rr.p_star) / sd_p;
    const double z_r =
        std::fabs(hat_q / hat_p - rr.q_star / rr.p_star) / sd_ratio;
    ok = ok && z_q <= 3 && z_p <= 3 && z_r <= 3 && ratio_err <= 1e-9;
    detail << "eps_I=" << eps << ": |z| q*=" << Fmt(z_q, 3)
           << " p*=" << Fmt(z_p, 3) << " ratio=" << Fmt(z_r, 3)
           << ", analytic ratio rel err " << Fmt(ratio_err, 3) << "; ";
  }
  return Check(ok, detail.str());
}

// 3. Fake-error bound calibration and truncated sampling.
Outcome FakeGradientCalibration() {
  constexpr int kSamples = 100'000;
  constexpr int kBins = 20;
  bool ok = true;
  double min_p = 1.0;
  std::size_t clamped = 0;
  std::uint64_t seed = 300;
  for (auto [mu, sigma] : {std::pair{0.0, 1.0}, std::pair{0.3, 0.8}}) {
    for (double eps : {4.0, 1.0, 0.25, 0.0625}) {
      const AlphaBound b = solve_alpha(eps, mu, sigma);
      if (b.clamped) {
        ++clamped;
        ok = ok && b.alpha == b.alpha_max && eps < b.eps_g_achieved &&
             b.eps_g_achieved == epsilon_g_of(b.alpha_max, mu, sigma);
      } else {
        ok = ok && b.eps_g_achieved >= eps - 1e-6 && b.eps_g_achieved <= eps &&
             std::fabs(epsilon_g_of(b.alpha, mu, sigma) - b.eps_g_achieved) <
                 1e-12;
      }
      Rng rng(++seed);
      std::vector<double> counts(kBins, 0.0);
      for (int i = 0; i < kSamples; ++i) {
        const double x = sample_fake_error(mu, sigma, b.alpha, rng);
        if (!(x > -b.alpha && x < b.alpha)) ok = false;
        const int bin = static_cast<int>((x + b.alpha) / (2 * b.alpha) * kBins);
        counts[std::clamp(bin, 0, kBins - 1)] += 1;
      }
      boost::math::normal_distribution<double> nd(mu, sigma);
      const double mass = coverage(b.alpha, mu, sigma);
      double chi2 = 0.0;
      for (int k = 0; k < kBins; ++k) {
        const double lo = -b.alpha + 2 * b.alpha * k / kBins;
        const double hi = lo + 2 * b.alpha / kBins;
        const double expect =
            kSamples * (boost::math::cdf(nd, hi) - boost::math::cdf(nd, lo)) /
            mass;
        chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
      }
      boost::math::chi_squared_distribution<double> dist(kBins - 1);
      const double p = boost::math::cdf(boost::math::complement(dist, chi2));
      min_p = std::min(min_p, p);
      ok = ok && p > 0.01;
    }
  }
  return Check(ok, "8 budgets (" + std::to_string(clamped) +
                       " clamped), all samples inside the bound, min GOF p " +
                       Fmt(min_p, 3));
}

Hyperparams Quiet(std::size_t k) {
  Hyperparams hp;
  hp.k = k;
  hp.eta0 = 0.05;
  hp.lambda_u.assign(k, 0.01);
  hp.lambda_v.assign(k, 0.01);
  hp.noise_enabled = false;
  return hp;
}

double LogLogistic(double x) {
  // -ln sigma(x), stable for either sign.
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

// 4. Noise-off deltas against central finite differences.
Outcome GradientOracles() {
  constexpr std::size_t k = 5;
  constexpr double kEta = 0.05, kStep = 1e-6;
  Rng gen(400);
  double worst = 0.0;
  auto record = [&](double got, double want) {
    worst = std::max(worst,
                     std::fabs(got - want) / std::max(1e-3, std::fabs(want)));
  };
  Rng unused(0);
  for (int trial = 0; trial < 100; ++trial) {
    Hyperparams hp = Quiet(k);
    for (auto& l : hp.lambda_u) l = gen.uniform() + 0.01;
    for (auto& l : hp.lambda_v) l = gen.uniform() + 0.01;

    // Squared-error objective.
    std::vector<double> u(k), v(k);
    for (auto& x : u) x = gen.normal(0, 1);
    for (auto& x : v) x = gen.normal(0, 1);
    const double r = 1 + 4 * gen.uniform();
    auto mf_loss = [&](const std::vector<double>& uu,
                       const std::vector<double>& vv) {
      const double e = rating_error(r, uu, vv);
      double s = 0.5 * e * e;
      for (std::size_t c = 0; c < k; ++c) {
        s += 0.5 * hp.lambda_u[c] * uu[c] * uu[c];
        s += 0.5 * hp.lambda_v[c] * vv[c] * vv[c];
      }
      return s;
    };
    const double e = rating_error(r, u, v);
    const GradDelta du = user_step(u, e, v, kEta, hp, unused);
    const GradDelta dv = item_step(v, e, u, kEta, hp, unused);
    for (std::size_t c = 0; c < k; ++c) {
      auto up = u, um = u, vp = v, vm = v;
      up[c] += kStep;
      um[c] -= kStep;
      vp[c] += kStep;
      vm[c] -= kStep;
      record(du[c], -kEta * (mf_loss(up, v) - mf_loss(um, v)) / (2 * kStep));
      record(dv[c], -kEta * (mf_loss(u, vp) - mf_loss(u, vm)) / (2 * kStep));
    }

    // Pairwise ranking objective over (u, v_pos, v_neg).
    std::vector<double> x(3 * k);
    for (auto& y : x) y = gen.normal(0, 1);
    auto bpr_loss = [&](const std::vector<double>& p) {
      std::span<const double> uu(p.data(), k), a(p.data() + k, k),
          b(p.data() + 2 * k, k);
      double s = LogLogistic(bpr_margin(uu, a, b));
      for (std::size_t c = 0; c < k; ++c) {
        s += 0.5 * hp.lambda_u[c] * uu[c] * uu[c];
        s += 0.5 * hp.lambda_v[c] * (a[c] * a[c] + b[c] * b[c]);
      }
      return s;
    };
    const BprDeltas d = bpr_step(std::span<const double>(x.data(), k),
                                 std::span<const double>(x.data() + k, k),
                                 std::span<const double>(x.data() + 2 * k, k),
                                 kEta, hp, unused);
    std::vector<double> got(d.u.begin(), d.u.end());
    got.insert(got.end(), d.positive.begin(), d.positive.end());
    got.insert(got.end(), d.negative.begin(), d.negative.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x, dn = x;
      up[i] += kStep;
      dn[i] -= kStep;
      record(got[i], -kEta * (bpr_loss(up) - bpr_loss(dn)) / (2 * kStep));
    }
  }
  return Check(worst <= 1e-4,
               "100 instances each, max rel err " + Fmt(worst, 3));
}

// 5. Privacy-disabled protocol against the centralized trainer.
Outcome OracleEquivalence() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticSpec spec;
  spec.n_users = 50;
  spec.n_items = 80;
  spec.n_ratings = 1500;
  spec.seed = 500;
  const RatingDataset data = synthetic_ratings(spec);
  Hyperparams hp = make_hyperparams(5, 0.3, 0.6, 501);
  hp.noise_enabled = false;
  SessionConfig session;
  session.randomizer = FixedRandomizer{0.0, 0.0, 1.0};
  SimulatedTransport::Options opts;
  opts.through_codec = true;
  SimulatedTransport transport(opts);
  const FactorModel distributed =
      run_training(data, hp, session, 20, transport).model;
  const FactorModel reference = centralized_train(data, hp, 20);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return Check(distributed == reference && secs < 10.0,
               std::string(distributed == reference ? "bit-identical"
                                                    : "models differ") +
                   " after 20 rounds, " + Fmt(secs, 3) + " s");
}

// 6. Average attack with and without the permanent randomizer.
Outcome AverageAttackContrast() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.dataset = "synthetic";
  cfg.synthetic.n_users = 400;
  cfg.synthetic.n_items = 50;
  cfg.synthetic.n_ratings = 8800;
  cfg.synthetic.seed = 600;
  cfg.attack_rounds = 1000;
  cfg.randomizer = FixedRandomizer{0.0, 0.1, 0.9};
  const AttackReport open = average_attack_report(cfg);
  cfg.randomizer = FixedRandomizer{0.5, 0.1, 0.9};
  const AttackReport masked = average_attack_report(cfg);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  const bool ok = open.accuracy_vs_b >= 0.99 &&
                  std::fabs(masked.rated_agreement_b - 0.75) <= 0.03 &&
                  secs < 30.0;
  return Check(ok, "f=0 accuracy " + Fmt(open.accuracy_vs_b, 4) +
                       ", f=0.5 rated agreement " +
                       Fmt(masked.rated_agreement_b, 4) + " (vs B' " +
                       Fmt(masked.agreement_vs_permanent, 4) + "), " +
                       Fmt(secs, 3) + " s");
}

std::string ConfigPath(const std::string& name) {
  return std::string(SDMF_SOURCE_DIR) + "/configs/" + name;
}

// Mean final-round metric per (variant, eps_g) label.
std::map<std::string, double> FinalMeans(const ExperimentConfig& cfg,
                                         std::size_t* failed) {
  const ExperimentResult result = run_grid(cfg);
  *failed = result.failed_cells;
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const CurveRow& row : result.rows) {
    if (row.t != cfg.iterations) continue;
    std::string key = row.variant;
    if (row.cell.eps_g) key += "@" + Fmt(*row.cell.eps_g);
    acc[key].first += row.value;
    acc[key].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / v.second;
  return out;
}

// 7. RMSE ordering of the non-private and private variants.
Outcome UtilityOrdering() {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_config(ConfigPath("desk_task1.conf"));
  std::size_t failed = 0;
  auto m = FinalMeans(cfg, &failed);
  const double np = m["nonprivate"], loose = m["sdmf@4"],
               tight = m["sdmf@0.0625"];
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  const bool ok = failed == 0 && np <= loose && loose <= tight &&
                  loose - np <= 0.15 && secs < 600.0;
  return Check(ok, "RMSE non-private " + Fmt(np, 4) + ", eps_g=4 " +
                       Fmt(loose, 4) + ", eps_g=0.0625 " + Fmt(tight, 4) +
                       " over " + std::to_string(cfg.repetitions) +
                       " reps, " + Fmt(secs, 3) + " s");
}

// 8. AUC gap of the private ranking variant.
Outcome RankingUtilityGap() {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_config(ConfigPath("desk_task2.conf"));
  std::size_t failed = 0;
  auto m = FinalMeans(cfg, &failed);
  const double np = m["bprmf"], priv = m["sd-bprmf"];
  const double gap = np - priv;
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  const bool ok = failed == 0 && gap > 0 && gap <= 0.06 && secs < 600.0;
  return Check(ok, "AUC non-private " + Fmt(np, 4) + ", private " +
                       Fmt(priv, 4) + ", gap " + Fmt(gap, 3) + " over " +
                       std::to_string(cfg.repetitions) + " reps, " +
                       Fmt(secs, 3) + " s");
}

// 9. Mean messages per client round against the calibrated target.
Outcome MessageAccounting() {
  constexpr std::size_t kClients = 10'000;
  constexpr std::size_t kItems = 200, kRated = 20;
  const double z = kRated;
  bool ok = true;
  std::ostringstream detail;
  for (Task task : {Task::kNumerical, Task::kOneClass}) {
    auto hp = std::make_shared<const Hyperparams>(
        make_hyperparams(2, 0.01, 0.6, task == Task::kNumerical ? 900 : 910));
    SessionConfig session;
    session.task = task;
    session.budget.eps_I = 1.0;
    session.budget.eps_g = 1.0;
    const Matrix items = init_item_matrix(kItems, *hp);
    const ClientStep step = client_step_for(task);
    Rng gen(task == Task::kNumerical ? 901 : 911);
    double total = 0.0;
    RRParams rr;
    for (std::size_t i = 0; i < kClients; ++i) {
      std::vector<ItemRating> ratings;
      std::vector<std::uint32_t> pool(kItems);
      for (std::uint32_t j = 0; j < kItems; ++j) pool[j] = j;
      std::shuffle(pool.begin(), pool.end(), gen.engine());
      pool.resize(kRated);
      std::sort(pool.begin(), pool.end());
      for (std::uint32_t j : pool) {
        ratings.push_back({j, 1.0 + static_cast<double>(gen.index(5))});
      }
      auto client = client_init(static_cast<std::uint32_t>(i), ratings, kItems,
                                hp, session, z);
      rr = client->rr;
      const ClientRound round = step(*client, items, 1);
      total += static_cast<double>(round.gradients + round.skipped);
    }
    const double mean = total / kClients;
    const double sd =
        std::sqrt(kRated * rr.q_star * (1 - rr.q_star) +
                  (kItems - kRated) * rr.p_star * (1 - rr.p_star)) /
        std::sqrt(static_cast<double>(kClients));
    const double dev = std::fabs(mean - rr.z) / sd;
    ok = ok && dev <= 3.0 && RelErr(rr.z, z) < 1e-9;
    detail << (task == Task::kNumerical ? "rating" : "ranking")
           << " clients: mean " << Fmt(mean, 5) << " vs z " << Fmt(rr.z, 5)
           << " (" << Fmt(dev, 3) << " sd); ";
  }
  return Check(ok, detail.str());
}

// 10. Wire format.
Outcome Codec() {
  bool ok =
      encode_message(GradientMessage{3, {0.0, 1.0}}) ==
          Bytes{0x01, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00,
                0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F} &&
      encode_message(FinishMessage{7}) == Bytes{0x02, 0x07, 0x00, 0x00, 0x00};
  const bool layouts = ok;
  Rng rng(1000);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10'000; ++i) {
    Message m;
    const std::size_t k = 1 + rng.index(64);
    if (rng.bernoulli(0.2)) {
      m = FinishMessage{static_cast<std::uint32_t>(rng.engine()())};
    } else {
      GradientMessage g;
      g.item_id = static_cast<std::uint32_t>(rng.engine()());
      g.delta.resize(k);
      for (double& x : g.delta) {
        do {
          x = std::bit_cast<double>(rng.engine()());
        } while (!std::isfinite(x));
      }
      m = g;
    }
    const Bytes bytes = encode_message(m);
    const Message back = decode_message(bytes, k);
    if (encode_message(back) != bytes || frame_length(bytes) != bytes.size()) {
      ++mismatches;
    }
  }
  ok = ok && mismatches == 0;
  return Check(ok, std::string("layouts ") + (layouts ? "match" : "differ") +
                       ", " + std::to_string(mismatches) +
                       " round-trip mismatches in 10000");
}

// 11. Public dataset ingestion.
Outcome Ingestion() {
  std::string path = std::string(SDMF_SOURCE_DIR) + "/data/ml-100k/u.data";
  if (const char* env = std::getenv("SDMF_ML100K")) path = env;
  if (!std::filesystem::exists(path)) {
    return {Outcome::kSkip, "ratings file not found at " + path +
                                " (set SDMF_ML100K to its path)"};
  }
  const RatingDataset d = load_ratings(path);
  const bool ok =
      d.n_users() == 943 && d.n_items() == 1682 && d.size() == 100000;
  return Check(ok, std::to_string(d.n_users()) + " users, " +
                       std::to_string(d.n_items()) + " items, " +
                       std::to_string(d.size()) + " ratings");
}

}  // namespace
}  // namespace sdmf

int main() {
  using sdmf::Outcome;
  sdmf::set_warning_sink([](std::string_view) {});
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"budget solver round trips", sdmf::BudgetSolverRoundTrips},
      {"empirical likelihood ratios", sdmf::EmpiricalLikelihoodRatios},
      {"fake-gradient calibration", sdmf::FakeGradientCalibration},
      {"gradient oracles", sdmf::GradientOracles},
      {"oracle equivalence", sdmf::OracleEquivalence},
      {"average-attack contrast", sdmf::AverageAttackContrast},
      {"rating utility ordering", sdmf::UtilityOrdering},
      {"ranking utility gap", sdmf::RankingUtilityGap},
      {"message accounting", sdmf::MessageAccounting},
      {"codec", sdmf::Codec},
      {"ingestion", sdmf::Ingestion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.kind == Outcome::kPass   ? "PASS"
                      : o.kind == Outcome::kSkip ? "SKIP"
                                                 : "FAIL";
    if (o.kind == Outcome::kFail) ++failures;
    std::cout << tag << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
