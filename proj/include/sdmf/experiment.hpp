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

#ifndef SDMF_EXPERIMENT_HPP_
#define SDMF_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "sdmf/bpr.hpp"
#include "sdmf/client.hpp"
#include "sdmf/config.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/metrics.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/protocol.hpp"
#include "sdmf/random.hpp"
#include "sdmf/rr.hpp"
#include "sdmf/socket_transport.hpp"

namespace sdmf {

enum class Variant { kSdmf, kSdmfAlphaInf, kNonPrivate, kIsgld };

struct Cell {
  std::size_t rep = 0;
  Variant variant = Variant::kSdmf;
  std::optional<double> eps_I;
  std::optional<double> eps_g;  // 0 is recorded for alpha = inf
  std::optional<double> isgld_eps;
};

struct CurveRow {
  Cell cell;
  std::string variant;
  std::string metric;
  std::size_t t = 0;
  double value = 0.0;
  std::size_t messages = 0;
  double seconds = 0.0;
};

inline std::string variant_name(const Cell& c, Task task) {
  switch (c.variant) {
    case Variant::kSdmf:
      return task == Task::kOneClass ? "sd-bprmf" : "sdmf";
    case Variant::kSdmfAlphaInf:
      return "sdmf-alpha-inf";
    case Variant::kNonPrivate:
      return task == Task::kOneClass ? "bprmf" : "nonprivate";
    case Variant::kIsgld: {
      std::ostringstream s;
      s << "isgld-eps" << *c.isgld_eps;
      return s.str();
    }
  }
  return "unknown";
}

// Loads or generates the dataset and applies the subsample, if any.
inline RatingDataset prepare_dataset(const ExperimentConfig& cfg) {
  RatingDataset data;
  const bool synthetic = cfg.dataset.empty() || cfg.dataset == "synthetic";
  if (!synthetic && std::filesystem::exists(cfg.dataset)) {
    ParseOptions opts;
    opts.delimiter = cfg.delimiter;
    data = load_ratings(cfg.dataset, opts);
  } else {
    if (!synthetic && !cfg.synthetic_fallback) {
      throw Error("dataset file not found: " + cfg.dataset);
    }
    if (!synthetic) {
      warn("dataset " + cfg.dataset + " not found; using synthetic ratings");
    }
    SyntheticSpec spec = cfg.synthetic;
    spec.seed = derive_seed(cfg.seed, Stream::kSynthetic);
    data = synthetic_ratings(spec);
  }
  if (cfg.subsample_users > 0 || cfg.subsample_items > 0) {
    const std::size_t nu =
        cfg.subsample_users > 0 ? cfg.subsample_users : data.n_users();
    const std::size_t ni =
        cfg.subsample_items > 0 ? cfg.subsample_items : data.n_items();
    data = subsample(data, std::min(nu, data.n_users()),
                     std::min(ni, data.n_items()), cfg.subsample_min_ratings,
                     cfg.seed);
  }
  return data;
}

// The train/evaluation pair of one repetition.
inline Split repetition_split(const RatingDataset& data,
                              const ExperimentConfig& cfg, std::size_t rep) {
  SplitSpec spec;
  spec.mode = cfg.task == Task::kOneClass ? SplitMode::kLeaveOneOut
                                          : SplitMode::kRandomHoldout;
  spec.fraction = cfg.split_fraction;
  spec.seed = derive_seed(cfg.seed, Stream::kRepetition, rep, 0);
  Split s = split(data, spec);
  if (cfg.validation) {
    SplitSpec inner = spec;
    inner.fraction = 0.2;
    inner.seed = derive_seed(cfg.seed, Stream::kRepetition, rep, 1);
    s = split(s.train, inner);
  }
  return s;
}

inline Hyperparams repetition_hyperparams(const ExperimentConfig& cfg,
                                          std::size_t rep) {
  Hyperparams hp = make_hyperparams(
      cfg.k, cfg.eta0, cfg.gamma,
      derive_seed(cfg.seed, Stream::kRepetition, rep, 2), cfg.noise,
      cfg.lambda_shape, cfg.lambda_rate);
  if (cfg.lambda) {
    std::fill(hp.lambda_u.begin(), hp.lambda_u.end(), *cfg.lambda);
    std::fill(hp.lambda_v.begin(), hp.lambda_v.end(), *cfg.lambda);
  }
  hp.init_sd = cfg.init_sd;
  hp.validate();
  return hp;
}

// Every cell of the experiment grid, repetition-major.
inline std::vector<Cell> experiment_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    if (cfg.nonprivate) cells.push_back({rep, Variant::kNonPrivate, {}, {}, {}});
    for (double e : cfg.isgld_eps) {
      cells.push_back({rep, Variant::kIsgld, {}, {}, e});
    }
    if (!cfg.sdmf) continue;
    std::vector<std::optional<double>> eps_i;
    if (cfg.randomizer) {
      eps_i.push_back(std::nullopt);
    } else {
      eps_i.assign(cfg.eps_I.begin(), cfg.eps_I.end());
    }
    for (const auto& ei : eps_i) {
      if (cfg.task == Task::kOneClass) {
        cells.push_back({rep, Variant::kSdmf, ei, {}, {}});
        continue;
      }
      for (double eg : cfg.eps_g) {
        cells.push_back({rep, Variant::kSdmf, ei, eg, {}});
      }
      if (cfg.alpha_inf) {
        cells.push_back({rep, Variant::kSdmfAlphaInf, ei, 0.0, {}});
      }
    }
  }
  return cells;
}

// Trains one cell and returns its learning curve.
inline std::vector<CurveRow> run_cell(const ExperimentConfig& cfg,
                                      const Split& data, const Cell& cell) {
  const Hyperparams hp = repetition_hyperparams(cfg, cell.rep);
  const bool ranking = cfg.task == Task::kOneClass;
  const std::string metric = ranking ? "auc" : "rmse";
  auto evaluate = [&](const FactorModel& m) {
    return ranking ? auc(data.test, data.train, m) : rmse(data.test, m);
  };

  std::vector<CurveRow> rows;
  auto record = [&](std::size_t t, double value, std::size_t messages,
                    double seconds) {
    rows.push_back(CurveRow{cell, variant_name(cell, cfg.task), metric, t,
                            value, messages, seconds});
  };

  if (cell.variant == Variant::kNonPrivate || cell.variant == Variant::kIsgld) {
    RatingDataset train = data.train;
    if (cell.variant == Variant::kIsgld) {
      Rng rng(hp.seed, Stream::kRepetition, 3);
      train = isgld_perturb(data.train, *cell.isgld_eps,
                            data.train.score_range(), rng);
    }
    TrainOptions opts;
    opts.averaging = cfg.averaging;
    auto last = std::chrono::steady_clock::now();
    opts.on_round = [&](std::size_t t, const FactorModel& m) {
      const auto now = std::chrono::steady_clock::now();
      record(t, evaluate(m), train.size(),
             std::chrono::duration<double>(now - last).count());
      last = std::chrono::steady_clock::now();
    };
    if (ranking) {
      centralized_bpr_train(train, hp, cfg.iterations, BprPairUpdate::kBoth,
                            opts);
    } else {
      centralized_train(train, hp, cfg.iterations, opts);
    }
    return rows;
  }

  SessionConfig session;
  session.task = cfg.task;
  session.averaging = cfg.averaging;
  session.z_target = cfg.z_target;
  session.randomizer = cfg.randomizer;
  if (cell.eps_I) session.budget.eps_I = *cell.eps_I;
  session.budget.eps_P = cfg.eps_P;
  if (cell.variant == Variant::kSdmf && cell.eps_g) {
    session.budget.eps_g = *cell.eps_g;
  }
  TrainingHooks hooks;
  hooks.evaluate = evaluate;
  std::unique_ptr<Transport> transport;
  if (cfg.transport == TransportKind::kSocket) {
    transport = std::make_unique<SocketTransport>();
  } else {
    transport = std::make_unique<SimulatedTransport>();
  }
  TrainingResult result =
      run_training(data.train, hp, session, cfg.iterations, *transport, hooks);
  for (const RoundRecord& r : result.rounds) {
    record(r.t, r.metric.value_or(std::nan("")), r.messages, r.seconds);
  }
  return rows;
}

namespace internal {
inline std::string csv_number(const std::optional<double>& x) {
  if (!x) return "";
  std::ostringstream s;
  s.precision(17);
  s << *x;
  return s.str();
}
}  // namespace internal

inline void write_curves_csv(std::ostream& out,
                             const std::vector<CurveRow>& rows) {
  out << "rep,budget_eps_I,budget_eps_g,variant,t,metric,value,messages\n";
  out.precision(17);
  for (const CurveRow& r : rows) {
    out << r.cell.rep << ',' << internal::csv_number(r.cell.eps_I) << ','
        << internal::csv_number(r.cell.eps_g) << ',' << r.variant << ','
        << r.t << ',' << r.metric << ',' << r.value << ',' << r.messages
        << '\n';
  }
}

// Mean and sample standard deviation over repetitions per
// (budgets, variant, t, metric).
inline void write_summary_csv(std::ostream& out,
                              const std::vector<CurveRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::size_t,
                         std::string>;
  struct Acc {
    std::vector<double> values;
    double messages = 0.0;
  };
  std::map<Key, Acc> groups;
  std::vector<Key> order;
  for (const CurveRow& r : rows) {
    Key key{internal::csv_number(r.cell.eps_I),
            internal::csv_number(r.cell.eps_g), r.variant, r.t, r.metric};
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.values.push_back(r.value);
    it->second.messages += static_cast<double>(r.messages);
  }
  out << "budget_eps_I,budget_eps_g,variant,t,metric,mean,std,n,messages\n";
  out.precision(17);
  for (const Key& key : order) {
    const Acc& a = groups[key];
    const double n = static_cast<double>(a.values.size());
    double mean = 0.0;
    for (double v : a.values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : a.values) ss += (v - mean) * (v - mean);
    const double sd = a.values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out << std::get<0>(key) << ',' << std::get<1>(key) << ','
        << std::get<2>(key) << ',' << std::get<3>(key) << ','
        << std::get<4>(key) << ',' << mean << ',' << sd << ','
        << a.values.size() << ',' << a.messages / n << '\n';
  }
}

struct ExperimentResult {
  std::vector<CurveRow> rows;
  std::size_t failed_cells = 0;
};

// Runs every cell, concurrently when cfg.threads allows. Rows come back in
// cell order regardless of scheduling. Failed cells are logged and counted.
inline ExperimentResult run_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const RatingDataset data = prepare_dataset(cfg);
  std::vector<Split> splits;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    splits.push_back(repetition_split(data, cfg, rep));
  }
  const std::vector<Cell> cells = experiment_cells(cfg);
  std::vector<std::vector<CurveRow>> per_cell(cells.size());
  std::vector<std::string> errors(cells.size());
  std::size_t threads = cfg.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, cells.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        per_cell[i] = run_cell(cfg, splits[cells[i].rep], cells[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  ExperimentResult out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      ++out.failed_cells;
      warn("cell " + variant_name(cells[i], cfg.task) + " rep " +
           std::to_string(cells[i].rep) + " failed: " + errors[i]);
    }
    for (auto& r : per_cell[i]) out.rows.push_back(std::move(r));
  }
  return out;
}

inline std::string summary_path(const ExperimentConfig& cfg) {
  if (!cfg.summary.empty()) return cfg.summary;
  std::filesystem::path p(cfg.output);
  return (p.parent_path() / (p.stem().string() + "_summary.csv")).string();
}

// Runs the grid and writes the curve and summary CSV files. Returns the
// number of failed cells; rows of the others are written either way.
inline std::size_t run_experiments(const ExperimentConfig& cfg) {
  ExperimentResult result = run_grid(cfg);
  std::ofstream curves(cfg.output);
  if (!curves) throw Error("cannot write " + cfg.output);
  write_curves_csv(curves, result.rows);
  const std::string sp = summary_path(cfg);
  std::ofstream summary(sp);
  if (!summary) throw Error("cannot write " + sp);
  write_summary_csv(summary, result.rows);
  return result.failed_cells;
}

struct AttackReport {
  std::size_t clients = 0;
  std::size_t rounds = 0;
  double accuracy_vs_b = 0.0;         // per-bit, all items
  double rated_agreement_b = 0.0;     // on rated bits, vs B
  double agreement_vs_permanent = 0.0;  // per-bit, vs B'
};

// Server-side average attack: observes which items each client sends over
// `rounds` rounds and thresholds the frequencies.
inline AttackReport average_attack_report(const ExperimentConfig& cfg) {
  const RatingDataset data = prepare_dataset(cfg);
  const Hyperparams hp = repetition_hyperparams(cfg, 0);
  SessionConfig session;
  session.task = cfg.task;
  session.randomizer = cfg.randomizer;
  session.z_target = cfg.z_target;
  if (!cfg.eps_I.empty()) session.budget.eps_I = cfg.eps_I.front();
  session.budget.eps_P = cfg.eps_P;
  auto shared = std::make_shared<const Hyperparams>(hp);
  std::vector<ClientState> clients = init_clients(data, shared, session);

  AttackReport rep;
  rep.clients = clients.size();
  rep.rounds = cfg.attack_rounds;
  double acc = 0.0, rated = 0.0, perm = 0.0;
  std::size_t rated_bits = 0;
  for (const ClientState& c : clients) {
    std::vector<BitVector> seen;
    seen.reserve(cfg.attack_rounds);
    for (std::size_t t = 1; t <= cfg.attack_rounds; ++t) {
      Rng rng(hp.seed, Stream::kIrr, c.client_id, t);
      seen.push_back(irr(c.permanent, c.rr.p, c.rr.q, rng));
    }
    const auto freq = average_attack(seen);
    const BitVector guess = classify_attack(freq, c.rr.p_star, c.rr.q_star);
    std::size_t hit = 0, hit_perm = 0, hit_rated = 0;
    for (std::size_t j = 0; j < guess.size(); ++j) {
      hit += guess[j] == c.rated[j];
      hit_perm += guess[j] == c.permanent[j];
      if (c.rated[j]) hit_rated += guess[j] == 1;
    }
    acc += static_cast<double>(hit) / static_cast<double>(guess.size());
    perm += static_cast<double>(hit_perm) / static_cast<double>(guess.size());
    rated += static_cast<double>(hit_rated);
    rated_bits += c.ratings.size();
  }
  if (!clients.empty()) {
    rep.accuracy_vs_b = acc / static_cast<double>(clients.size());
    rep.agreement_vs_permanent = perm / static_cast<double>(clients.size());
    rep.rated_agreement_b = rated / static_cast<double>(rated_bits);
  }
  return rep;
}

}  // namespace sdmf

#endif  // SDMF_EXPERIMENT_HPP_
