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

#ifndef SDMF_PROTOCOL_HPP_
#define SDMF_PROTOCOL_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sdmf/bpr.hpp"
#include "sdmf/client.hpp"
#include "sdmf/codec.hpp"
#include "sdmf/data.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/matrix.hpp"
#include "sdmf/mf.hpp"
#include "sdmf/random.hpp"

namespace sdmf {

// Server side of the protocol. It holds the item matrix and nothing else:
// the only inputs it accepts are client frames (Message).
class Server {
 public:
  Server(Matrix items, ItemAveraging averaging = ItemAveraging::kGlobalCount)
      : items_(std::move(items)),
        averaging_(averaging),
        acc_(items_.rows(), items_.cols()) {}

  std::size_t k() const { return items_.cols(); }
  std::size_t n_items() const { return items_.rows(); }
  std::size_t round() const { return round_; }

  // The matrix broadcast to clients at the start of a round.
  const Matrix& items() const { return items_; }

  // Starts round `round()`: zeroes the accumulator and waits for a finish
  // frame from each of `clients`.
  void begin_round(std::span<const std::uint32_t> clients) {
    acc_ = ItemAccumulator(items_.rows(), items_.cols());
    pending_.clear();
    pending_.insert(clients.begin(), clients.end());
    in_round_ = true;
  }

  void receive(const Message& msg) {
    if (!in_round_) throw Error("frame received outside a round");
    if (on_receive_) on_receive_(msg);
    if (const auto* g = std::get_if<GradientMessage>(&msg)) {
      if (g->item_id >= items_.rows()) {
        throw Error("gradient for unknown item " + std::to_string(g->item_id));
      }
      if (g->delta.size() != items_.cols()) {
        throw Error("gradient of wrong dimension");
      }
      for (double x : g->delta) {
        if (!std::isfinite(x)) throw Error("non-finite gradient entry");
      }
      acc_.add(g->item_id, g->delta);
    } else {
      const auto& f = std::get<FinishMessage>(msg);
      if (pending_.erase(f.client_id) == 0) {
        throw Error("unexpected finish from client " +
                    std::to_string(f.client_id));
      }
    }
  }

  bool round_complete() const { return in_round_ && pending_.empty(); }
  std::size_t pending_clients() const { return pending_.size(); }
  std::size_t messages_this_round() const { return acc_.total(); }

  // V <- V + sum / count, then advances the round counter.
  void end_round() {
    if (!round_complete()) {
      throw Error("round ended before every client finished");
    }
    acc_.apply(items_, averaging_);
    in_round_ = false;
    ++round_;
  }

  // Test instrumentation: sees every frame the server accepts.
  void set_receive_hook(std::function<void(const Message&)> hook) {
    on_receive_ = std::move(hook);
  }

 private:
  Matrix items_;
  ItemAveraging averaging_;
  ItemAccumulator acc_;
  std::set<std::uint32_t> pending_;
  bool in_round_ = false;
  std::size_t round_ = 1;
  std::function<void(const Message&)> on_receive_;
};

using ClientStep =
    std::function<ClientRound(ClientState&, const Matrix&, std::size_t)>;

inline ClientStep client_step_for(Task task) {
  if (task == Task::kOneClass) return sd_bpr_client_iteration;
  return client_iteration;
}

// Carries one synchronous round between the server and its clients.
class Transport {
 public:
  virtual ~Transport() = default;
  // Broadcasts the server's items, steps every client, and delivers every
  // frame they emit to the server. Returns once all finish frames arrived.
  virtual void run_round(Server& server, std::span<ClientState> clients,
                         std::size_t t, const ClientStep& step) = 0;
};

// In-process transport. Clients may step concurrently; frames are delivered
// in client order, then emission order, unless a shuffle seed is set.
class SimulatedTransport : public Transport {
 public:
  struct Options {
    std::size_t threads = 1;
    bool through_codec = false;  // encode and decode every frame
    std::optional<std::uint64_t> shuffle_seed;
  };

  SimulatedTransport() = default;
  explicit SimulatedTransport(Options options) : options_(options) {}

  void run_round(Server& server, std::span<ClientState> clients,
                 std::size_t t, const ClientStep& step) override {
    const Matrix snapshot = server.items();
    std::vector<ClientRound> rounds(clients.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(options_.threads, clients.size()));
    if (workers == 1) {
      for (std::size_t c = 0; c < clients.size(); ++c) {
        rounds[c] = step(clients[c], snapshot, t);
      }
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t c = w; c < clients.size(); c += workers) {
              rounds[c] = step(clients[c], snapshot, t);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    std::vector<Message> frames;
    for (auto& r : rounds) {
      for (auto& m : r.messages) frames.push_back(std::move(m));
    }
    if (options_.shuffle_seed) {
      Rng rng(*options_.shuffle_seed, Stream::kRepetition, t);
      for (std::size_t i = frames.size(); i > 1; --i) {
        std::swap(frames[i - 1], frames[rng.index(i)]);
      }
    }
    const auto k = static_cast<std::uint32_t>(server.k());
    for (auto& m : frames) {
      if (options_.through_codec) {
        server.receive(decode_message(encode_message(m), k));
      } else {
        server.receive(m);
      }
    }
  }

 private:
  Options options_;
};

struct RoundRecord {
  std::size_t t = 0;
  std::size_t messages = 0;
  double seconds = 0.0;
  std::optional<double> metric;
};

struct TrainingResult {
  FactorModel model;
  std::vector<RoundRecord> rounds;
  std::size_t excluded_clients = 0;
};

struct TrainingHooks {
  // Evaluated on the assembled model after every round when set.
  std::function<double(const FactorModel&)> evaluate;
  // Called with the initialized clients before round 1.
  std::function<void(std::span<const ClientState>)> on_init;
};

// Sets up one client per user with ratings in `train`.
inline std::vector<ClientState> init_clients(
    const RatingDataset& train, std::shared_ptr<const Hyperparams> hp,
    const SessionConfig& config, std::size_t* excluded = nullptr) {
  const double z_target =
      config.z_target.value_or(static_cast<double>(train.size()) /
                               static_cast<double>(train.n_users()));
  std::vector<ClientState> clients;
  std::size_t cold = 0;
  for (std::size_t i = 0; i < train.n_users(); ++i) {
    auto c = client_init(static_cast<std::uint32_t>(i), train.user_ratings(i),
                         train.n_items(), hp, config, z_target);
    if (c) {
      clients.push_back(std::move(*c));
    } else {
      ++cold;
    }
  }
  if (cold > 0) {
    warn(std::to_string(cold) + " client(s) without ratings excluded");
  }
  if (excluded) *excluded = cold;
  return clients;
}

// Runs the full client/server protocol for `rounds` rounds.
inline TrainingResult run_training(const RatingDataset& train,
                                   const Hyperparams& hyperparams,
                                   const SessionConfig& config,
                                   std::size_t rounds, Transport& transport,
                                   const TrainingHooks& hooks = {}) {
  hyperparams.validate();
  if (rounds < 1) throw InvalidArgument("at least one round is required");
  if (train.n_users() == 0) throw InvalidArgument("no users to train");
  auto hp = std::make_shared<const Hyperparams>(hyperparams);

  TrainingResult result;
  std::vector<ClientState> clients =
      init_clients(train, hp, config, &result.excluded_clients);
  if (hooks.on_init) hooks.on_init(clients);
  std::vector<std::uint32_t> ids;
  for (const auto& c : clients) ids.push_back(c.client_id);

  Server server(init_item_matrix(train.n_items(), *hp), config.averaging);
  const ClientStep step = client_step_for(config.task);

  FactorModel model = init_model(train.n_users(), 0, *hp);
  auto assemble = [&]() {
    for (const auto& c : clients) {
      std::copy(c.u.begin(), c.u.end(), model.users.row(c.client_id).begin());
    }
    model.items = server.items();
  };

  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    server.begin_round(ids);
    transport.run_round(server, clients, t, step);
    RoundRecord rec;
    rec.t = t;
    rec.messages = server.messages_this_round();
    server.end_round();
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    if (hooks.evaluate) {
      assemble();
      rec.metric = hooks.evaluate(model);
    }
    result.rounds.push_back(rec);
  }
  assemble();
  result.model = std::move(model);
  return result;
}

}  // namespace sdmf

#endif  // SDMF_PROTOCOL_HPP_
