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

#ifndef SDMF_SOCKET_TRANSPORT_HPP_
#define SDMF_SOCKET_TRANSPORT_HPP_

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sdmf/codec.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/protocol.hpp"

namespace sdmf {
namespace internal {

inline void write_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off,
                       MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("socket write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Blocking read of exactly one frame. Returns false on orderly EOF before
// the first byte.
inline bool read_frame(int fd, Bytes& frame) {
  frame.clear();
  std::uint8_t buf[4096];
  std::size_t need = 1;
  while (frame.size() < need) {
    const std::size_t want = std::min(need - frame.size(), sizeof(buf));
    ssize_t n = ::recv(fd, buf, want, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (frame.empty()) return false;
      throw CodecError("truncated frame");
    }
    frame.insert(frame.end(), buf, buf + n);
    if (auto len = frame_length(frame)) {
      need = *len;
    } else {
      need = frame.size() + 1;
    }
  }
  return true;
}

}  // namespace internal

// Reads client frames from `fds` into `server` until every expected client
// has finished. Throws RoundAborted if that does not happen within
// `timeout`, or if a peer closes its end first.
inline void receive_round(Server& server, std::span<const int> fds,
                          std::chrono::milliseconds timeout) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + timeout;
  std::vector<Bytes> pending(fds.size());
  std::vector<bool> open(fds.size(), true);
  const auto k = static_cast<std::uint32_t>(server.k());
  std::uint8_t buf[1 << 16];

  while (!server.round_complete()) {
    std::vector<pollfd> pfds;
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (!open[i]) continue;
      pfds.push_back(pollfd{fds[i], POLLIN, 0});
      which.push_back(i);
    }
    if (pfds.empty()) {
      throw RoundAborted("all clients disconnected with " +
                         std::to_string(server.pending_clients()) +
                         " finish frame(s) missing");
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (left.count() <= 0) {
      throw RoundAborted("timed out waiting for " +
                         std::to_string(server.pending_clients()) +
                         " finish frame(s)");
    }
    int ready = ::poll(pfds.data(), pfds.size(), static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("poll failed: ") + std::strerror(errno));
    }
    for (std::size_t p = 0; p < pfds.size(); ++p) {
      if (pfds[p].revents == 0) continue;
      const std::size_t i = which[p];
      ssize_t n = ::recv(fds[i], buf, sizeof(buf), 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw Error(std::string("socket read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        open[i] = false;
        continue;
      }
      Bytes& acc = pending[i];
      acc.insert(acc.end(), buf, buf + n);
      std::size_t off = 0;
      while (off < acc.size()) {
        std::span<const std::uint8_t> rest(acc.data() + off, acc.size() - off);
        auto len = frame_length(rest);
        if (!len || *len > rest.size()) break;
        server.receive(decode_message(rest.first(*len), k));
        off += *len;
      }
      acc.erase(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(off));
    }
  }
}

// Byte-stream transport over local socket pairs. Each worker thread owns a
// slice of the clients and talks to the server through its own socket using
// the wire format: a handshake once, then per round a model frame down and
// gradient and finish frames up.
class SocketTransport : public Transport {
 public:
  struct Options {
    std::size_t workers = 4;
    std::chrono::milliseconds timeout{30000};
  };

  SocketTransport() : SocketTransport(Options{}) {}
  explicit SocketTransport(Options options) : options_(options) {}
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;
  ~SocketTransport() override { stop(); }

  void run_round(Server& server, std::span<ClientState> clients,
                 std::size_t t, const ClientStep& step) override {
    if (threads_.empty()) start(server, clients.size());
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_.clients = clients;
      job_.step = &step;
    }
    const Bytes model = encode_model(static_cast<std::uint32_t>(t),
                                     server.items());
    for (int fd : server_fds_) internal::write_all(fd, model);
    try {
      receive_round(server, server_fds_, options_.timeout);
    } catch (const RoundAborted&) {
      std::lock_guard<std::mutex> lock(mu_);
      for (auto& e : errors_) {
        if (e) std::rethrow_exception(e);
      }
      throw;
    }
  }

 private:
  struct Job {
    std::span<ClientState> clients;
    const ClientStep* step = nullptr;
  };

  void start(const Server& server, std::size_t n_clients) {
    const std::size_t workers = std::max<std::size_t>(
        1, std::min(options_.workers, std::max<std::size_t>(1, n_clients)));
    const Bytes hello = encode_handshake(
        Handshake{static_cast<std::uint32_t>(server.k()),
                  static_cast<std::uint32_t>(server.n_items())});
    errors_.assign(workers, nullptr);
    for (std::size_t w = 0; w < workers; ++w) {
      int sv[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) {
        throw Error(std::string("socketpair failed: ") + std::strerror(errno));
      }
      server_fds_.push_back(sv[0]);
      client_fds_.push_back(sv[1]);
      internal::write_all(sv[0], hello);
      threads_.emplace_back([this, w, workers, fd = sv[1]] {
        worker(w, workers, fd);
      });
    }
  }

  void worker(std::size_t w, std::size_t stride, int fd) {
    try {
      Bytes frame;
      if (!internal::read_frame(fd, frame)) return;
      const Handshake session = decode_handshake(frame);
      while (internal::read_frame(fd, frame)) {
        ModelBroadcast m = decode_model(frame, session);
        Job job;
        {
          std::lock_guard<std::mutex> lock(mu_);
          job = job_;
        }
        for (std::size_t c = w; c < job.clients.size(); c += stride) {
          ClientRound r = (*job.step)(job.clients[c], m.items, m.round);
          Bytes out;
          for (const Message& msg : r.messages) {
            Bytes b = encode_message(msg);
            out.insert(out.end(), b.begin(), b.end());
          }
          internal::write_all(fd, out);
        }
      }
    } catch (...) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        errors_[w] = std::current_exception();
      }
      ::shutdown(fd, SHUT_RDWR);
    }
  }

  void stop() {
    for (int fd : server_fds_) ::shutdown(fd, SHUT_RDWR);
    for (auto& th : threads_) th.join();
    for (int fd : server_fds_) ::close(fd);
    for (int fd : client_fds_) ::close(fd);
    threads_.clear();
    server_fds_.clear();
    client_fds_.clear();
  }

  Options options_;
  std::mutex mu_;
  Job job_;
  std::vector<std::exception_ptr> errors_;
  std::vector<int> server_fds_;
  std::vector<int> client_fds_;
  std::vector<std::thread> threads_;
};

}  // namespace sdmf

#endif  // SDMF_SOCKET_TRANSPORT_HPP_
