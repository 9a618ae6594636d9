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

#ifndef SDMF_CODEC_HPP_
#define SDMF_CODEC_HPP_

// Client/server wire format. All integers are little-endian u32, all reals
// little-endian IEEE-754 binary64.
//
//   0x00 handshake  | K | n_items                       (server -> client)
//   0x01 gradient   | item_id | K | K reals             (client -> server)
//   0x02 finish     | client_id                         (client -> server)
//   0x03 model      | round | n_items | K | n_items*K reals, row-major
//                                                       (server -> client)

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdmf/errors.hpp"
#include "sdmf/matrix.hpp"

namespace sdmf {

struct GradientMessage {
  std::uint32_t item_id = 0;
  std::vector<double> delta;

  friend bool operator==(const GradientMessage&,
                         const GradientMessage&) = default;
};

struct FinishMessage {
  std::uint32_t client_id = 0;

  friend bool operator==(const FinishMessage&, const FinishMessage&) = default;
};

// Everything a client ever sends to the server.
using Message = std::variant<GradientMessage, FinishMessage>;

struct Handshake {
  std::uint32_t k = 0;
  std::uint32_t n_items = 0;

  friend bool operator==(const Handshake&, const Handshake&) = default;
};

struct ModelBroadcast {
  std::uint32_t round = 0;
  Matrix items;
};

enum class FrameType : std::uint8_t {
  kHandshake = 0x00,
  kGradient = 0x01,
  kFinish = 0x02,
  kModel = 0x03,
};

using Bytes = std::vector<std::uint8_t>;

namespace internal {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(Bytes& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw CodecError(std::to_string(bytes_.size() - pos_) +
                       " trailing byte(s) after frame");
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CodecError("truncated frame");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace internal

inline Bytes encode_message(const Message& msg) {
  Bytes out;
  if (const auto* g = std::get_if<GradientMessage>(&msg)) {
    out.reserve(9 + 8 * g->delta.size());
    out.push_back(static_cast<std::uint8_t>(FrameType::kGradient));
    internal::put_u32(out, g->item_id);
    internal::put_u32(out, static_cast<std::uint32_t>(g->delta.size()));
    for (double x : g->delta) internal::put_f64(out, x);
  } else {
    const auto& f = std::get<FinishMessage>(msg);
    out.push_back(static_cast<std::uint8_t>(FrameType::kFinish));
    internal::put_u32(out, f.client_id);
  }
  return out;
}

// Decodes exactly one client frame. `session_k` is the latent dimension
// agreed in the handshake.
inline Message decode_message(std::span<const std::uint8_t> bytes,
                              std::uint32_t session_k) {
  internal::Reader in(bytes);
  const std::uint8_t type = in.u8();
  if (type == static_cast<std::uint8_t>(FrameType::kGradient)) {
    GradientMessage g;
    g.item_id = in.u32();
    const std::uint32_t k = in.u32();
    if (k != session_k) {
      throw CodecError("gradient of dimension " + std::to_string(k) +
                       " in a session with K = " + std::to_string(session_k));
    }
    g.delta.resize(k);
    for (double& x : g.delta) {
      x = in.f64();
      if (!std::isfinite(x)) throw CodecError("non-finite gradient entry");
    }
    in.expect_end();
    return g;
  }
  if (type == static_cast<std::uint8_t>(FrameType::kFinish)) {
    FinishMessage f{in.u32()};
    in.expect_end();
    return f;
  }
  throw CodecError("unknown client frame type " + std::to_string(type));
}

inline Bytes encode_handshake(const Handshake& hs) {
  Bytes out{static_cast<std::uint8_t>(FrameType::kHandshake)};
  internal::put_u32(out, hs.k);
  internal::put_u32(out, hs.n_items);
  return out;
}

inline Handshake decode_handshake(std::span<const std::uint8_t> bytes) {
  internal::Reader in(bytes);
  if (in.u8() != static_cast<std::uint8_t>(FrameType::kHandshake)) {
    throw CodecError("expected a handshake frame");
  }
  Handshake hs;
  hs.k = in.u32();
  hs.n_items = in.u32();
  in.expect_end();
  if (hs.k == 0) throw CodecError("handshake with K = 0");
  return hs;
}

inline Bytes encode_model(std::uint32_t round, const Matrix& items) {
  Bytes out;
  out.reserve(13 + 8 * items.data().size());
  out.push_back(static_cast<std::uint8_t>(FrameType::kModel));
  internal::put_u32(out, round);
  internal::put_u32(out, static_cast<std::uint32_t>(items.rows()));
  internal::put_u32(out, static_cast<std::uint32_t>(items.cols()));
  for (double x : items.data()) internal::put_f64(out, x);
  return out;
}

inline ModelBroadcast decode_model(std::span<const std::uint8_t> bytes,
                                   const Handshake& session) {
  internal::Reader in(bytes);
  if (in.u8() != static_cast<std::uint8_t>(FrameType::kModel)) {
    throw CodecError("expected a model frame");
  }
  ModelBroadcast m;
  m.round = in.u32();
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  if (rows != session.n_items || cols != session.k) {
    throw CodecError("model shape does not match the session");
  }
  m.items = Matrix(rows, cols);
  for (double& x : m.items.data()) x = in.f64();
  in.expect_end();
  return m;
}

// Length of the frame at the start of `prefix`, or nullopt if the header is
// not complete yet. Throws CodecError on an unknown type byte.
inline std::optional<std::size_t> frame_length(
    std::span<const std::uint8_t> prefix) {
  if (prefix.empty()) return std::nullopt;
  auto u32_at = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(prefix[at + i]) << (8 * i);
    }
    return v;
  };
  switch (static_cast<FrameType>(prefix[0])) {
    case FrameType::kHandshake:
      return 9;
    case FrameType::kFinish:
      return 5;
    case FrameType::kGradient:
      if (prefix.size() < 9) return std::nullopt;
      return 9 + 8 * static_cast<std::size_t>(u32_at(5));
    case FrameType::kModel:
      if (prefix.size() < 13) return std::nullopt;
      return 13 + 8 * static_cast<std::size_t>(u32_at(5)) *
                      static_cast<std::size_t>(u32_at(9));
  }
  throw CodecError("unknown frame type " + std::to_string(prefix[0]));
}

}  // namespace sdmf

#endif  // SDMF_CODEC_HPP_
