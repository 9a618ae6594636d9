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

#include <bit>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "sdmf/codec.hpp"
#include "sdmf/errors.hpp"
#include "sdmf/random.hpp"

namespace sdmf {
namespace {

TEST(CodecTest, GradientLayout) {
  const Bytes expected{0x01, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00,
                       0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                       0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F};
  EXPECT_EQ(encode_message(GradientMessage{3, {0.0, 1.0}}), expected);
  EXPECT_EQ(expected.size(), 25u);
}

TEST(CodecTest, FinishLayout) {
  EXPECT_EQ(encode_message(FinishMessage{7}),
            (Bytes{0x02, 0x07, 0x00, 0x00, 0x00}));
}

TEST(CodecTest, HandshakeLayout) {
  Bytes b = encode_handshake({50, 1682});
  EXPECT_EQ(b, (Bytes{0x00, 50, 0, 0, 0, 0x92, 0x06, 0, 0}));
  EXPECT_EQ(decode_handshake(b), (Handshake{50, 1682}));
}

TEST(CodecTest, RandomRoundTripsAreBitExact) {
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    Message m;
    if (rng.bernoulli(0.2)) {
      m = FinishMessage{static_cast<std::uint32_t>(rng.engine()())};
    } else {
      GradientMessage g;
      g.item_id = static_cast<std::uint32_t>(rng.engine()());
      g.delta.resize(4);
      for (double& x : g.delta) {
        do {
          x = std::bit_cast<double>(rng.engine()());
        } while (!std::isfinite(x));
      }
      m = g;
    }
    const Bytes bytes = encode_message(m);
    EXPECT_EQ(frame_length(bytes), bytes.size());
    Message back = decode_message(bytes, 4);
    EXPECT_EQ(encode_message(back), bytes);
    if (auto* g = std::get_if<GradientMessage>(&m)) {
      const auto& h = std::get<GradientMessage>(back);
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(g->delta[c]),
                  std::bit_cast<std::uint64_t>(h.delta[c]));
      }
    } else {
      EXPECT_EQ(std::get<FinishMessage>(m), std::get<FinishMessage>(back));
    }
  }
}

TEST(CodecTest, RejectsMalformedFrames) {
  Bytes g = encode_message(GradientMessage{3, {0.5, 1.0}});
  EXPECT_THROW(decode_message(Bytes(g.begin(), g.end() - 1), 2), CodecError);
  EXPECT_THROW(decode_message(g, 3), CodecError);
  Bytes extra = g;
  extra.push_back(0);
  EXPECT_THROW(decode_message(extra, 2), CodecError);
  EXPECT_THROW(decode_message(Bytes{0x09, 0, 0, 0, 0}, 2), CodecError);
  EXPECT_THROW(decode_message(Bytes{}, 2), CodecError);
  Bytes nan = encode_message(GradientMessage{1, {std::nan(""), 0.0}});
  EXPECT_THROW(decode_message(nan, 2), CodecError);
  EXPECT_THROW(frame_length(Bytes{0x09}), CodecError);
}

TEST(CodecTest, FrameLengthNeedsHeader) {
  Bytes g = encode_message(GradientMessage{3, {0.5, 1.0, 2.0}});
  EXPECT_FALSE(frame_length(std::span(g).first(0)).has_value());
  EXPECT_FALSE(frame_length(std::span(g).first(8)).has_value());
  EXPECT_EQ(frame_length(std::span(g).first(9)), 33u);
}

TEST(CodecTest, ModelRoundTrip) {
  Matrix m(3, 2);
  for (std::size_t i = 0; i < 6; ++i) m.data()[i] = 0.25 * i - 1;
  Bytes b = encode_model(9, m);
  EXPECT_EQ(frame_length(b), b.size());
  ModelBroadcast back = decode_model(b, Handshake{2, 3});
  EXPECT_EQ(back.round, 9u);
  EXPECT_EQ(back.items, m);
  EXPECT_THROW(decode_model(b, Handshake{2, 4}), CodecError);
}

}  // namespace
}  // namespace sdmf
