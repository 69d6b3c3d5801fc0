#include <cmath>

#include <gtest/gtest.h>

#include "trustpath/errors.hpp"
#include "trustpath/trust_encoding.hpp"

using namespace trustpath;
using namespace trustpath::gnn;

using Bits = std::vector<std::uint8_t>;

TEST(EncodeTrust, Examples) {
  EXPECT_EQ(encode_trust(0.0, 4).bits, (Bits{0, 0, 0, 0}));
  EXPECT_EQ(encode_trust(1.0, 4).bits, (Bits{1, 1, 1, 1}));
  EXPECT_EQ(encode_trust(0.75, 4).bits, (Bits{1, 0, 1, 1}));
  EXPECT_EQ(encode_trust(1.0, 7).bits, Bits(7, 1));
}

TEST(EncodeTrust, OutOfRange) {
  EXPECT_THROW(encode_trust(-0.01, 4), DomainError);
  EXPECT_THROW(encode_trust(1.01, 4), DomainError);
  EXPECT_THROW(encode_trust(std::nan(""), 4), DomainError);
  EXPECT_THROW(encode_trust(0.5, 0), ModelError);
}

TEST(EncodeTrust, DecodeWithinOneStep) {
  for (std::size_t bits : {1u, 3u, 4u, 8u}) {
    const double step = 1.0 / static_cast<double>((1u << bits) - 1);
    for (int i = 0; i <= 1000; ++i) {
      const double v = i / 1000.0;
      const auto enc = encode_trust(v, bits);
      EXPECT_LE(std::abs(enc.decode() - v), step / 2 + 1e-12);
      for (auto b : enc.bits) EXPECT_TRUE(b == 0 || b == 1);
    }
  }
}

TEST(EncodeTrust, VectorMatchesBits) {
  const auto enc = encode_trust(0.75, 4);
  const auto v = enc.as_vector();
  ASSERT_EQ(v.size(), 4);
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[3], 1.0);
}

TEST(EncodeFrequency, Examples) {
  EXPECT_EQ(encode_frequency(9, 9, 4).bits, (Bits{1, 1, 1, 1}));
  EXPECT_EQ(encode_frequency(3, 4, 4).bits, encode_trust(0.75, 4).bits);
  EXPECT_THROW(encode_frequency(0, 4, 4), DomainError);
  EXPECT_THROW(encode_frequency(5, 4, 4), DomainError);
  EXPECT_THROW(encode_frequency(1, 0, 4), DomainError);
}

TEST(TrustClass, FloorBinningAndCenters) {
  EXPECT_EQ(trust_class(0.0, 16), 0u);
  EXPECT_EQ(trust_class(1.0, 16), 15u);
  EXPECT_EQ(trust_class(0.0624, 16), 0u);
  EXPECT_EQ(trust_class(0.0625, 16), 1u);
  EXPECT_EQ(trust_class(0.5, 5), 2u);
  EXPECT_DOUBLE_EQ(bin_center(0, 5), 0.1);
  EXPECT_DOUBLE_EQ(bin_center(15, 16), 31.0 / 32.0);
  EXPECT_THROW(trust_class(0.5, 1), ModelError);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(trust_class(bin_center(c, 16), 16), c);
}
