#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>

#include "photocount/rng.hpp"

using photocount::Philox4x32;

namespace {

// Known-answer vectors for Philox4x32-10 published with the reference
// implementation.
TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::encrypt({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Philox4x32::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::encrypt({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Philox4x32::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, SameSeedAndStreamReproduce) {
  Philox4x32 a(42, 7);
  Philox4x32 b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, StreamsAndSeedsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 50; ++s) {
    firsts.insert(Philox4x32(1, s)());
    firsts.insert(Philox4x32(s + 2, 0)());
  }
  EXPECT_EQ(firsts.size(), 100u);
  Philox4x32 plain(3, 5);
  Philox4x32 thinning(3, 5 | Philox4x32::kThinningStreamBit);
  EXPECT_NE(plain(), thinning());
}

TEST(Philox, UniformIsOpenAndBalanced) {
  Philox4x32 rng(2024, 0);
  constexpr int n = 200000;
  std::array<int, 10> bins{};
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ++bins[static_cast<std::size_t>(u * 10)];
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  double chi2 = 0.0;
  for (const int c : bins) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
  EXPECT_LT(chi2, 27.88);  // chi-square 9 dof, p = 0.001
}

}  // namespace
