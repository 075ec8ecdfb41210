#include <gtest/gtest.h>

#include <random>

#include "weu/data_model.hpp"

namespace weu {
namespace {

RatingHistogram hist(std::vector<std::uint64_t> counts) {
  return RatingHistogram::from_counts(counts);
}

TEST(RatingHistogram, ProbabilityIsCountOverTotal) {
  const auto h = hist({1, 0, 0, 1, 2});
  EXPECT_EQ(h.total(), 4u);
  EXPECT_DOUBLE_EQ(probability(h, 5), 0.5);
  EXPECT_DOUBLE_EQ(probability(h, 3), 0.0);
  EXPECT_DOUBLE_EQ(probability(hist({0, 0, 0, 0, 10}), 5), 1.0);
}

TEST(RatingHistogram, EmptyHistogramThrows) {
  RatingHistogram h(5);
  EXPECT_TRUE(h.empty());
  EXPECT_THROW(probability(h, 3), EmptyHistogramError);
}

TEST(RatingHistogram, RejectsLevelsOutsideScale) {
  const auto h = hist({1, 1, 1, 1, 1});
  EXPECT_THROW(h.probability(0), ConfigError);
  EXPECT_THROW(h.probability(6), ConfigError);
  RatingHistogram g(5);
  EXPECT_THROW(g.add(7), ConfigError);
}

TEST(RatingHistogram, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> count(0, 1000);
  for (int trial = 0; trial < 500; ++trial) {
    const int r_max = 2 + trial % 9;
    std::vector<std::uint64_t> c(static_cast<std::size_t>(r_max));
    for (auto& v : c) v = count(rng);
    c[0] += 1;
    const auto h = hist(c);
    double s = 0.0;
    for (int r = 1; r <= r_max; ++r) s += h.probability(r);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(IdMap, RoundTripsEveryId) {
  IdMap m;
  std::vector<std::string> ids{"A3X", "b", "user 7", "A3X", "zz", "b"};
  for (const auto& id : ids) m.intern(id);
  EXPECT_EQ(m.size(), 4u);
  for (const auto& id : ids) EXPECT_EQ(m.raw(*m.find(id)), id);
  for (std::uint32_t i = 0; i < m.size(); ++i) EXPECT_EQ(*m.find(m.raw(i)), i);
  EXPECT_FALSE(m.find("missing").has_value());
}

}  // namespace
}  // namespace weu
