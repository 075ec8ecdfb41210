#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "oracles.hpp"
#include "weu/ingestion.hpp"

namespace weu {
namespace {

TEST(ParseInteractions, SingleLine) {
  const auto recs = parse_interactions("u1,i1,5,1000\n", IngestConfig{});
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0], (RawInteraction{"u1", "i1", 5, 1000}));
}

TEST(ParseInteractions, RatingAboveScaleIsRangeError) {
  EXPECT_THROW(parse_interactions("u1,i1,6,1000\n", IngestConfig{}), RatingRangeError);
  EXPECT_THROW(parse_interactions("u1,i1,0,1000\n", IngestConfig{}), RatingRangeError);
}

TEST(ParseInteractions, MalformedRatingReportsLine) {
  try {
    parse_interactions("u1,i1,abc,1000\n", IngestConfig{});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse_interactions("u1,i1,4,1000\nu2,i1,4\n", IngestConfig{});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseInteractions, HeaderDetectedAndSkipped) {
  const auto recs =
      parse_interactions("user_id,item_id,rating,timestamp\nA,B,3,7\r\n\nC,D,1,8\n", IngestConfig{});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1], (RawInteraction{"C", "D", 1, 8}));
}

TEST(ParseInteractions, RespectsConfiguredScale) {
  IngestConfig cfg;
  cfg.r_max = 10;
  EXPECT_EQ(parse_interactions("u,i,9,1\n", cfg)[0].rating, 9);
}

TEST(FilterKCore, AlreadySatisfiedIsUnchanged) {
  // 10 users x 10 items, fully observed: everyone has exactly 10.
  std::vector<InteractionRecord> recs;
  for (UserIndex u = 0; u < 10; ++u)
    for (ItemIndex i = 0; i < 10; ++i) recs.push_back({u, i, 3, u * 10 + i});
  EXPECT_EQ(filter_k_core(recs, 10), recs);
}

TEST(FilterKCore, ThinUserRemoved) {
  std::vector<InteractionRecord> recs;
  for (UserIndex u = 0; u < 10; ++u)
    for (ItemIndex i = 0; i < 10; ++i) recs.push_back({u, i, 3, 0});
  for (ItemIndex i = 0; i < 9; ++i) recs.push_back({10, i, 3, 0});
  const auto out = filter_k_core(recs, 10);
  EXPECT_EQ(out.size(), 100u);
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](auto& r) { return r.user == 10; }));
}

// 20 users. Users 0..17 rate items 0..9; user 18 rates items 0..7 plus item 10
// (9 interactions). Item 10 is also rated by users 0..7 and 19, so it has 10
// raters until user 18 goes. User 19 rates items 0..9 and item 10: once item 10
// goes, user 19 keeps 10 and survives.
std::vector<InteractionRecord> chain_fixture() {
  std::vector<InteractionRecord> recs;
  for (UserIndex u = 0; u < 18; ++u)
    for (ItemIndex i = 0; i < 10; ++i) recs.push_back({u, i, static_cast<int>(1 + (u + i) % 5), u + i});
  for (ItemIndex i = 0; i < 8; ++i) recs.push_back({18, i, 2, i});
  recs.push_back({18, 10, 2, 99});
  for (UserIndex u = 0; u < 8; ++u) recs.push_back({u, 10, 4, 50});
  for (ItemIndex i = 0; i < 10; ++i) recs.push_back({19, i, 5, i});
  recs.push_back({19, 10, 5, 77});
  return recs;
}

TEST(FilterKCore, CascadingRemovalMatchesBruteForce) {
  const auto recs = chain_fixture();
  const auto out = filter_k_core(recs, 10);
  EXPECT_EQ(out, oracle::k_core_one_at_a_time(recs, 10));
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](auto& r) { return r.item == 10; }));
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](auto& r) { return r.user == 18; }));
  EXPECT_TRUE(std::any_of(out.begin(), out.end(), [](auto& r) { return r.user == 19; }));
}

TEST(FilterKCore, RandomInstancesMatchOracleAndAreFixedPoints) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<UserIndex> user(0, 29);
    std::uniform_int_distribution<ItemIndex> item(0, 24);
    const std::size_t n = 150 + trial * 10;
    std::vector<InteractionRecord> recs;
    for (std::size_t k = 0; k < n; ++k) recs.push_back({user(rng), item(rng), 3, 0});
    const std::size_t min = 3 + trial % 8;
    const auto out = filter_k_core(recs, min);
    EXPECT_EQ(out, oracle::k_core_one_at_a_time(recs, min));
    EXPECT_EQ(filter_k_core(out, min), out);
  }
}

TEST(ChronologicalSplit, TenRecordsSplitSixTwoTwo) {
  std::vector<InteractionRecord> recs;
  for (ItemIndex i = 0; i < 10; ++i) recs.push_back({0, i, 4, 100 - i});
  const auto ds = chronological_split(recs, {0.6, 0.2, 0.2}, 1, 10);
  EXPECT_EQ(ds.train.size(), 6u);
  EXPECT_EQ(ds.validation.size(), 2u);
  EXPECT_EQ(ds.test.size(), 2u);
  // Latest timestamps (smallest item indices) land in test.
  EXPECT_EQ(ds.test.back().item, 0u);
  EXPECT_EQ(ds.train.front().item, 9u);
}

TEST(ChronologicalSplit, SmallUsers) {
  std::vector<InteractionRecord> recs;
  for (ItemIndex i = 0; i < 5; ++i) recs.push_back({0, i, 4, i});
  recs.push_back({1, 0, 4, 0});
  const auto ds = chronological_split(recs, {0.6, 0.2, 0.2}, 2, 5);
  auto count = [](const auto& v, UserIndex u) {
    return std::count_if(v.begin(), v.end(), [u](auto& r) { return r.user == u; });
  };
  EXPECT_EQ(count(ds.train, 0), 3);
  EXPECT_EQ(count(ds.validation, 0), 1);
  EXPECT_EQ(count(ds.test, 0), 1);
  EXPECT_EQ(count(ds.train, 1), 0);
  EXPECT_EQ(count(ds.validation, 1), 0);
  EXPECT_EQ(count(ds.test, 1), 1);
}

TEST(ChronologicalSplit, TiesBrokenByItemIndex) {
  std::vector<InteractionRecord> recs{{0, 4, 1, 5}, {0, 2, 1, 5}, {0, 3, 1, 5}, {0, 1, 1, 5},
                                      {0, 0, 1, 5}};
  const auto ds = chronological_split(recs, {0.6, 0.2, 0.2}, 1, 5);
  EXPECT_EQ(ds.train[0].item, 0u);
  EXPECT_EQ(ds.train[2].item, 2u);
  EXPECT_EQ(ds.validation[0].item, 3u);
  EXPECT_EQ(ds.test[0].item, 4u);
}

TEST(ChronologicalSplit, PartitionAndOrderingInvariants) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<UserIndex> user(0, 39);
  std::uniform_int_distribution<ItemIndex> item(0, 59);
  std::uniform_int_distribution<std::int64_t> ts(0, 30);
  std::vector<InteractionRecord> recs;
  for (int k = 0; k < 1500; ++k) recs.push_back({user(rng), item(rng), 3, ts(rng)});
  const auto ds = chronological_split(recs, {0.6, 0.2, 0.2}, 40, 60);

  EXPECT_EQ(ds.interaction_count(), recs.size());
  std::map<UserIndex, std::size_t> n;
  for (const auto& r : recs) ++n[r.user];
  for (auto [u, total] : n) {
    std::vector<std::int64_t> tr, va, te;
    for (const auto& r : ds.train) if (r.user == u) tr.push_back(r.timestamp);
    for (const auto& r : ds.validation) if (r.user == u) va.push_back(r.timestamp);
    for (const auto& r : ds.test) if (r.user == u) te.push_back(r.timestamp);
    EXPECT_EQ(tr.size(), total * 6 / 10);
    EXPECT_EQ(va.size(), total * 2 / 10);
    EXPECT_EQ(tr.size() + va.size() + te.size(), total);
    if (!tr.empty() && !va.empty()) {
      EXPECT_LE(*std::max_element(tr.begin(), tr.end()), va.front());
    }
    if (!va.empty() && !te.empty()) {
      EXPECT_LE(*std::max_element(va.begin(), va.end()), te.front());
    }
    if (!tr.empty() && !te.empty()) {
      EXPECT_LE(*std::max_element(tr.begin(), tr.end()), te.front());
    }
  }
  // multiset equality
  auto key = [](const InteractionRecord& r) {
    return std::tuple(r.user, r.item, r.rating, r.timestamp);
  };
  std::vector<std::tuple<UserIndex, ItemIndex, int, std::int64_t>> a, b;
  for (auto& r : recs) a.push_back(key(r));
  for (auto* part : {&ds.train, &ds.validation, &ds.test})
    for (auto& r : *part) b.push_back(key(r));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(IngestConfig, Validation) {
  IngestConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.split_ratios = {0.5, 0.2, 0.2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_interactions = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(BuildDataset, FixtureCountsAndRoundTrip) {
  std::ifstream in(std::string(WEU_TEST_DATA_DIR) + "/fixture_30users.csv");
  ASSERT_TRUE(in);
  const auto raw = parse_interactions(in, IngestConfig{});
  EXPECT_EQ(raw.size(), 477u);
  const auto ds = build_dataset(raw, IngestConfig{});
  EXPECT_EQ(ds.user_count, 30u);
  EXPECT_EQ(ds.item_count, 30u);
  EXPECT_EQ(ds.interaction_count(), 450u);
  EXPECT_EQ(ds.train.size(), 270u);
  EXPECT_EQ(ds.validation.size(), 90u);
  EXPECT_EQ(ds.test.size(), 90u);
  EXPECT_FALSE(ds.users.find("u_thin"));
  EXPECT_FALSE(ds.users.find("u_chain"));
  EXPECT_FALSE(ds.items.find("i_thin"));
  EXPECT_FALSE(ds.items.find("i_chain"));

  const auto dir = std::filesystem::temp_directory_path() / "weu_ingestion_roundtrip";
  std::filesystem::remove_all(dir);
  write_split(dir, ds);
  const auto back = read_split(dir);
  EXPECT_EQ(back.train, ds.train);
  EXPECT_EQ(back.validation, ds.validation);
  EXPECT_EQ(back.test, ds.test);
  EXPECT_EQ(back.users.raw_ids(), ds.users.raw_ids());
  EXPECT_EQ(back.items.raw_ids(), ds.items.raw_ids());
  EXPECT_EQ(back.r_max, 5);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace weu
