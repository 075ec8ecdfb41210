#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"
#include "weu/rng.hpp"
#include "weu/scorer.hpp"

namespace weu {

struct MetricsAtK {
  int k = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ndcg = 0.0;
};

struct RankingMetrics {
  std::vector<MetricsAtK> at;

  const MetricsAtK& at_k(int k) const {
    for (const auto& m : at)
      if (m.k == k) return m;
    throw ConfigError("cutoff " + std::to_string(k) + " was not evaluated");
  }
};

// Binary-gain top-k metrics. `relevant` must be sorted and free of duplicates.
inline MetricsAtK metrics_at_k(std::span<const ItemIndex> ranked,
                               std::span<const ItemIndex> relevant, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (relevant.empty()) throw ConfigError("relevant set must be non-empty");
  MetricsAtK m;
  m.k = k;
  const auto depth = std::min(ranked.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < depth; ++pos) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[pos])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min(relevant.size(), static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < ideal; ++pos)
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  m.precision = static_cast<double>(hits) / k;
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.ndcg = dcg / idcg;
  return m;
}

// `count` distinct items drawn uniformly from the catalog minus `excluded`
// (sorted, unique). Deterministic in (seed, user). Returned ascending.
inline std::vector<ItemIndex> sample_eval_negatives(std::uint64_t seed, UserIndex user,
                                                    std::span<const ItemIndex> excluded,
                                                    std::size_t item_count, std::size_t count) {
  if (excluded.size() > item_count) throw ConfigError("excluded set larger than catalog");
  const std::size_t eligible = item_count - excluded.size();
  if (count > eligible)
    throw ConfigError("catalog too small: user " + std::to_string(user) + " has " +
                      std::to_string(eligible) + " eligible negatives, " +
                      std::to_string(count) + " requested");
  // k-th eligible item -> item index
  auto nth_eligible = [&](std::size_t t) {
    std::size_t item = t;
    for (auto e : excluded) {
      if (e <= item)
        ++item;
      else
        break;
    }
    return static_cast<ItemIndex>(item);
  };
  std::vector<ItemIndex> out;
  out.reserve(count);
  if (count == eligible) {
    for (std::size_t t = 0; t < eligible; ++t) out.push_back(nth_eligible(t));
    return out;
  }
  // Floyd's subset sampling over positions [0, eligible).
  auto rng = make_stream(seed, "eval-negatives", user);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(count * 2);
  for (std::size_t j = eligible - count; j < eligible; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    auto t = pick(rng);
    chosen.insert(chosen.count(t) ? j : t);
  }
  for (auto t : chosen) out.push_back(nth_eligible(t));
  std::sort(out.begin(), out.end());
  return out;
}

struct EvalConfig {
  std::size_t negatives = 1000;
  std::vector<int> ks{1, 5, 10};
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  Split split = Split::test;
};

struct UserMetrics {
  UserIndex user = 0;
  std::size_t relevant = 0;
  std::vector<MetricsAtK> at;
};

struct EvaluationReport {
  RankingMetrics mean;
  std::vector<UserMetrics> per_user;
};

// Sorted unique item lists per user.
struct UserItemSets {
  std::vector<std::vector<ItemIndex>> target;   // items in the evaluated split
  std::vector<std::vector<ItemIndex>> touched;  // items in any split
};

inline UserItemSets user_item_sets(const SplitDataset& ds, Split split) {
  UserItemSets s;
  s.target.resize(ds.user_count);
  s.touched.resize(ds.user_count);
  for (auto sp : {Split::train, Split::validation, Split::test})
    for (const auto& r : records(ds, sp)) {
      s.touched[r.user].push_back(r.item);
      if (sp == split) s.target[r.user].push_back(r.item);
    }
  for (auto* lists : {&s.target, &s.touched})
    for (auto& v : *lists) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  return s;
}

// Ranks each user's target items jointly against one shared pool of sampled
// negatives and macro-averages over users with a non-empty target set.
//
// `scorer(user, items, out_scores)` must be safe to call concurrently.
template <class Scorer>
EvaluationReport evaluate(const Scorer& scorer, const SplitDataset& ds, const EvalConfig& cfg) {
  if (cfg.ks.empty()) throw ConfigError("no cutoffs requested");
  const auto sets = user_item_sets(ds, cfg.split);
  std::vector<UserIndex> users;
  for (std::size_t j = 0; j < ds.user_count; ++j)
    if (!sets.target[j].empty()) users.push_back(static_cast<UserIndex>(j));

  std::vector<UserMetrics> per_user(users.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    std::vector<ItemIndex> pool;
    std::vector<double> scores;
    std::vector<ItemIndex> ranked;
    for (std::size_t n = first; n < users.size(); n += stride) {
      const auto user = users[n];
      const auto& relevant = sets.target[user];
      auto negatives =
          sample_eval_negatives(cfg.seed, user, sets.touched[user], ds.item_count, cfg.negatives);
      pool.assign(relevant.begin(), relevant.end());
      pool.insert(pool.end(), negatives.begin(), negatives.end());
      scores.assign(pool.size(), 0.0);
      scorer(user, std::span<const ItemIndex>(pool), std::span<double>(scores));
      const auto order = rank_scored(pool, scores);
      ranked.resize(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) ranked[k] = order[k].item;
      UserMetrics um{user, relevant.size(), {}};
      for (int k : cfg.ks) um.at.push_back(metrics_at_k(ranked, relevant, k));
      per_user[n] = std::move(um);
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, users.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  EvaluationReport report;
  for (int k : cfg.ks) report.mean.at.push_back({k, 0.0, 0.0, 0.0, 0.0});
  for (const auto& um : per_user)
    for (std::size_t c = 0; c < cfg.ks.size(); ++c) {
      auto& m = report.mean.at[c];
      m.precision += um.at[c].precision;
      m.recall += um.at[c].recall;
      m.f1 += um.at[c].f1;
      m.ndcg += um.at[c].ndcg;
    }
  if (!per_user.empty())
    for (auto& m : report.mean.at) {
      const auto n = static_cast<double>(per_user.size());
      m.precision /= n;
      m.recall /= n;
      m.f1 /= n;
      m.ndcg /= n;
    }
  report.per_user = std::move(per_user);
  return report;
}

inline void write_metrics_csv(std::ostream& out, const std::string& model,
                              const RankingMetrics& metrics) {
  out << "model,K,precision,recall,f1,ndcg\n";
  for (const auto& m : metrics.at)
    out << model << ',' << m.k << ',' << m.precision << ',' << m.recall << ',' << m.f1 << ','
        << m.ndcg << '\n';
}

inline void write_per_user_csv(std::ostream& out, const SplitDataset& ds,
                               const EvaluationReport& report) {
  out << "user_raw_id,K,relevant,precision,recall,f1,ndcg\n";
  for (const auto& um : report.per_user)
    for (const auto& m : um.at)
      out << ds.users.raw(um.user) << ',' << m.k << ',' << um.relevant << ',' << m.precision
          << ',' << m.recall << ',' << m.f1 << ',' << m.ndcg << '\n';
}

}  // namespace weu
