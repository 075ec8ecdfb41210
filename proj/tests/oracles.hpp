#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the implementation paths it is used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace weu::oracle {

inline std::string to_key(const std::string& s) { return s; }
template <class T>
std::string to_key(T v) {
  return std::to_string(v);
}

// Removes one offending entity at a time until no user or item is below
// `min_count`. Slow but obviously correct.
template <class Record>
std::vector<Record> k_core_one_at_a_time(std::vector<Record> recs, std::size_t min_count) {
  while (true) {
    std::map<std::string, std::size_t> users, items;
    for (const auto& r : recs) {
      ++users[to_key(r.user)];
      ++items[to_key(r.item)];
    }
    std::string bad_user, bad_item;
    for (auto& [k, n] : users)
      if (n < min_count) { bad_user = k; break; }
    if (bad_user.empty())
      for (auto& [k, n] : items)
        if (n < min_count) { bad_item = k; break; }
    if (bad_user.empty() && bad_item.empty()) return recs;
    std::vector<Record> next;
    for (const auto& r : recs) {
      if (!bad_user.empty() && to_key(r.user) == bad_user) continue;
      if (!bad_item.empty() && to_key(r.item) == bad_item) continue;
      next.push_back(r);
    }
    recs = std::move(next);
  }
}

// Weighting functions written straight from their defining formulas.
inline double tf(double p, double delta, double gamma, double theta) {
  if (p == 0.0) return 0.0;
  const double a = delta * std::pow(p, gamma);
  return a / (a + theta * std::pow(1.0 - p, gamma));
}

inline double prelec(double p, double delta, double gamma, double theta) {
  if (p == 0.0) return 0.0;
  return std::exp(-delta * std::pow(-theta * std::log(p), gamma));
}

// Sum over every outcome level, zero-probability ones included.
inline double weu_exhaustive(const std::vector<double>& probs, double ref, double alpha,
                             double beta, const std::function<double(double)>& w) {
  double s = 0.0;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double o = static_cast<double>(r + 1) - ref;
    const double u = o >= 0 ? alpha * std::tanh(o) : beta * std::tanh(o);
    s += u * w(probs[r]);
  }
  return s;
}

inline double log_choice_prob(const std::vector<double>& logits, std::size_t pos) {
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) z += (p[k] = std::exp(logits[k]));
  for (auto& v : p) v /= z;
  return std::log(p[pos]);
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                  double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double rel = 1e-4, double abs = 1e-7) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

// Expected NDCG@k of a uniformly random ranking of `relevant` items among a
// pool of `pool` items: each rank holds a relevant item with probability
// relevant/pool.
inline double random_ranking_ndcg(std::size_t relevant, std::size_t pool, int k) {
  double dcg = 0.0, idcg = 0.0;
  for (int r = 1; r <= k && static_cast<std::size_t>(r) <= pool; ++r)
    dcg += (static_cast<double>(relevant) / static_cast<double>(pool)) / std::log2(r + 1.0);
  for (int r = 1; r <= k && static_cast<std::size_t>(r) <= relevant; ++r)
    idcg += 1.0 / std::log2(r + 1.0);
  return dcg / idcg;
}

}  // namespace weu::oracle
