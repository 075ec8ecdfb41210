#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "weu/data_model.hpp"
#include "weu/probability.hpp"
#include "weu/utility.hpp"

namespace weu {

struct UserScaleSummary {
  UserIndex user = 0;
  double mean_alpha = 0.0;
  double mean_beta = 0.0;
  double diff = 0.0;  // mean_alpha - mean_beta
};

// Users with at least one test interaction, ascending.
inline std::vector<UserIndex> test_users(const SplitDataset& ds) {
  std::vector<char> seen(ds.user_count, 0);
  for (const auto& r : ds.test) seen[r.user] = 1;
  std::vector<UserIndex> out;
  for (std::size_t j = 0; j < seen.size(); ++j)
    if (seen[j]) out.push_back(static_cast<UserIndex>(j));
  return out;
}

// Distinct items in the test split, ascending.
inline std::vector<ItemIndex> test_items(const SplitDataset& ds) {
  std::vector<ItemIndex> out;
  for (const auto& r : ds.test) out.push_back(r.item);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline UserScaleSummary user_scale_summary(const WeuParameters& params, UserIndex user,
                                           std::span<const ItemIndex> items) {
  UserScaleSummary s{user, 0.0, 0.0, 0.0};
  if (items.empty()) return s;
  for (auto i : items) {
    const auto ab = materialize_alpha_beta(params, i, user);
    s.mean_alpha += ab.alpha;
    s.mean_beta += ab.beta;
  }
  s.mean_alpha /= static_cast<double>(items.size());
  s.mean_beta /= static_cast<double>(items.size());
  s.diff = s.mean_alpha - s.mean_beta;
  return s;
}

// Mean materialized alpha_ij and beta_ij over the test-item set, per test user.
inline std::vector<UserScaleSummary> user_scale_summaries(const WeuParameters& params,
                                                          const SplitDataset& ds) {
  const auto items = test_items(ds);
  std::vector<UserScaleSummary> out;
  for (auto u : test_users(ds)) out.push_back(user_scale_summary(params, u, items));
  return out;
}

struct ScaleHistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t alpha = 0;
  std::size_t beta = 0;
  std::size_t diff = 0;
};

// Equal-width bins over the joint range of all three quantities.
inline std::vector<ScaleHistogramBin> scale_histogram(std::span<const UserScaleSummary> rows,
                                                      std::size_t bins = 50) {
  if (rows.empty() || bins == 0) return {};
  double lo = rows.front().mean_alpha, hi = lo;
  for (const auto& r : rows)
    for (double v : {r.mean_alpha, r.mean_beta, r.diff}) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<ScaleHistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  auto bin_of = [&](double v) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    return std::min(b, bins - 1);
  };
  for (const auto& r : rows) {
    ++out[bin_of(r.mean_alpha)].alpha;
    ++out[bin_of(r.mean_beta)].beta;
    ++out[bin_of(r.diff)].diff;
  }
  return out;
}

struct ScaleSummaryStats {
  double mean_diff = 0.0;
  double fraction_alpha_above_beta = 0.0;
};

inline ScaleSummaryStats summarize_scales(std::span<const UserScaleSummary> rows) {
  ScaleSummaryStats s;
  if (rows.empty()) return s;
  std::size_t above = 0;
  for (const auto& r : rows) {
    s.mean_diff += r.diff;
    above += r.mean_alpha > r.mean_beta;
  }
  s.mean_diff /= static_cast<double>(rows.size());
  s.fraction_alpha_above_beta = static_cast<double>(above) / static_cast<double>(rows.size());
  return s;
}

// Average of the materialized (delta, gamma, theta) over the given users.
inline PwfParams mean_pwf_params(const WeuParameters& params, std::span<const UserIndex> users,
                                 PwfKind kind) {
  PwfParams m{0.0, 0.0, 0.0};
  if (users.empty()) return materialize_pwf_params(params, 0, kind);
  for (auto u : users) {
    const auto q = materialize_pwf_params(params, u, kind);
    m.delta += q.delta;
    m.gamma += q.gamma;
    m.theta += q.theta;
  }
  const auto n = static_cast<double>(users.size());
  m.delta /= n;
  m.gamma /= n;
  m.theta /= n;
  return m;
}

struct PwfCurvePoint {
  double p = 0.0;
  double w_model = 0.0;
  double w_identity = 0.0;
};

inline std::vector<PwfCurvePoint> pwf_curve(PwfKind kind, const PwfParams& q,
                                            double grid_step = 0.01) {
  std::vector<PwfCurvePoint> out;
  const auto n = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  for (std::size_t k = 0; k <= n; ++k) {
    const double p = k == n ? 1.0 : static_cast<double>(k) * grid_step;
    out.push_back({p, weight(kind, p, q), p});
  }
  return out;
}

inline std::vector<PwfCurvePoint> export_mean_pwf_curve(const WeuParameters& params,
                                                        const SplitDataset& ds, PwfKind kind,
                                                        double grid_step = 0.01) {
  const auto users = test_users(ds);
  return pwf_curve(kind, mean_pwf_params(params, users, kind), grid_step);
}

inline void write_user_scales_csv(std::ostream& out, const SplitDataset& ds,
                                  std::span<const UserScaleSummary> rows) {
  out << "user,mean_alpha,mean_beta,diff\n";
  for (const auto& r : rows)
    out << ds.users.raw(r.user) << ',' << r.mean_alpha << ',' << r.mean_beta << ',' << r.diff
        << '\n';
}

inline void write_scale_histogram_csv(std::ostream& out,
                                      std::span<const ScaleHistogramBin> bins) {
  out << "bin_lo,bin_hi,count_alpha,count_beta,count_diff\n";
  for (const auto& b : bins)
    out << b.lo << ',' << b.hi << ',' << b.alpha << ',' << b.beta << ',' << b.diff << '\n';
}

inline void write_pwf_curve_csv(std::ostream& out, std::span<const PwfCurvePoint> rows) {
  out << "p,w_model,w_identity\n";
  for (const auto& r : rows) out << r.p << ',' << r.w_model << ',' << r.w_identity << '\n';
}

}  // namespace weu
