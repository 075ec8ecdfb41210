#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"

namespace weu {

// Probability weighting variant. Identity is plain expected utility; the
// unplussed TF and Prelec variants pin theta at 1.
enum class PwfKind { identity, tf, tf_plus, prelec, prelec_plus };

inline constexpr std::string_view to_string(PwfKind k) {
  switch (k) {
    case PwfKind::identity: return "eu";
    case PwfKind::tf: return "tf";
    case PwfKind::tf_plus: return "tf+";
    case PwfKind::prelec: return "prelec";
    case PwfKind::prelec_plus: return "prelec+";
  }
  return "eu";
}

inline PwfKind parse_pwf_kind(std::string_view s) {
  if (s == "eu" || s == "identity") return PwfKind::identity;
  if (s == "tf") return PwfKind::tf;
  if (s == "tf+") return PwfKind::tf_plus;
  if (s == "prelec") return PwfKind::prelec;
  if (s == "prelec+") return PwfKind::prelec_plus;
  throw ConfigError("unknown weighting kind '" + std::string(s) + "'");
}

inline constexpr bool learns_theta(PwfKind k) {
  return k == PwfKind::tf_plus || k == PwfKind::prelec_plus;
}

inline constexpr bool has_weighting(PwfKind k) { return k != PwfKind::identity; }

struct PwfParams {
  double delta = 0.5;
  double gamma = 1.0;
  double theta = 1.0;
};

// Weight together with its partial derivatives w.r.t. the PWF parameters.
struct PwfValue {
  double w = 0.0;
  double d_delta = 0.0;
  double d_gamma = 0.0;
  double d_theta = 0.0;
};

// Below any empirical probability reachable with fewer than 1e12 raters.
inline constexpr double kMinProbability = 1e-12;

// delta p^g / (delta p^g + theta (1-p)^g)
inline PwfValue weight_tf_grad(double p, const PwfParams& q) {
  if (p <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  if (p >= 1.0) return {1.0, 0.0, 0.0, 0.0};
  p = std::max(p, kMinProbability);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  // Work in log space: w = 1 / (1 + exp(z)), z = ln(theta/delta) + g (lq - lp).
  const double z = std::log(q.theta) - std::log(q.delta) + q.gamma * (lq - lp);
  double w;
  if (z >= 0) {
    const double e = std::exp(-z);
    w = e / (1.0 + e);
  } else {
    w = 1.0 / (1.0 + std::exp(z));
  }
  const double ww = w * (1.0 - w);
  return {w, ww / q.delta, ww * (lp - lq), -ww / q.theta};
}

inline double weight_tf(double p, const PwfParams& q) { return weight_tf_grad(p, q).w; }

// exp(-delta (-theta ln p)^g)
inline PwfValue weight_prelec_grad(double p, const PwfParams& q) {
  if (p <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  if (p >= 1.0) return {1.0, 0.0, 0.0, 0.0};
  p = std::max(p, kMinProbability);
  const double neg_log_p = -std::log(p);
  const double l = q.theta * neg_log_p;
  const double z = std::pow(l, q.gamma);
  const double w = std::exp(-q.delta * z);
  return {w, -z * w, -q.delta * w * z * std::log(l), -q.delta * w * q.gamma * z / q.theta};
}

inline double weight_prelec(double p, const PwfParams& q) { return weight_prelec_grad(p, q).w; }

inline PwfValue weight_grad(PwfKind kind, double p, PwfParams q) {
  switch (kind) {
    case PwfKind::identity: return {p, 0.0, 0.0, 0.0};
    case PwfKind::tf: q.theta = 1.0; [[fallthrough]];
    case PwfKind::tf_plus: return weight_tf_grad(p, q);
    case PwfKind::prelec: q.theta = 1.0; [[fallthrough]];
    case PwfKind::prelec_plus: return weight_prelec_grad(p, q);
  }
  return {p, 0.0, 0.0, 0.0};
}

inline double weight(PwfKind kind, double p, const PwfParams& q) {
  return weight_grad(kind, p, q).w;
}

// Curve rows (p, w) on [0, 1] with the given spacing; the last row is p = 1.
inline void write_pwf_csv(std::ostream& out, PwfKind kind, const PwfParams& q,
                          double step = 0.01) {
  out << "p,w\n";
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  for (std::size_t k = 0; k <= n; ++k) {
    const double p = k == n ? 1.0 : static_cast<double>(k) * step;
    out << p << ',' << weight(kind, p, q) << '\n';
  }
}

// Outcome probabilities for every item, from training ratings only. Items with
// no training ratings use the global training distribution.
class HistogramStore {
 public:
  HistogramStore() = default;

  HistogramStore(std::vector<RatingHistogram> items, RatingHistogram global)
      : items_(std::move(items)), global_(std::move(global)) {
    r_max_ = global_.r_max();
    probs_.assign(items_.size() * static_cast<std::size_t>(r_max_), 0.0);
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const auto& h = items_[i].empty() ? global_ : items_[i];
      if (h.empty()) continue;
      for (int r = 1; r <= r_max_; ++r)
        probs_[i * static_cast<std::size_t>(r_max_) + static_cast<std::size_t>(r - 1)] =
            h.probability(r);
    }
  }

  // Store backed directly by a probability table (item-major, r_max columns).
  static HistogramStore from_probabilities(std::vector<double> table, int r_max) {
    HistogramStore s;
    s.r_max_ = r_max;
    s.global_ = RatingHistogram(r_max);
    s.items_.assign(table.size() / static_cast<std::size_t>(r_max), RatingHistogram(r_max));
    s.probs_ = std::move(table);
    return s;
  }

  int r_max() const noexcept { return r_max_; }
  std::size_t item_count() const noexcept { return items_.size(); }
  const RatingHistogram& item(ItemIndex i) const { return items_.at(i); }
  const RatingHistogram& global() const noexcept { return global_; }
  bool uses_fallback(ItemIndex i) const { return items_.at(i).empty(); }

  // p_i(r) for r = 1..r_max; all zeros only if there is no training data at all.
  std::span<const double> probabilities(ItemIndex i) const {
    return std::span<const double>(probs_).subspan(
        static_cast<std::size_t>(i) * static_cast<std::size_t>(r_max_),
        static_cast<std::size_t>(r_max_));
  }

 private:
  std::vector<RatingHistogram> items_;
  RatingHistogram global_;
  std::vector<double> probs_;
  int r_max_ = kDefaultRMax;
};

inline HistogramStore build_histograms(std::span<const InteractionRecord> train,
                                       std::size_t item_count, int r_max) {
  std::vector<RatingHistogram> items(item_count, RatingHistogram(r_max));
  RatingHistogram global(r_max);
  for (const auto& rec : train) {
    items.at(rec.item).add(rec.rating);
    global.add(rec.rating);
  }
  return HistogramStore(std::move(items), std::move(global));
}

}  // namespace weu
