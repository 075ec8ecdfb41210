#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "weu/data_model.hpp"
#include "weu/optimizer.hpp"
#include "weu/probability.hpp"
#include "weu/utility.hpp"

namespace weu {

struct ScoredItem {
  ItemIndex item = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

// Score descending, then item index ascending.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

inline std::vector<ScoredItem> rank_scored(std::span<const ItemIndex> items,
                                           std::span<const double> scores) {
  std::vector<ScoredItem> out(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = {items[k], scores[k]};
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

// WEU(i, j) = sum over rating levels with p_i(r) > 0 of
//   u(r - ref_j; alpha_ij, beta_ij) * w_j(p_i(r)).
// Identity weighting gives plain expected utility.
inline double weu_score(const WeuParameters& params, const HistogramStore& hists, UserIndex user,
                        ItemIndex item, PwfKind kind) {
  const auto probs = hists.probabilities(item);
  const auto [alpha, beta] = materialize_alpha_beta(params, item, user);
  const auto pwf = materialize_pwf_params(params, user, kind);
  const double ref = params.ref_point(user);
  double score = 0.0;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double p = probs[r];
    if (p <= 0.0) continue;
    score += utility(outcome(static_cast<int>(r) + 1, ref), alpha, beta) * weight(kind, p, pwf);
  }
  return score;
}

// Same value as weu_score; additionally accumulates upstream * d(score)/d(param)
// into grad for every parameter the score depends on.
inline double weu_score_grad(const WeuParameters& params, const HistogramStore& hists,
                             UserIndex user, ItemIndex item, PwfKind kind, double upstream,
                             SparseGradient& grad) {
  const auto probs = hists.probabilities(item);
  const auto [alpha, beta] = materialize_alpha_beta(params, item, user);
  const auto pwf = materialize_pwf_params(params, user, kind);
  const double ref = params.ref_point(user);

  double score = 0.0, d_alpha = 0.0, d_beta = 0.0, d_ref = 0.0;
  double d_delta = 0.0, d_gamma = 0.0, d_theta = 0.0;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const double p = probs[r];
    if (p <= 0.0) continue;
    const double o = outcome(static_cast<int>(r) + 1, ref);
    const double t = std::tanh(o);
    const bool gain = o >= 0.0;
    const double s = gain ? alpha : beta;
    const auto wv = weight_grad(kind, p, pwf);
    const double u = s * t;
    score += u * wv.w;
    (gain ? d_alpha : d_beta) += t * wv.w;
    d_ref -= s * (1.0 - t * t) * wv.w;
    d_delta += u * wv.d_delta;
    d_gamma += u * wv.d_gamma;
    d_theta += u * wv.d_theta;
  }

  for (auto [sc, d] : {std::pair{Scale::alpha, d_alpha}, std::pair{Scale::beta, d_beta}}) {
    const double g = upstream * d;
    grad.add(params.global_index(sc), g);
    grad.add(params.item_bias_index(sc, item), g);
    grad.add(params.user_bias_index(sc, user), g);
    const auto fi = params.item_factor_index(sc, item);
    const auto fu = params.user_factor_index(sc, user);
    for (std::size_t k = 0; k < params.latent_dim(); ++k) {
      grad.add(fi + k, g * params[fu + k]);
      grad.add(fu + k, g * params[fi + k]);
    }
  }
  if (has_weighting(kind)) {
    for (auto [q, d] : {std::pair{PwfParam::delta, d_delta}, std::pair{PwfParam::gamma, d_gamma}}) {
      grad.add(params.pwf_global_index(q), upstream * d);
      grad.add(params.pwf_user_index(q, user), upstream * d);
    }
    if (learns_theta(kind)) {
      grad.add(params.pwf_global_index(PwfParam::theta), upstream * d_theta);
      grad.add(params.pwf_user_index(PwfParam::theta, user), upstream * d_theta);
    }
  }
  grad.add(params.ref_index(user), upstream * d_ref);
  return score;
}

struct ScoreRequest {
  UserIndex user = 0;
  std::vector<ItemIndex> candidates;
  PwfKind kind = PwfKind::identity;
};

inline void weu_scores(const WeuParameters& params, const HistogramStore& hists, UserIndex user,
                       std::span<const ItemIndex> items, PwfKind kind, std::span<double> out) {
  for (std::size_t k = 0; k < items.size(); ++k)
    out[k] = weu_score(params, hists, user, items[k], kind);
}

inline std::vector<ScoredItem> rank_candidates(const WeuParameters& params,
                                               const HistogramStore& hists,
                                               const ScoreRequest& request) {
  if (request.candidates.empty()) throw ConfigError("score request has no candidates");
  if (request.user >= params.user_count()) throw ConfigError("user index out of range");
  for (auto i : request.candidates)
    if (i >= params.item_count()) throw ConfigError("item index out of range");
  std::vector<double> scores(request.candidates.size());
  weu_scores(params, hists, request.user, request.candidates, request.kind, scores);
  return rank_scored(request.candidates, scores);
}

}  // namespace weu
