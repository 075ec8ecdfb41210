#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "weu/data_model.hpp"
#include "weu/ingestion.hpp"
#include "weu/probability.hpp"
#include "weu/rng.hpp"
#include "weu/scorer.hpp"
#include "weu/utility.hpp"

namespace weu {

// Generator for data whose purchases follow the noisy choice model under a
// known WEU scorer. Items get Dirichlet-distributed rating distributions,
// users get risk-averse scales (beta > alpha) and personal weighting.
struct PlantedConfig {
  std::size_t users = 500;
  std::size_t items = 300;
  std::size_t interactions_per_user = 20;
  int r_max = kDefaultRMax;
  PwfKind kind = PwfKind::prelec;
  std::uint64_t seed = 7;

  double dirichlet_concentration = 0.5;
  double alpha_lo = 1.5, alpha_hi = 2.5;
  double beta_ratio_lo = 1.5, beta_ratio_hi = 2.5;  // beta = alpha * ratio
  double ref_lo = 2.5, ref_hi = 3.5;
  double delta_lo = 0.4, delta_hi = 0.9;
  double gamma_lo = 0.3, gamma_hi = 2.0;
  double noise_mean = 1.0, noise_stddev = 1.0;
};

struct PlantedModel {
  SplitDataset data;
  WeuParameters params;      // planted scales / weighting / reference points, K = 0
  HistogramStore true_probs; // generating rating distributions
  PwfKind kind = PwfKind::prelec;
};

inline PlantedModel make_planted(const PlantedConfig& cfg) {
  auto rng = make_stream(cfg.seed, "planted");
  const auto R = static_cast<std::size_t>(cfg.r_max);

  std::gamma_distribution<double> gamma(cfg.dirichlet_concentration, 1.0);
  std::vector<double> probs(cfg.items * R);
  for (std::size_t i = 0; i < cfg.items; ++i) {
    double sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) sum += (probs[i * R + r] = gamma(rng));
    for (std::size_t r = 0; r < R; ++r) probs[i * R + r] /= sum;
  }
  std::vector<double> cdf_table = probs;
  auto truth = HistogramStore::from_probabilities(std::move(probs), cfg.r_max);

  WeuParameters params(cfg.users, cfg.items, 0, cfg.r_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  for (std::size_t j = 0; j < cfg.users; ++j) {
    const auto u = static_cast<UserIndex>(j);
    const double alpha = draw(cfg.alpha_lo, cfg.alpha_hi);
    params[params.user_bias_index(Scale::alpha, u)] = alpha;
    params[params.user_bias_index(Scale::beta, u)] =
        alpha * draw(cfg.beta_ratio_lo, cfg.beta_ratio_hi);
    params[params.pwf_user_index(PwfParam::delta, u)] = draw(cfg.delta_lo, cfg.delta_hi);
    params[params.pwf_user_index(PwfParam::gamma, u)] = draw(cfg.gamma_lo, cfg.gamma_hi);
    params[params.pwf_user_index(PwfParam::theta, u)] = 1.0;
    params[params.ref_index(u)] = draw(cfg.ref_lo, cfg.ref_hi);
  }

  std::vector<InteractionRecord> records;
  records.reserve(cfg.users * cfg.interactions_per_user);
  std::normal_distribution<double> noise(cfg.noise_mean, cfg.noise_stddev);
  std::vector<double> base(cfg.items), logits(cfg.items);
  std::vector<char> taken(cfg.items);
  const auto picks = std::min(cfg.interactions_per_user, cfg.items);
  for (std::size_t j = 0; j < cfg.users; ++j) {
    const auto u = static_cast<UserIndex>(j);
    for (std::size_t i = 0; i < cfg.items; ++i)
      base[i] = weu_score(params, truth, u, static_cast<ItemIndex>(i), cfg.kind);
    std::fill(taken.begin(), taken.end(), 0);
    for (std::size_t t = 0; t < picks; ++t) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cfg.items; ++i) {
        logits[i] = taken[i] ? -std::numeric_limits<double>::infinity() : base[i] + noise(rng);
        mx = std::max(mx, logits[i]);
      }
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - mx));
      double target = unit(rng) * z;
      std::size_t pick = 0;
      for (std::size_t i = 0; i < cfg.items; ++i) {
        if (taken[i]) continue;
        pick = i;
        target -= logits[i];
        if (target <= 0.0) break;
      }
      taken[pick] = 1;
      double c = unit(rng);
      int rating = cfg.r_max;
      for (std::size_t r = 0; r < R; ++r) {
        c -= cdf_table[pick * R + r];
        if (c <= 0.0) {
          rating = static_cast<int>(r) + 1;
          break;
        }
      }
      records.push_back({u, static_cast<ItemIndex>(pick), rating, static_cast<std::int64_t>(t)});
    }
  }

  PlantedModel out;
  out.data = chronological_split(records, {0.6, 0.2, 0.2}, cfg.users, cfg.items, cfg.r_max);
  for (std::size_t j = 0; j < cfg.users; ++j) out.data.users.intern("u" + std::to_string(j));
  for (std::size_t i = 0; i < cfg.items; ++i) out.data.items.intern("i" + std::to_string(i));
  out.params = std::move(params);
  out.true_probs = std::move(truth);
  out.kind = cfg.kind;
  return out;
}

}  // namespace weu
