#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"
#include "weu/evaluation.hpp"
#include "weu/optimizer.hpp"
#include "weu/rng.hpp"
#include "weu/training.hpp"

namespace weu {

enum class MfKind { cf_lfm, bpr };

inline constexpr std::string_view to_string(MfKind k) {
  return k == MfKind::cf_lfm ? "cf-lfm" : "bpr";
}

// Biased matrix factorization: a + b_i + l_j + <item_i, user_j>.
// Flat layout: global | item bias [I] | user bias [U] | item factors [I*K] | user factors [U*K]
class MfParameters {
 public:
  MfParameters() = default;
  MfParameters(std::size_t user_count, std::size_t item_count, std::size_t latent_dim)
      : users_(user_count), items_(item_count), k_(latent_dim) {
    values_.assign(1 + items_ + users_ + (items_ + users_) * k_, 0.0);
  }

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t latent_dim() const noexcept { return k_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  static constexpr std::size_t global_index() { return 0; }
  std::size_t item_bias_index(ItemIndex i) const { return 1 + i; }
  std::size_t user_bias_index(UserIndex j) const { return 1 + items_ + j; }
  std::size_t item_factor_index(ItemIndex i) const {
    return 1 + items_ + users_ + static_cast<std::size_t>(i) * k_;
  }
  std::size_t user_factor_index(UserIndex j) const {
    return 1 + items_ + users_ + items_ * k_ + static_cast<std::size_t>(j) * k_;
  }
  std::span<const double> item_factors(ItemIndex i) const {
    return {values_.data() + item_factor_index(i), k_};
  }
  std::span<const double> user_factors(UserIndex j) const {
    return {values_.data() + user_factor_index(j), k_};
  }

 private:
  std::size_t users_ = 0, items_ = 0, k_ = 0;
  std::vector<double> values_;
};

inline double mf_predict(const MfParameters& p, ItemIndex item, UserIndex user) {
  double s = p[0] + p[p.item_bias_index(item)] + p[p.user_bias_index(user)];
  const auto fi = p.item_factor_index(item), fu = p.user_factor_index(user);
  for (std::size_t k = 0; k < p.latent_dim(); ++k) s += p[fi + k] * p[fu + k];
  return s;
}

inline auto mf_scorer(const MfParameters& p) {
  return [&p](UserIndex u, std::span<const ItemIndex> items, std::span<double> out) {
    for (std::size_t k = 0; k < items.size(); ++k) out[k] = mf_predict(p, items[k], u);
  };
}

inline MfParameters initialize_mf(std::size_t users, std::size_t items, std::size_t latent_dim,
                                  std::uint64_t seed, double global = 0.0,
                                  double factor_scale = 0.1) {
  MfParameters p(users, items, latent_dim);
  p[0] = global;
  if (latent_dim > 0) {
    auto rng = make_stream(seed, "init-mf");
    const double bound = factor_scale / std::sqrt(static_cast<double>(latent_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = p.item_factor_index(0); i < p.size(); ++i) p[i] = u(rng);
  }
  return p;
}

// -(r - prediction)^2 - lambda * ||touched||^2. The global bias is the
// rating-scale offset and is left unregularized.
inline double mf_rating_objective(const MfParameters& p, const InteractionRecord& rec,
                                  double lambda, SparseGradient* grad = nullptr) {
  const double err = static_cast<double>(rec.rating) - mf_predict(p, rec.item, rec.user);
  const auto bi = p.item_bias_index(rec.item), bu = p.user_bias_index(rec.user);
  const auto fi = p.item_factor_index(rec.item), fu = p.user_factor_index(rec.user);
  double penalty = p[bi] * p[bi] + p[bu] * p[bu];
  for (std::size_t k = 0; k < p.latent_dim(); ++k)
    penalty += p[fi + k] * p[fi + k] + p[fu + k] * p[fu + k];
  if (grad) {
    const double g = 2.0 * err;
    grad->add(0, g);
    grad->add(bi, g - 2.0 * lambda * p[bi]);
    grad->add(bu, g - 2.0 * lambda * p[bu]);
    for (std::size_t k = 0; k < p.latent_dim(); ++k) {
      grad->add(fi + k, g * p[fu + k] - 2.0 * lambda * p[fi + k]);
      grad->add(fu + k, g * p[fi + k] - 2.0 * lambda * p[fu + k]);
    }
  }
  return -err * err - lambda * penalty;
}

inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// ln sigma(x_ui - x_uj) - lambda * ||touched||^2 with x = b_i + <item_i, user_u>.
// User and global biases cancel in the difference and are not touched.
inline double bpr_triple_objective(const MfParameters& p, UserIndex user, ItemIndex pos,
                                   ItemIndex neg, double lambda, SparseGradient* grad = nullptr) {
  const double x = mf_predict(p, pos, user) - mf_predict(p, neg, user);
  const auto bi = p.item_bias_index(pos), bj = p.item_bias_index(neg);
  const auto fi = p.item_factor_index(pos), fj = p.item_factor_index(neg);
  const auto fu = p.user_factor_index(user);
  double penalty = p[bi] * p[bi] + p[bj] * p[bj];
  for (std::size_t k = 0; k < p.latent_dim(); ++k)
    penalty += p[fi + k] * p[fi + k] + p[fj + k] * p[fj + k] + p[fu + k] * p[fu + k];
  if (grad) {
    const double g = 1.0 / (1.0 + std::exp(x));  // d/dx ln sigma(x) = sigma(-x)
    grad->add(bi, g - 2.0 * lambda * p[bi]);
    grad->add(bj, -g - 2.0 * lambda * p[bj]);
    for (std::size_t k = 0; k < p.latent_dim(); ++k) {
      grad->add(fi + k, g * p[fu + k] - 2.0 * lambda * p[fi + k]);
      grad->add(fj + k, -g * p[fu + k] - 2.0 * lambda * p[fj + k]);
      grad->add(fu + k, g * (p[fi + k] - p[fj + k]) - 2.0 * lambda * p[fu + k]);
    }
  }
  return log_sigmoid(x) - lambda * penalty;
}

inline double rmse(const MfParameters& p, std::span<const InteractionRecord> recs) {
  if (recs.empty()) return 0.0;
  double se = 0.0;
  for (const auto& r : recs) {
    const double e = r.rating - mf_predict(p, r.item, r.user);
    se += e * e;
  }
  return std::sqrt(se / static_cast<double>(recs.size()));
}

// Squared-error SGD over training ratings; keeps the epoch with the lowest
// validation RMSE (training RMSE when there is no validation data).
inline FitResult<MfParameters> mf_fit(const SplitDataset& data, const TrainConfig& config,
                                      const EvalConfig& eval_config) {
  config.validate();
  double mean = 0.0;
  for (const auto& r : data.train) mean += r.rating;
  if (!data.train.empty()) mean /= static_cast<double>(data.train.size());
  auto params = initialize_mf(data.user_count, data.item_count, config.latent_dim, config.seed,
                              mean);
  FitResult<MfParameters> result{params, {}, 0, {}};
  MomentumAscent opt{config.learning_rate, config.momentum, {}};
  SparseGradient grad(params.size());
  auto shuffle_rng = make_stream(config.seed, "shuffle");
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto val_cfg = validation_config(eval_config);
  const auto& select_on = data.validation.empty() ? data.train : data.validation;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (auto idx : order) {
      grad.clear();
      total += mf_rating_objective(params, data.train[idx], config.lambda, &grad);
      opt.step(params.values(), grad);
    }
    const double objective = order.empty() ? 0.0 : total / static_cast<double>(order.size());
    const auto report = evaluate(mf_scorer(params), data, val_cfg);
    result.trace.push_back({e, objective, validation_ndcg10(report)});
    const double err = rmse(params, select_on);
    if (err <= best) {
      best = err;
      result.params = params;
      result.best_epoch = e;
    }
  }
  result.training_state = {{"epoch", config.epochs},
                           {"seed", config.seed},
                           {"velocity", opt.velocity}};
  return result;
}

// Pairwise BPR over (user, purchased, unpurchased) triples with one uniform
// negative per training interaction per epoch; keeps the epoch with the best
// validation NDCG@10.
inline FitResult<MfParameters> bpr_fit(const SplitDataset& data, const TrainConfig& config,
                                       const EvalConfig& eval_config) {
  config.validate();
  auto params = initialize_mf(data.user_count, data.item_count, config.latent_dim, config.seed);
  FitResult<MfParameters> result{params, {}, 0, {}};
  MomentumAscent opt{config.learning_rate, config.momentum, {}};
  SparseGradient grad(params.size());
  auto shuffle_rng = make_stream(config.seed, "shuffle");
  auto neg_rng = make_stream(config.seed, "negatives");
  std::uniform_int_distribution<ItemIndex> any_item(
      0, static_cast<ItemIndex>(std::max<std::size_t>(data.item_count, 1) - 1));

  std::vector<std::vector<ItemIndex>> purchased(data.user_count);
  for (const auto& r : data.train) purchased[r.user].push_back(r.item);
  for (auto& v : purchased) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto val_cfg = validation_config(eval_config);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    std::size_t n = 0;
    for (auto idx : order) {
      const auto& rec = data.train[idx];
      const auto& own = purchased[rec.user];
      if (own.size() >= data.item_count) continue;
      ItemIndex neg;
      do neg = any_item(neg_rng);
      while (std::binary_search(own.begin(), own.end(), neg));
      grad.clear();
      total += bpr_triple_objective(params, rec.user, rec.item, neg, config.lambda, &grad);
      opt.step(params.values(), grad);
      ++n;
    }
    const auto report = evaluate(mf_scorer(params), data, val_cfg);
    const double ndcg = validation_ndcg10(report);
    result.trace.push_back({e, n ? total / static_cast<double>(n) : 0.0, ndcg});
    if (ndcg >= best) {
      best = ndcg;
      result.params = params;
      result.best_epoch = e;
    }
  }
  result.training_state = {{"epoch", config.epochs},
                           {"seed", config.seed},
                           {"velocity", opt.velocity}};
  return result;
}

inline nlohmann::json to_json(const MfParameters& p, MfKind kind) {
  const auto& v = p.values();
  auto slice = [&](std::size_t from, std::size_t n) { return detail::slice(v, from, n); };
  const auto U = p.user_count(), I = p.item_count(), K = p.latent_dim();
  return {{"model_type", std::string(to_string(kind))},
          {"user_count", U},
          {"item_count", I},
          {"latent_dim", K},
          {"global", v[0]},
          {"item_bias", slice(p.item_bias_index(0), I)},
          {"user_bias", slice(p.user_bias_index(0), U)},
          {"item_factors", slice(p.item_factor_index(0), I * K)},
          {"user_factors", slice(p.user_factor_index(0), U * K)}};
}

inline MfParameters mf_parameters_from_json(const nlohmann::json& j) {
  MfParameters p(j.at("user_count").get<std::size_t>(), j.at("item_count").get<std::size_t>(),
                 j.at("latent_dim").get<std::size_t>());
  auto& v = p.values();
  const auto U = p.user_count(), I = p.item_count(), K = p.latent_dim();
  v[0] = j.at("global").get<double>();
  detail::unslice(j.at("item_bias"), v, p.item_bias_index(0), I, "item_bias");
  detail::unslice(j.at("user_bias"), v, p.user_bias_index(0), U, "user_bias");
  detail::unslice(j.at("item_factors"), v, p.item_factor_index(0), I * K, "item_factors");
  detail::unslice(j.at("user_factors"), v, p.user_factor_index(0), U * K, "user_factors");
  return p;
}

}  // namespace weu
