#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"
#include "weu/probability.hpp"
#include "weu/rng.hpp"

namespace weu {

inline double outcome(int rating, double ref_point) {
  return static_cast<double>(rating) - ref_point;
}

// Gain/loss asymmetric tanh utility; o = 0 belongs to the gain branch.
inline double utility(double o, double alpha, double beta) {
  return (o >= 0.0 ? alpha : beta) * std::tanh(o);
}

enum class Scale { alpha, beta };
enum class PwfParam { delta, gamma, theta };

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
};

// All learnable WEU quantities in one flat vector so that optimizer state,
// sparse gradients and finite-difference checks address parameters by index.
//
// Layout:
//   per scale (alpha, beta): global | item bias [I] | user bias [U] |
//                            item factors [I*K] | user factors [U*K]
//   PWF globals: delta, gamma, theta
//   PWF user biases: delta [U] | gamma [U] | theta [U]
//   reference points [U]
class WeuParameters {
 public:
  WeuParameters() = default;

  WeuParameters(std::size_t user_count, std::size_t item_count, std::size_t latent_dim,
                int r_max = kDefaultRMax)
      : users_(user_count), items_(item_count), k_(latent_dim), r_max_(r_max) {
    scale_block_ = 1 + items_ + users_ + items_ * k_ + users_ * k_;
    pwf_globals_ = 2 * scale_block_;
    pwf_users_ = pwf_globals_ + 3;
    refs_ = pwf_users_ + 3 * users_;
    values_.assign(refs_ + users_, 0.0);
  }

  std::size_t user_count() const noexcept { return users_; }
  std::size_t item_count() const noexcept { return items_; }
  std::size_t latent_dim() const noexcept { return k_; }
  int r_max() const noexcept { return r_max_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t global_index(Scale s) const { return base(s); }
  std::size_t item_bias_index(Scale s, ItemIndex i) const { return base(s) + 1 + i; }
  std::size_t user_bias_index(Scale s, UserIndex j) const { return base(s) + 1 + items_ + j; }
  std::size_t item_factor_index(Scale s, ItemIndex i) const {
    return base(s) + 1 + items_ + users_ + static_cast<std::size_t>(i) * k_;
  }
  std::size_t user_factor_index(Scale s, UserIndex j) const {
    return base(s) + 1 + items_ + users_ + items_ * k_ + static_cast<std::size_t>(j) * k_;
  }
  std::size_t pwf_global_index(PwfParam p) const {
    return pwf_globals_ + static_cast<std::size_t>(p);
  }
  std::size_t pwf_user_index(PwfParam p, UserIndex j) const {
    return pwf_users_ + static_cast<std::size_t>(p) * users_ + j;
  }
  std::size_t ref_index(UserIndex j) const { return refs_ + j; }

  std::span<const double> item_factors(Scale s, ItemIndex i) const {
    return {values_.data() + item_factor_index(s, i), k_};
  }
  std::span<const double> user_factors(Scale s, UserIndex j) const {
    return {values_.data() + user_factor_index(s, j), k_};
  }
  double ref_point(UserIndex j) const { return values_[ref_index(j)]; }

  // L2 applies to the utility-scale components and the per-user PWF offsets.
  // PWF globals and reference points are not shrunk toward zero, which lies
  // outside (or on the edge of) their feasible range.
  bool regularized(std::size_t idx) const {
    return idx < pwf_globals_ || (idx >= pwf_users_ && idx < refs_);
  }

  bool same_shape(const WeuParameters& o) const {
    return users_ == o.users_ && items_ == o.items_ && k_ == o.k_ && r_max_ == o.r_max_;
  }

 private:
  std::size_t base(Scale s) const { return s == Scale::alpha ? 0 : scale_block_; }

  std::size_t users_ = 0, items_ = 0, k_ = 0;
  int r_max_ = kDefaultRMax;
  std::size_t scale_block_ = 0, pwf_globals_ = 0, pwf_users_ = 0, refs_ = 0;
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double materialize_scale(const WeuParameters& p, Scale s, ItemIndex i, UserIndex j) {
  return p[p.global_index(s)] + p[p.item_bias_index(s, i)] + p[p.user_bias_index(s, j)] +
         dot(p.item_factors(s, i), p.user_factors(s, j));
}

inline AlphaBeta materialize_alpha_beta(const WeuParameters& p, ItemIndex i, UserIndex j) {
  return {materialize_scale(p, Scale::alpha, i, j), materialize_scale(p, Scale::beta, i, j)};
}

inline double materialize_pwf(const WeuParameters& p, PwfParam q, UserIndex j) {
  return p[p.pwf_global_index(q)] + p[p.pwf_user_index(q, j)];
}

inline constexpr double kProjectionEpsilon = 1e-3;

// Users untouched since the last full projection can sit slightly outside the
// feasible set after a global PWF bias moved; the clamp keeps their weights
// well defined until the next projection.
inline PwfParams materialize_pwf_params(const WeuParameters& p, UserIndex j, PwfKind kind) {
  constexpr double eps = kProjectionEpsilon;
  PwfParams out{std::clamp(materialize_pwf(p, PwfParam::delta, j), eps, 1.0 - eps),
                std::max(materialize_pwf(p, PwfParam::gamma, j), eps),
                std::clamp(materialize_pwf(p, PwfParam::theta, j), eps, 1.0)};
  if (!learns_theta(kind)) out.theta = 1.0;
  return out;
}

// Clips user j's PWF offsets and reference point so that the materialized
// values satisfy delta in [eps, 1-eps], gamma >= eps, theta in [eps, 1] and
// ref in [1, r_max]. Stored theta is left alone for kinds that pin it.
inline void project_user(WeuParameters& p, UserIndex j, PwfKind kind,
                         double eps = kProjectionEpsilon) {
  auto clip = [&](PwfParam q, double lo, double hi) {
    const double g = p[p.pwf_global_index(q)];
    const double v = std::clamp(g + p[p.pwf_user_index(q, j)], lo, hi);
    p[p.pwf_user_index(q, j)] = v - g;
  };
  if (has_weighting(kind)) {
    clip(PwfParam::delta, eps, 1.0 - eps);
    clip(PwfParam::gamma, eps, std::numeric_limits<double>::infinity());
    if (learns_theta(kind)) clip(PwfParam::theta, eps, 1.0);
  }
  auto& ref = p[p.ref_index(j)];
  ref = std::clamp(ref, 1.0, static_cast<double>(p.r_max()));
}

inline void project_all(WeuParameters& p, PwfKind kind, double eps = kProjectionEpsilon) {
  for (std::size_t j = 0; j < p.user_count(); ++j)
    project_user(p, static_cast<UserIndex>(j), kind, eps);
}

struct WeuInit {
  double alpha = 1.0;
  double beta = 1.0;
  double delta = 0.5;
  double gamma = 1.0;
  double theta = 1.0;
  // Latent entries are uniform in [-scale/sqrt(K), scale/sqrt(K)].
  double factor_scale = 0.01;
};

// Neutral starting point: symmetric utility, mild weighting, reference point at
// each user's mean training rating (scale midpoint for users with no training data).
inline WeuParameters initialize_weu(std::size_t user_count, std::size_t item_count,
                                    std::size_t latent_dim, int r_max,
                                    std::span<const InteractionRecord> train,
                                    std::uint64_t seed, const WeuInit& init = {}) {
  WeuParameters p(user_count, item_count, latent_dim, r_max);
  p[p.global_index(Scale::alpha)] = init.alpha;
  p[p.global_index(Scale::beta)] = init.beta;
  p[p.pwf_global_index(PwfParam::delta)] = init.delta;
  p[p.pwf_global_index(PwfParam::gamma)] = init.gamma;
  p[p.pwf_global_index(PwfParam::theta)] = init.theta;

  if (latent_dim > 0) {
    auto rng = make_stream(seed, "init");
    const double bound = init.factor_scale / std::sqrt(static_cast<double>(latent_dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Scale s : {Scale::alpha, Scale::beta}) {
      for (std::size_t i = 0; i < item_count; ++i)
        for (std::size_t k = 0; k < latent_dim; ++k)
          p[p.item_factor_index(s, static_cast<ItemIndex>(i)) + k] = u(rng);
      for (std::size_t j = 0; j < user_count; ++j)
        for (std::size_t k = 0; k < latent_dim; ++k)
          p[p.user_factor_index(s, static_cast<UserIndex>(j)) + k] = u(rng);
    }
  }

  std::vector<double> sum(user_count, 0.0);
  std::vector<std::size_t> n(user_count, 0);
  for (const auto& r : train) {
    sum.at(r.user) += r.rating;
    ++n[r.user];
  }
  for (std::size_t j = 0; j < user_count; ++j) {
    const double mean = n[j] ? sum[j] / static_cast<double>(n[j]) : 0.5 * (1.0 + r_max);
    p[p.ref_index(static_cast<UserIndex>(j))] = std::clamp(mean, 1.0, static_cast<double>(r_max));
  }
  return p;
}

// ---------------------------------------------------------------------------
// JSON parameter store. nlohmann::json prints doubles in shortest round-trip
// form, so a dump/parse cycle reproduces every value bit for bit.

namespace detail {

inline nlohmann::json slice(const std::vector<double>& v, std::size_t from, std::size_t n) {
  return nlohmann::json(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from),
                                            v.begin() + static_cast<std::ptrdiff_t>(from + n)));
}

inline void unslice(const nlohmann::json& j, std::vector<double>& v, std::size_t from,
                    std::size_t n, const char* name) {
  auto arr = j.get<std::vector<double>>();
  if (arr.size() != n)
    throw ShapeMismatchError(std::string("parameter array '") + name + "' has " +
                             std::to_string(arr.size()) + " entries, expected " +
                             std::to_string(n));
  std::copy(arr.begin(), arr.end(), v.begin() + static_cast<std::ptrdiff_t>(from));
}

}  // namespace detail

inline nlohmann::json to_json(const WeuParameters& p, PwfKind kind) {
  const auto& v = p.values();
  const auto U = p.user_count(), I = p.item_count(), K = p.latent_dim();
  nlohmann::json j;
  j["model_type"] = std::string(to_string(kind));
  j["kind"] = std::string(to_string(kind));
  j["user_count"] = U;
  j["item_count"] = I;
  j["latent_dim"] = K;
  j["r_max"] = p.r_max();
  for (auto [s, name] : {std::pair{Scale::alpha, "alpha"}, std::pair{Scale::beta, "beta"}}) {
    j[name] = {{"global", v[p.global_index(s)]},
               {"item_bias", detail::slice(v, p.item_bias_index(s, 0), I)},
               {"user_bias", detail::slice(v, p.user_bias_index(s, 0), U)},
               {"item_factors", detail::slice(v, p.item_factor_index(s, 0), I * K)},
               {"user_factors", detail::slice(v, p.user_factor_index(s, 0), U * K)}};
  }
  for (auto [q, name] : {std::pair{PwfParam::delta, "delta"}, std::pair{PwfParam::gamma, "gamma"},
                         std::pair{PwfParam::theta, "theta"}}) {
    j[name] = {{"global", v[p.pwf_global_index(q)]},
               {"user_bias", detail::slice(v, p.pwf_user_index(q, 0), U)}};
  }
  j["ref_points"] = detail::slice(v, p.ref_index(0), U);
  return j;
}

inline WeuParameters weu_parameters_from_json(const nlohmann::json& j) {
  WeuParameters p(j.at("user_count").get<std::size_t>(), j.at("item_count").get<std::size_t>(),
                  j.at("latent_dim").get<std::size_t>(), j.at("r_max").get<int>());
  auto& v = p.values();
  const auto U = p.user_count(), I = p.item_count(), K = p.latent_dim();
  for (auto [s, name] : {std::pair{Scale::alpha, "alpha"}, std::pair{Scale::beta, "beta"}}) {
    const auto& b = j.at(name);
    v[p.global_index(s)] = b.at("global").get<double>();
    detail::unslice(b.at("item_bias"), v, p.item_bias_index(s, 0), I, "item_bias");
    detail::unslice(b.at("user_bias"), v, p.user_bias_index(s, 0), U, "user_bias");
    detail::unslice(b.at("item_factors"), v, p.item_factor_index(s, 0), I * K, "item_factors");
    detail::unslice(b.at("user_factors"), v, p.user_factor_index(s, 0), U * K, "user_factors");
  }
  for (auto [q, name] : {std::pair{PwfParam::delta, "delta"}, std::pair{PwfParam::gamma, "gamma"},
                         std::pair{PwfParam::theta, "theta"}}) {
    const auto& b = j.at(name);
    v[p.pwf_global_index(q)] = b.at("global").get<double>();
    detail::unslice(b.at("user_bias"), v, p.pwf_user_index(q, 0), U, name);
  }
  detail::unslice(j.at("ref_points"), v, p.ref_index(0), U, "ref_points");
  return p;
}

}  // namespace weu
