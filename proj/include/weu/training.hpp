#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "weu/data_model.hpp"
#include "weu/errors.hpp"
#include "weu/evaluation.hpp"
#include "weu/optimizer.hpp"
#include "weu/probability.hpp"
#include "weu/rng.hpp"
#include "weu/scorer.hpp"
#include "weu/utility.hpp"

namespace weu {

struct TrainConfig {
  std::size_t candidate_set_size = 11;  // positive + 10 sampled alternatives
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  double momentum = 0.0;
  double lambda = 1e-3;
  std::size_t latent_dim = 64;
  std::uint64_t seed = 42;
  bool noise_enabled = true;
  double noise_mean = 1.0;
  double noise_stddev = 1.0;
  PwfKind kind = PwfKind::prelec_plus;
  double projection_epsilon = kProjectionEpsilon;

  void validate() const {
    if (candidate_set_size < 2) throw ConfigError("candidate set size must be >= 2");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (!(projection_epsilon > 0.0 && projection_epsilon < 0.5))
      throw ConfigError("projection epsilon must be in (0, 0.5)");
  }
};

// The positive item followed by n-1 distinct items drawn uniformly without
// replacement from the rest of the catalog.
inline std::vector<ItemIndex> sample_candidates(Engine& rng, ItemIndex positive,
                                                std::size_t item_count, std::size_t n) {
  if (n == 0 || n > item_count) throw ConfigError("candidate set larger than catalog");
  if (positive >= item_count) throw ConfigError("positive item out of range");
  std::vector<ItemIndex> out{positive};
  out.reserve(n);
  const std::size_t others = item_count - 1;
  const std::size_t m = n - 1;
  // Floyd's algorithm over [0, others); position t maps to t or t+1 to skip
  // the positive.
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = others - m; j < others; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    auto t = pick(rng);
    if (!chosen.insert(t).second) {
      chosen.insert(j);
      t = j;
    }
    out.push_back(static_cast<ItemIndex>(t >= positive ? t + 1 : t));
  }
  return out;
}

// log softmax(scores + noise)[positive], stabilized by max subtraction.
inline double choice_log_prob(std::span<const double> scores, std::size_t positive,
                              std::span<const double> noise = {}) {
  if (scores.empty() || positive >= scores.size()) throw ConfigError("bad choice set");
  if (!noise.empty() && noise.size() != scores.size())
    throw ConfigError("noise length differs from score length");
  auto logit = [&](std::size_t k) { return scores[k] + (noise.empty() ? 0.0 : noise[k]); };
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scores.size(); ++k) mx = std::max(mx, logit(k));
  double sum = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) sum += std::exp(logit(k) - mx);
  return logit(positive) - mx - std::log(sum);
}

struct ChoiceExample {
  UserIndex user = 0;
  std::span<const ItemIndex> candidates;
  std::size_t positive = 0;
  std::span<const double> noise;  // empty: no noise
};

// log P(positive | candidates) - lambda * sum of squares of the touched
// regularized parameters. When grad is given, its gradient is accumulated there.
inline double choice_objective(const WeuParameters& params, const HistogramStore& hists,
                               PwfKind kind, double lambda, const ChoiceExample& ex,
                               SparseGradient* grad = nullptr) {
  const std::size_t n = ex.candidates.size();
  std::vector<double> scores(n);
  for (std::size_t k = 0; k < n; ++k)
    scores[k] = weu_score(params, hists, ex.user, ex.candidates[k], kind);
  const double log_p = choice_log_prob(scores, ex.positive, ex.noise);

  // softmax of the noisy logits
  std::vector<double> prob(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    prob[k] = scores[k] + (ex.noise.empty() ? 0.0 : ex.noise[k]);
    mx = std::max(mx, prob[k]);
  }
  double z = 0.0;
  for (auto& v : prob) z += (v = std::exp(v - mx));
  for (auto& v : prob) v /= z;

  SparseGradient local;
  SparseGradient* g = grad;
  if (!g) {
    local.resize(params.size());
    g = &local;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double upstream = (k == ex.positive ? 1.0 : 0.0) - prob[k];
    weu_score_grad(params, hists, ex.user, ex.candidates[k], kind, upstream, *g);
  }
  double penalty = 0.0;
  const auto touched = std::vector<std::size_t>(g->touched().begin(), g->touched().end());
  for (auto idx : touched) {
    if (!params.regularized(idx)) continue;
    penalty += params[idx] * params[idx];
    g->add(idx, -2.0 * lambda * params[idx]);
  }
  return log_p - lambda * penalty;
}

struct EpochTrace {
  std::size_t epoch = 0;
  double objective = 0.0;
  double val_ndcg10 = 0.0;
};

inline void write_training_log(std::ostream& out, std::span<const EpochTrace> trace) {
  out << "epoch,objective,val_ndcg10\n";
  for (const auto& t : trace) out << t.epoch << ',' << t.objective << ',' << t.val_ndcg10 << '\n';
}

namespace detail {

inline std::string engine_state(const Engine& e) {
  std::ostringstream s;
  s << e;
  return s.str();
}

inline void restore_engine(Engine& e, const std::string& state) {
  std::istringstream s(state);
  s >> e;
  if (!s) throw ConfigError("corrupt generator state in training-state document");
}

}  // namespace detail

// Sequential SGD-with-momentum over training (user, item) pairs. Single writer:
// all mutation of the parameters happens in run_epoch().
class WeuTrainer {
 public:
  WeuTrainer(const SplitDataset& data, TrainConfig config,
             std::optional<WeuParameters> initial = std::nullopt)
      : data_(&data),
        config_(config),
        hists_(build_histograms(data.train, data.item_count, data.r_max)),
        shuffle_rng_(make_stream(config.seed, "shuffle")),
        sample_rng_(make_stream(config.seed, "negatives")),
        noise_rng_(make_stream(config.seed, "noise")) {
    config_.validate();
    if (config_.candidate_set_size > data.item_count)
      throw ConfigError("candidate set size " + std::to_string(config_.candidate_set_size) +
                        " exceeds catalog size " + std::to_string(data.item_count));
    if (initial) {
      params_ = std::move(*initial);
      if (params_.user_count() != data.user_count || params_.item_count() != data.item_count ||
          params_.r_max() != data.r_max)
        throw ShapeMismatchError("parameters are " + std::to_string(params_.user_count()) +
                                 " users x " + std::to_string(params_.item_count()) +
                                 " items, dataset is " + std::to_string(data.user_count) +
                                 " users x " + std::to_string(data.item_count) + " items");
    } else {
      params_ = initialize_weu(data.user_count, data.item_count, config_.latent_dim, data.r_max,
                               data.train, config_.seed);
    }
    optimizer_.learning_rate = config_.learning_rate;
    optimizer_.momentum = config_.momentum;
    optimizer_.velocity.assign(params_.size(), 0.0);
    grad_.resize(params_.size());
    order_.resize(data.train.size());
  }

  const WeuParameters& params() const noexcept { return params_; }
  const HistogramStore& histograms() const noexcept { return hists_; }
  const TrainConfig& config() const noexcept { return config_; }
  std::size_t epochs_done() const noexcept { return epochs_done_; }

  // One pass over the shuffled training pairs; returns the mean per-pair objective.
  double run_epoch() {
    const auto& train = data_->train;
    // Restart from the identity so the visiting order depends only on the generator state.
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
    std::normal_distribution<double> noise_dist(config_.noise_mean, config_.noise_stddev);
    std::vector<double> noise;
    double total = 0.0;
    for (auto idx : order_) {
      const auto& rec = train[idx];
      auto cands = sample_candidates(sample_rng_, rec.item, data_->item_count,
                                     config_.candidate_set_size);
      noise.clear();
      if (config_.noise_enabled)
        for (std::size_t k = 0; k < cands.size(); ++k) noise.push_back(noise_dist(noise_rng_));
      grad_.clear();
      total += choice_objective(params_, hists_, config_.kind, config_.lambda,
                                {rec.user, cands, 0, noise}, &grad_);
      optimizer_.step(params_.values(), grad_);
      project_user(params_, rec.user, config_.kind, config_.projection_epsilon);
    }
    project_all(params_, config_.kind, config_.projection_epsilon);
    ++epochs_done_;
    return train.empty() ? 0.0 : total / static_cast<double>(train.size());
  }

  // Sidecar document: epoch counter, generator states and momentum buffer.
  nlohmann::json state_json() const {
    return {{"epoch", epochs_done_},
            {"seed", config_.seed},
            {"rng_shuffle", detail::engine_state(shuffle_rng_)},
            {"rng_negatives", detail::engine_state(sample_rng_)},
            {"rng_noise", detail::engine_state(noise_rng_)},
            {"velocity", optimizer_.velocity}};
  }

  void restore_state(const nlohmann::json& j) {
    auto v = j.at("velocity").get<std::vector<double>>();
    if (v.size() != params_.size())
      throw ShapeMismatchError("momentum buffer has " + std::to_string(v.size()) +
                               " entries, parameters have " + std::to_string(params_.size()));
    optimizer_.velocity = std::move(v);
    epochs_done_ = j.at("epoch").get<std::size_t>();
    detail::restore_engine(shuffle_rng_, j.at("rng_shuffle").get<std::string>());
    detail::restore_engine(sample_rng_, j.at("rng_negatives").get<std::string>());
    detail::restore_engine(noise_rng_, j.at("rng_noise").get<std::string>());
  }

 private:
  const SplitDataset* data_;
  TrainConfig config_;
  HistogramStore hists_;
  WeuParameters params_;
  MomentumAscent optimizer_;
  SparseGradient grad_;
  std::vector<std::size_t> order_;
  Engine shuffle_rng_, sample_rng_, noise_rng_;
  std::size_t epochs_done_ = 0;
};

template <class Params>
struct FitResult {
  Params params;
  std::vector<EpochTrace> trace;
  std::size_t best_epoch = 0;  // 0: initialization
  nlohmann::json training_state;
};

inline auto weu_scorer(const WeuParameters& params, const HistogramStore& hists, PwfKind kind) {
  return [&params, &hists, kind](UserIndex u, std::span<const ItemIndex> items,
                                 std::span<double> out) {
    weu_scores(params, hists, u, items, kind, out);
  };
}

inline double validation_ndcg10(const EvaluationReport& r) {
  return r.per_user.empty() ? 0.0 : r.mean.at_k(10).ndcg;
}

inline EvalConfig validation_config(EvalConfig cfg) {
  cfg.split = Split::validation;
  cfg.ks = {10};
  return cfg;
}

// Trains for config.epochs and returns the parameters with the best
// validation NDCG@10 (later epochs win ties).
inline FitResult<WeuParameters> fit(const SplitDataset& data, const TrainConfig& config,
                                    const EvalConfig& eval_config,
                                    std::optional<WeuParameters> initial = std::nullopt) {
  WeuTrainer trainer(data, config, std::move(initial));
  FitResult<WeuParameters> result{trainer.params(), {}, 0, {}};
  const auto val_cfg = validation_config(eval_config);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const double objective = trainer.run_epoch();
    const auto report =
        evaluate(weu_scorer(trainer.params(), trainer.histograms(), config.kind), data, val_cfg);
    const double ndcg = validation_ndcg10(report);
    result.trace.push_back({e, objective, ndcg});
    if (ndcg >= best) {
      best = ndcg;
      result.params = trainer.params();
      result.best_epoch = e;
    }
  }
  result.training_state = trainer.state_json();
  return result;
}

}  // namespace weu
