#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "weu/analysis.hpp"
#include "weu/baselines.hpp"
#include "weu/evaluation.hpp"
#include "weu/ingestion.hpp"
#include "weu/model.hpp"
#include "weu/training.hpp"

// Subcommand bodies behind tools/weu. Each takes a plain options struct so the
// pipeline can be driven from tests without going through argv.
namespace weu::cli {

namespace fs = std::filesystem;

inline std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + p.string());
  out << std::setprecision(10);
  return out;
}

inline std::string join_ks(const std::vector<int>& ks) {
  std::string s;
  for (std::size_t n = 0; n < ks.size(); ++n) s += (n ? "," : "") + std::to_string(ks[n]);
  return s;
}

inline void write_run_header(std::ostream& out, const std::string& model, std::uint64_t seed,
                             const std::vector<int>& ks) {
  out << "# model=" << model << " seed=" << seed << " k=" << join_ks(ks) << '\n';
}

// Evaluation worker count: hardware concurrency, capped by WEU_THREADS.
inline std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WEU_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      throw ConfigError(std::string("WEU_THREADS is not an integer: ") + env);
    }
  }
  return n;
}

inline void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
}

// ---------------------------------------------------------------------------

struct IngestOptions {
  fs::path input;
  fs::path output_dir;
  IngestConfig config;
  std::uint64_t seed = 42;
};

inline SplitDataset run_ingest(const IngestOptions& opt) {
  require_exists(opt.input, "input file");
  std::ifstream in(opt.input, std::ios::binary);
  if (!in) throw Error("cannot open input: " + opt.input.string());
  std::vector<RawInteraction> raw;
  try {
    raw = parse_interactions(in, opt.config);
  } catch (const ParseError& e) {
    throw Error(opt.input.string() + ": " + e.what());
  }
  auto ds = build_dataset(raw, opt.config);
  write_split(opt.output_dir, ds);
  auto stats = dataset_stats(ds);
  stats["seed"] = opt.seed;
  stats["min_interactions"] = opt.config.min_interactions;
  auto out = open_output(opt.output_dir / "dataset_stats.json");
  out << stats.dump(2) << '\n';
  return ds;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  fs::path input;  // split directory
  fs::path output_dir;
  std::string model = "prelec+";
  TrainConfig train;
  EvalConfig eval;
};

struct TrainOutcome {
  Model model;
  std::vector<EpochTrace> trace;
  std::size_t best_epoch = 0;
  nlohmann::json state;
};

inline TrainOutcome train_model(const SplitDataset& ds, const TrainOptions& opt) {
  check_model_name(opt.model);
  TrainOutcome out{WeuModel{}, {}, 0, {}};
  if (is_baseline_name(opt.model)) {
    const auto kind = opt.model == "bpr" ? MfKind::bpr : MfKind::cf_lfm;
    auto r = kind == MfKind::bpr ? bpr_fit(ds, opt.train, opt.eval)
                                 : mf_fit(ds, opt.train, opt.eval);
    out.model = MfModel{std::move(r.params), kind};
    out.trace = std::move(r.trace);
    out.best_epoch = r.best_epoch;
    out.state = std::move(r.training_state);
  } else {
    auto cfg = opt.train;
    cfg.kind = parse_pwf_kind(opt.model);
    auto r = fit(ds, cfg, opt.eval);
    out.model = WeuModel{std::move(r.params), cfg.kind};
    out.trace = std::move(r.trace);
    out.best_epoch = r.best_epoch;
    out.state = std::move(r.training_state);
  }
  return out;
}

inline TrainOutcome run_train(const TrainOptions& opt) {
  check_model_name(opt.model);
  require_exists(opt.input, "split directory");
  const auto ds = read_split(opt.input);
  auto cfg = opt;
  cfg.eval.threads = std::max<std::size_t>(cfg.eval.threads, 1);
  auto outcome = train_model(ds, cfg);

  fs::create_directories(opt.output_dir);
  save_model(opt.output_dir / "checkpoint.json", outcome.model);
  {
    auto out = open_output(opt.output_dir / "training_log.csv");
    write_training_log(out, outcome.trace);
  }
  auto state = outcome.state;
  state["model_type"] = model_name(outcome.model);
  state["best_epoch"] = outcome.best_epoch;
  state["config"] = {{"epochs", opt.train.epochs},
                     {"learning_rate", opt.train.learning_rate},
                     {"momentum", opt.train.momentum},
                     {"lambda", opt.train.lambda},
                     {"latent_dim", opt.train.latent_dim},
                     {"candidates", opt.train.candidate_set_size},
                     {"noise", opt.train.noise_enabled}};
  auto out = open_output(opt.output_dir / "training_state.json");
  out << state.dump(2) << '\n';
  return outcome;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
  fs::path input;
  fs::path checkpoint;
  fs::path output_dir;
  EvalConfig eval;
  bool per_user = false;
};

inline EvaluationReport run_evaluate(const EvaluateOptions& opt) {
  require_exists(opt.input, "split directory");
  require_exists(opt.checkpoint, "checkpoint");
  const auto ds = read_split(opt.input);
  const auto model = load_model(opt.checkpoint);
  const ModelScorer scorer(model, ds);
  const auto report = evaluate(scorer, ds, opt.eval);
  const auto name = model_name(model);
  {
    auto out = open_output(opt.output_dir / "metrics.csv");
    write_run_header(out, name, opt.eval.seed, opt.eval.ks);
    write_metrics_csv(out, name, report.mean);
  }
  if (opt.per_user) {
    auto out = open_output(opt.output_dir / "per_user_metrics.csv");
    write_run_header(out, name, opt.eval.seed, opt.eval.ks);
    write_per_user_csv(out, ds, report);
  }
  return report;
}

// ---------------------------------------------------------------------------

struct PredictOptions {
  fs::path input;
  fs::path checkpoint;
  fs::path output_dir;
  std::size_t top_k = 10;
  std::uint64_t seed = 42;
};

// Top-k over the catalog minus each user's training items, for every user.
inline void run_predict(const PredictOptions& opt) {
  require_exists(opt.input, "split directory");
  require_exists(opt.checkpoint, "checkpoint");
  const auto ds = read_split(opt.input);
  const auto model = load_model(opt.checkpoint);
  const ModelScorer scorer(model, ds);
  const auto name = model_name(model);

  std::vector<std::vector<ItemIndex>> seen(ds.user_count);
  for (const auto& r : ds.train) seen[r.user].push_back(r.item);
  auto out = open_output(opt.output_dir / "predictions.csv");
  write_run_header(out, name, opt.seed, {static_cast<int>(opt.top_k)});
  out << "user_raw_id,item_raw_id,rank,score\n";
  std::vector<ItemIndex> candidates;
  std::vector<double> scores;
  for (std::size_t j = 0; j < ds.user_count; ++j) {
    auto& own = seen[j];
    std::sort(own.begin(), own.end());
    candidates.clear();
    for (std::size_t i = 0; i < ds.item_count; ++i)
      if (!std::binary_search(own.begin(), own.end(), static_cast<ItemIndex>(i)))
        candidates.push_back(static_cast<ItemIndex>(i));
    scores.assign(candidates.size(), 0.0);
    scorer(static_cast<UserIndex>(j), candidates, scores);
    const auto ranked = rank_scored(candidates, scores);
    const auto n = std::min(opt.top_k, ranked.size());
    for (std::size_t k = 0; k < n; ++k)
      out << ds.users.raw(static_cast<UserIndex>(j)) << ',' << ds.items.raw(ranked[k].item) << ','
          << k + 1 << ',' << ranked[k].score << '\n';
  }
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  fs::path input;
  fs::path checkpoint;
  fs::path output_dir;
  double grid_step = 0.01;
  std::size_t bins = 50;
  std::uint64_t seed = 42;
};

inline ScaleSummaryStats run_analyze(const AnalyzeOptions& opt) {
  require_exists(opt.input, "split directory");
  require_exists(opt.checkpoint, "checkpoint");
  const auto ds = read_split(opt.input);
  const auto model = load_model(opt.checkpoint);
  check_shape(model, ds);
  const auto* weu = std::get_if<WeuModel>(&model);
  if (!weu)
    throw ConfigError("analyze needs a WEU checkpoint, got '" + model_name(model) + "'");
  const auto name = model_name(model);
  const auto rows = user_scale_summaries(weu->params, ds);
  const auto bins = scale_histogram(rows, opt.bins);
  const auto curve = export_mean_pwf_curve(weu->params, ds, weu->kind, opt.grid_step);
  {
    auto out = open_output(opt.output_dir / "user_scales.csv");
    write_run_header(out, name, opt.seed, {});
    write_user_scales_csv(out, ds, rows);
  }
  {
    auto out = open_output(opt.output_dir / "scale_histogram.csv");
    write_run_header(out, name, opt.seed, {});
    write_scale_histogram_csv(out, bins);
  }
  auto out = open_output(opt.output_dir / "pwf_curve.csv");
  write_run_header(out, name, opt.seed, {});
  write_pwf_curve_csv(out, curve);
  return summarize_scales(rows);
}

// ---------------------------------------------------------------------------

struct ExportPwfOptions {
  fs::path output;
  std::string model = "prelec";
  PwfParams params;
  std::optional<fs::path> checkpoint;  // mean parameters over test users instead
  std::optional<fs::path> input;
  double grid_step = 0.01;
};

inline void run_export_pwf(const ExportPwfOptions& opt) {
  auto kind = parse_pwf_kind(opt.model);
  auto params = opt.params;
  if (opt.checkpoint) {
    if (!opt.input) throw ConfigError("--checkpoint needs --input for the test users");
    const auto ds = read_split(*opt.input);
    const auto model = load_model(*opt.checkpoint);
    check_shape(model, ds);
    const auto* weu = std::get_if<WeuModel>(&model);
    if (!weu) throw ConfigError("export-pwf needs a WEU checkpoint");
    kind = weu->kind;
    params = mean_pwf_params(weu->params, test_users(ds), kind);
  }
  auto out = open_output(opt.output);
  write_pwf_csv(out, kind, params, opt.grid_step);
}

}  // namespace weu::cli
