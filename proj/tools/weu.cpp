// weu: ingest, train, evaluate, predict, analyze and export-pwf subcommands.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weu/commands.hpp"

namespace {

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    int k = 0;
    if (!weu::detail::parse_int(weu::detail::trim(tok), k) || k < 1)
      throw weu::ConfigError("bad --k list '" + s + "'");
    ks.push_back(k);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted expected utility recommender"};
  app.require_subcommand(1);

  std::string input, output_dir, checkpoint, model = "prelec+", ks = "1,5,10";
  std::uint64_t seed = 42;
  weu::IngestConfig ingest_cfg;
  weu::TrainConfig train_cfg;
  weu::EvalConfig eval_cfg;
  bool no_noise = false, per_user = false;
  std::size_t top_k = 10, bins = 50;
  double grid_step = 0.01;
  weu::PwfParams pwf;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Run seed")->capture_default_str(); };
  auto add_eval = [&](CLI::App* c) {
    c->add_option("--eval-negatives", eval_cfg.negatives, "Sampled negatives per user")
        ->capture_default_str();
    c->add_option("--k", ks, "Cutoffs, comma separated")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Filter and split an interaction CSV");
  ingest->add_option("--input", input, "user_id,item_id,rating,timestamp CSV")->required();
  ingest->add_option("--output-dir", output_dir, "Split directory to write")->required();
  ingest->add_option("--min-interactions", ingest_cfg.min_interactions)->capture_default_str();
  ingest->add_option("--r-max", ingest_cfg.r_max, "Highest rating level")->capture_default_str();
  add_seed(ingest);

  auto* train = app.add_subcommand("train", "Fit a model on a split directory");
  train->add_option("--input", input, "Split directory")->required();
  train->add_option("--output-dir", output_dir)->required();
  train->add_option("--model", model, "eu, tf, tf+, prelec, prelec+, cf-lfm, bpr")
      ->capture_default_str();
  train->add_option("--latent-dim", train_cfg.latent_dim)->capture_default_str();
  train->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
  train->add_option("--momentum", train_cfg.momentum)->capture_default_str();
  train->add_option("--lambda", train_cfg.lambda)->capture_default_str();
  train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train->add_option("--candidates", train_cfg.candidate_set_size, "Choice set size N")
      ->capture_default_str();
  train->add_flag("--no-noise", no_noise, "Disable logit noise");
  add_seed(train);
  add_eval(train);

  auto* evaluate = app.add_subcommand("evaluate", "Sampled-negative top-K evaluation");
  evaluate->add_option("--input", input, "Split directory")->required();
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--output-dir", output_dir)->required();
  evaluate->add_flag("--per-user", per_user, "Also write per_user_metrics.csv");
  add_seed(evaluate);
  add_eval(evaluate);

  auto* predict = app.add_subcommand("predict", "Top-k recommendations per user");
  predict->add_option("--input", input, "Split directory")->required();
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--output-dir", output_dir)->required();
  predict->add_option("--top-k", top_k)->capture_default_str();
  add_seed(predict);

  auto* analyze = app.add_subcommand("analyze", "Utility-scale and weighting-curve exports");
  analyze->add_option("--input", input, "Split directory")->required();
  analyze->add_option("--checkpoint", checkpoint)->required();
  analyze->add_option("--output-dir", output_dir)->required();
  analyze->add_option("--grid-step", grid_step)->capture_default_str();
  analyze->add_option("--bins", bins)->capture_default_str();
  add_seed(analyze);

  auto* export_pwf = app.add_subcommand("export-pwf", "Write a weighting curve as p,w CSV");
  std::string pwf_output;
  export_pwf->add_option("--output", pwf_output, "CSV path")->required();
  export_pwf->add_option("--model", model, "eu, tf, tf+, prelec, prelec+")->capture_default_str();
  export_pwf->add_option("--delta", pwf.delta)->capture_default_str();
  export_pwf->add_option("--gamma", pwf.gamma)->capture_default_str();
  export_pwf->add_option("--theta", pwf.theta)->capture_default_str();
  export_pwf->add_option("--checkpoint", checkpoint, "Use mean parameters of a trained model");
  export_pwf->add_option("--input", input, "Split directory (with --checkpoint)");
  export_pwf->add_option("--grid-step", grid_step)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    eval_cfg.ks = parse_ks(ks);
    eval_cfg.seed = seed;
    eval_cfg.threads = weu::cli::thread_budget();
    train_cfg.seed = seed;
    train_cfg.noise_enabled = !no_noise;

    if (*ingest) {
      const auto ds = weu::cli::run_ingest({input, output_dir, ingest_cfg, seed});
      std::cerr << "ingested " << ds.interaction_count() << " interactions, " << ds.user_count
                << " users, " << ds.item_count << " items\n";
    } else if (*train) {
      try {
        weu::check_model_name(model);
      } catch (const weu::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n' << train->help();
        return 2;
      }
      const auto out = weu::cli::run_train({input, output_dir, model, train_cfg, eval_cfg});
      std::cerr << "trained " << model << " for " << train_cfg.epochs << " epochs, best epoch "
                << out.best_epoch << '\n';
    } else if (*evaluate) {
      const auto report = weu::cli::run_evaluate({input, checkpoint, output_dir, eval_cfg, per_user});
      for (const auto& m : report.mean.at)
        std::cerr << "K=" << m.k << " P=" << m.precision << " R=" << m.recall << " F1=" << m.f1
                  << " NDCG=" << m.ndcg << '\n';
    } else if (*predict) {
      weu::cli::run_predict({input, checkpoint, output_dir, top_k, seed});
    } else if (*analyze) {
      const auto s = weu::cli::run_analyze({input, checkpoint, output_dir, grid_step, bins, seed});
      std::cerr << "mean(alpha - beta) = " << s.mean_diff << ", users with alpha > beta: "
                << s.fraction_alpha_above_beta << '\n';
    } else if (*export_pwf) {
      weu::cli::ExportPwfOptions opt;
      opt.output = pwf_output;
      opt.model = model;
      opt.params = pwf;
      opt.grid_step = grid_step;
      if (!checkpoint.empty()) opt.checkpoint = checkpoint;
      if (!input.empty()) opt.input = input;
      weu::cli::run_export_pwf(opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
