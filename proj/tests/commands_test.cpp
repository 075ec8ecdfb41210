#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "weu/commands.hpp"

namespace weu {
namespace {

namespace fs = std::filesystem;

const fs::path kFixture = fs::path(WEU_TEST_DATA_DIR) / "fixture_30users.csv";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream s(slurp(p));
  for (std::string line; std::getline(s, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() /
            (std::string("weu_cmd_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    cli::run_ingest({kFixture, root_ / "split", {}, 42});
  }
  void TearDown() override { fs::remove_all(root_); }

  cli::TrainOptions train_opts(const std::string& model, std::size_t epochs) const {
    cli::TrainOptions o;
    o.input = root_ / "split";
    o.output_dir = root_ / ("run_" + model);
    o.model = model;
    o.train.epochs = epochs;
    o.train.latent_dim = 4;
    o.train.candidate_set_size = 6;
    o.eval.negatives = 10;
    return o;
  }

  fs::path root_;
};

TEST_F(Pipeline, IngestStatsMatchHandCount) {
  const auto stats = nlohmann::json::parse(slurp(root_ / "split" / "dataset_stats.json"));
  EXPECT_EQ(stats["users"], 30);
  EXPECT_EQ(stats["items"], 30);
  EXPECT_EQ(stats["interactions"], 450);
  EXPECT_DOUBLE_EQ(stats["sparsity"].get<double>(), 0.5);
  EXPECT_EQ(stats["train"], 270);
  EXPECT_EQ(stats["validation"], 90);
  EXPECT_EQ(stats["test"], 90);
  EXPECT_EQ(stats["seed"], 42);
  for (auto f : {"train.csv", "validation.csv", "test.csv", "id_map_users.csv", "id_map_items.csv"})
    EXPECT_TRUE(fs::exists(root_ / "split" / f)) << f;
}

TEST_F(Pipeline, IngestRerunIsByteIdentical) {
  cli::run_ingest({kFixture, root_ / "again", {}, 42});
  for (const auto& e : fs::directory_iterator(root_ / "split"))
    EXPECT_EQ(slurp(e.path()), slurp(root_ / "again" / e.path().filename()))
        << e.path().filename();
}

TEST_F(Pipeline, MissingInputIsAnError) {
  EXPECT_THROW(cli::run_ingest({root_ / "nope.csv", root_ / "x", {}, 42}), Error);
}

TEST_F(Pipeline, ZeroEpochCheckpointIsInitialization) {
  const auto opt = train_opts("prelec+", 0);
  cli::run_train(opt);
  const auto model = load_model(opt.output_dir / "checkpoint.json");
  const auto ds = read_split(root_ / "split");
  const auto init = initialize_weu(ds.user_count, ds.item_count, 4, ds.r_max, ds.train, 42);
  ASSERT_TRUE(std::holds_alternative<WeuModel>(model));
  EXPECT_EQ(std::get<WeuModel>(model).params.values(), init.values());
  EXPECT_EQ(data_lines(opt.output_dir / "training_log.csv").size(), 1u);  // header only
}

TEST_F(Pipeline, TrainingLogHasOneRowPerEpoch) {
  for (const auto* model : {"tf", "cf-lfm", "bpr"}) {
    const auto opt = train_opts(model, 3);
    const auto out = cli::run_train(opt);
    EXPECT_EQ(data_lines(opt.output_dir / "training_log.csv").size(), 4u) << model;
    EXPECT_EQ(model_name(load_model(opt.output_dir / "checkpoint.json")), model);
    const auto state = nlohmann::json::parse(slurp(opt.output_dir / "training_state.json"));
    EXPECT_EQ(state["model_type"], model);
    EXPECT_EQ(state["best_epoch"], out.best_epoch);
  }
}

TEST_F(Pipeline, UnknownModelNameRejected) {
  EXPECT_THROW(cli::run_train(train_opts("ncf", 1)), ConfigError);
  EXPECT_THROW(cli::run_train(train_opts("identity", 1)), ConfigError);
}

TEST_F(Pipeline, EuEqualsUntrainedTfPlusWithIdentityWeighting) {
  cli::run_train(train_opts("eu", 0));
  cli::run_train(train_opts("tf+", 0));
  const auto ds = read_split(root_ / "split");
  auto eu = std::get<WeuModel>(load_model(root_ / "run_eu" / "checkpoint.json"));
  auto tfp = std::get<WeuModel>(load_model(root_ / "run_tf+" / "checkpoint.json"));
  const auto hists = build_histograms(ds.train, ds.item_count, ds.r_max);
  for (UserIndex u = 0; u < ds.user_count; ++u)
    for (ItemIndex i = 0; i < ds.item_count; ++i)
      EXPECT_EQ(weu_score(eu.params, hists, u, i, eu.kind),
                weu_score(tfp.params, hists, u, i, PwfKind::identity));
}

// Matrix-factorization checkpoint whose dot product is 1 exactly on the
// user's test items.
MfModel oracle_checkpoint(const SplitDataset& ds) {
  MfParameters p(ds.user_count, ds.item_count, ds.item_count);
  for (ItemIndex i = 0; i < ds.item_count; ++i) p[p.item_factor_index(i) + i] = 1.0;
  for (const auto& r : ds.test) p[p.user_factor_index(r.user) + r.item] = 1.0;
  return {std::move(p), MfKind::cf_lfm};
}

TEST_F(Pipeline, EvaluateOracleCheckpointGivesPerfectNdcg) {
  const auto ds = read_split(root_ / "split");
  save_model(root_ / "oracle.json", oracle_checkpoint(ds));
  EvalConfig eval;
  eval.negatives = 15;
  const auto report = cli::run_evaluate({root_ / "split", root_ / "oracle.json", root_ / "ev", eval, true});
  const auto lines = data_lines(root_ / "ev" / "metrics.csv");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "model,K,precision,recall,f1,ndcg");
  for (std::size_t n = 1; n < lines.size(); ++n)
    EXPECT_EQ(lines[n].substr(lines[n].rfind(',') + 1), "1") << lines[n];
  EXPECT_EQ(slurp(root_ / "ev" / "metrics.csv").rfind("# model=cf-lfm seed=42 k=1,5,10\n", 0), 0u);
  EXPECT_EQ(data_lines(root_ / "ev" / "per_user_metrics.csv").size(), 1u + 30u * 3u);
  EXPECT_DOUBLE_EQ(report.mean.at_k(10).ndcg, 1.0);
}

TEST_F(Pipeline, PredictWritesTopKPerUser) {
  const auto opt = train_opts("tf+", 1);
  cli::run_train(opt);
  cli::run_predict({root_ / "split", opt.output_dir / "checkpoint.json", root_ / "pred", 7, 42});
  const auto lines = data_lines(root_ / "pred" / "predictions.csv");
  ASSERT_EQ(lines.size(), 1u + 30u * 7u);
  EXPECT_EQ(lines[0], "user_raw_id,item_raw_id,rank,score");
  const auto ds = read_split(root_ / "split");
  std::set<std::pair<std::string, std::string>> train_pairs;
  for (const auto& r : ds.train) train_pairs.emplace(ds.users.raw(r.user), ds.items.raw(r.item));
  for (std::size_t n = 1; n < lines.size(); ++n) {
    std::istringstream s(lines[n]);
    std::string u, i;
    std::getline(s, u, ',');
    std::getline(s, i, ',');
    EXPECT_FALSE(train_pairs.count({u, i})) << lines[n];
  }
}

TEST_F(Pipeline, AnalyzeZeroCheckpoint) {
  const auto ds = read_split(root_ / "split");
  save_model(root_ / "zero.json", WeuModel{WeuParameters(ds.user_count, ds.item_count, 3), PwfKind::tf});
  const auto s = cli::run_analyze({root_ / "split", root_ / "zero.json", root_ / "an", 0.01, 50, 42});
  EXPECT_EQ(s.mean_diff, 0.0);
  const auto rows = data_lines(root_ / "an" / "user_scales.csv");
  ASSERT_EQ(rows.size(), 31u);
  for (std::size_t n = 1; n < rows.size(); ++n)
    EXPECT_EQ(rows[n].substr(rows[n].find(',')), ",0,0,0") << rows[n];
  EXPECT_EQ(data_lines(root_ / "an" / "scale_histogram.csv").size(), 51u);
  EXPECT_EQ(data_lines(root_ / "an" / "pwf_curve.csv").size(), 102u);
}

TEST_F(Pipeline, ShapeMismatchNamesBothShapes) {
  save_model(root_ / "small.json", WeuModel{WeuParameters(4, 7, 2), PwfKind::tf});
  try {
    cli::run_evaluate({root_ / "split", root_ / "small.json", root_ / "ev", {}, false});
    FAIL() << "expected a shape error";
  } catch (const ShapeMismatchError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("4 users x 7 items"), std::string::npos) << msg;
    EXPECT_NE(msg.find("30 users x 30 items"), std::string::npos) << msg;
  }
}

TEST_F(Pipeline, ExportPwfCurve) {
  cli::ExportPwfOptions opt;
  opt.output = root_ / "tf.csv";
  opt.model = "tf";
  opt.params = {0.9, 0.5, 1.0};
  cli::run_export_pwf(opt);
  const auto lines = data_lines(opt.output);
  ASSERT_EQ(lines.size(), 102u);
  EXPECT_EQ(lines[0], "p,w");
  EXPECT_EQ(lines[26], "0.25,0.341938688");
  EXPECT_EQ(lines.back(), "1,1");
}

TEST_F(Pipeline, SameSeedSameMetrics) {
  auto run = [&](const std::string& tag) {
    auto opt = train_opts("prelec+", 2);
    opt.output_dir = root_ / tag;
    cli::run_train(opt);
    EvalConfig eval;
    eval.negatives = 15;
    cli::run_evaluate({root_ / "split", opt.output_dir / "checkpoint.json", opt.output_dir, eval, false});
    return slurp(opt.output_dir / "metrics.csv");
  };
  EXPECT_EQ(run("a"), run("b"));
}

TEST(ThreadBudget, CappedByEnvironment) {
  ::setenv("WEU_THREADS", "1", 1);
  EXPECT_EQ(cli::thread_budget(), 1u);
  ::setenv("WEU_THREADS", "lots", 1);
  EXPECT_THROW(cli::thread_budget(), ConfigError);
  ::unsetenv("WEU_THREADS");
  EXPECT_GE(cli::thread_budget(), 1u);
}

}  // namespace
}  // namespace weu
