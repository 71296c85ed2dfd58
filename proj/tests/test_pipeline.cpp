#include <cstdlib>
#include <fstream>

#include "aspectcast/pipeline.hpp"
#include "aspectcast/text.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace aspectcast;
using testutil::throws_with;

namespace {

const pipeline::Log quiet = [](const std::string&) {};

fs::path synthetic_config() { return testutil::data_dir() / "synthetic" / "pipeline.json"; }
fs::path table2_config() { return testutil::data_dir() / "fixtures" / "table2" / "config.json"; }

struct Run {
  int status = 0;
  std::string err;
};

Run cli(const std::string& args, const fs::path& scratch) {
  const auto err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(ASPECTCAST_CLI) + " " + args + " 2> \"" + err_file.string() + "\"";
  Run r;
  r.status = std::system(cmd.c_str());
  r.err = text::read_file(err_file.string());
  return r;
}

std::string slurp(const fs::path& p) { return text::read_file(p.string()); }

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// A config over the synthetic corpus written into `dir`, with the given models.
fs::path synthetic_variant(const fs::path& dir, const nlohmann::json& models) {
  auto j = nlohmann::json::parse(slurp(synthetic_config()));
  const auto base = testutil::data_dir() / "synthetic";
  for (const char* key : {"reviews", "revenue", "vocabulary", "lexicon"}) {
    j[key] = (base / j[key].get<std::string>()).lexically_normal().string();
  }
  j["models"] = models;
  j["out"] = (dir / "out").string();
  const auto path = dir / "config.json";
  write(path, j.dump(2));
  return path;
}

}  // namespace

TEST(Pipeline, Table2FixturePerception) {
  auto c = pipeline::load_config(table2_config());
  c.out = testutil::scratch_dir("table2_lib");
  const auto m = pipeline::build_features(c, quiet);
  ASSERT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.quarters[0], Quarter(2016, 4));
  EXPECT_EQ(m.cols(), 16u);
  const auto idx = *m.column_index("after_sales_experience");
  EXPECT_NEAR(m.values(0, static_cast<Eigen::Index>(idx)), 0.66848334, 1e-8);
  EXPECT_NEAR(m.target(0), 0.1, 1e-12);
}

TEST(Pipeline, Table2FixtureThroughCli) {
  const auto dir = testutil::scratch_dir("table2_cli");
  const auto r = cli("features --config \"" + table2_config().string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto m = read_feature_csv(slurp(dir / "out" / "features.csv"));
  const auto idx = *m.column_index("after_sales_experience");
  EXPECT_NEAR(m.values(0, static_cast<Eigen::Index>(idx)), 0.66848334, 1e-8);
}

TEST(Pipeline, EndToEndIsByteIdentical) {
  const auto dir = testutil::scratch_dir("determinism");
  for (const char* run : {"a", "b"}) {
    const auto r = cli("pipeline --config \"" + synthetic_config().string() + "\" --out \"" + (dir / run).string() + "\"", dir);
    ASSERT_EQ(r.status, 0) << r.err;
  }
  for (const char* f : {"reviews.jsonl", "growth.csv", "terms.csv", "sentiment.csv", "features.csv", "grid_search.csv",
                        "predictions.csv", "report.csv", "report.json", "plot_data.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  for (const auto& entry : fs::directory_iterator(dir / "a" / "models")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / "models" / entry.path().filename())) << entry.path();
  }
  const auto report = slurp(dir / "a" / "report.csv");
  EXPECT_EQ(lines(report), 8u);
  for (const char* label : {"ARIMA", "LR-13", "LR-16", "ANN-13", "ANN-16", "SVM-13", "SVM-16"}) {
    EXPECT_NE(report.find(std::string("\n") + label + ","), std::string::npos) << label;
  }
}

TEST(Pipeline, AspectFlagSetsColumnCount) {
  const auto dir = testutil::scratch_dir("aspects");
  for (const auto& [n, cols] : std::vector<std::pair<int, std::size_t>>{{13, 14}, {16, 17}}) {
    const auto out = dir / std::to_string(n);
    const auto r = cli("features --config \"" + synthetic_config().string() + "\" --out \"" + out.string() +
                           "\" --aspects " + std::to_string(n),
                       dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(read_feature_csv(slurp(out / "features.csv")).cols(), cols);
  }
  const auto r = cli("features --config \"" + synthetic_config().string() + "\" --out \"" + (dir / "nolag").string() +
                         "\" --aspects 13 --no-lag",
                     dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto m = read_feature_csv(slurp(dir / "nolag" / "features.csv"));
  EXPECT_EQ(m.cols(), 13u);
  EXPECT_FALSE(m.has_lag());
}

TEST(Pipeline, ArimaOnlyConfig) {
  const auto dir = testutil::scratch_dir("arima_only");
  const auto cfg = synthetic_variant(
      dir, nlohmann::json::array({{{"label", "ARIMA"}, {"kind", "arima"}, {"hyperparameters", {{"p", 1}, {"d", 0}, {"q", 0}}}}}));
  const auto r = cli("pipeline --config \"" + cfg.string() + "\"", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  const auto report = slurp(dir / "out" / "report.csv");
  EXPECT_EQ(lines(report), 2u);
  EXPECT_EQ(report.rfind("model,mse,rmse,theils_u\nARIMA,", 0), 0u);
}

TEST(Pipeline, SeedOverrideChangesOnlyStochasticModels) {
  const auto dir = testutil::scratch_dir("seed");
  const auto models = nlohmann::json::array(
      {{{"label", "LR"}, {"kind", "lr"}, {"hyperparameters", {{"selection", "all"}}}, {"aspects", {"cost_savings", "security_concerns"}}},
       {{"label", "ANN"}, {"kind", "mlp"}, {"seed", 1}, {"hyperparameters", {{"hidden", 4}}}}});
  const auto cfg = synthetic_variant(dir, models);
  ASSERT_EQ(cli("pipeline --config \"" + cfg.string() + "\" --out \"" + (dir / "s1").string() + "\"", dir).status, 0);
  ASSERT_EQ(cli("pipeline --config \"" + cfg.string() + "\" --out \"" + (dir / "s2").string() + "\" --seed 99", dir).status, 0);
  const auto lr1 = nlohmann::json::parse(slurp(dir / "s1" / "models" / "LR.json"));
  const auto lr2 = nlohmann::json::parse(slurp(dir / "s2" / "models" / "LR.json"));
  EXPECT_EQ(lr1.at("model"), lr2.at("model"));
  const auto ann = nlohmann::json::parse(slurp(dir / "s2" / "models" / "ANN.json"));
  EXPECT_EQ(ann.at("seed"), 99);
}

TEST(Pipeline, EmptyReviewsGiveHeaderOnlySentiment) {
  const auto dir = testutil::scratch_dir("empty_reviews");
  auto j = nlohmann::json::parse(slurp(synthetic_config()));
  const auto base = testutil::data_dir() / "synthetic";
  write(dir / "reviews.jsonl", "");
  j["reviews"] = (dir / "reviews.jsonl").string();
  for (const char* key : {"revenue", "vocabulary", "lexicon"}) j[key] = (base / j[key].get<std::string>()).string();
  j["out"] = (dir / "out").string();
  write(dir / "config.json", j.dump());
  const auto r = cli("sentiment --config \"" + (dir / "config.json").string() + "\"", dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out" / "sentiment.csv"), "id,quarter,pos,neu,neg,compound\n");
}

TEST(Pipeline, ErrorsNameTheStage) {
  const auto dir = testutil::scratch_dir("errors");
  auto j = nlohmann::json::parse(slurp(synthetic_config()));
  j["reviews"] = (dir / "missing.jsonl").string();
  const auto base = testutil::data_dir() / "synthetic";
  for (const char* key : {"revenue", "vocabulary", "lexicon"}) j[key] = (base / j[key].get<std::string>()).string();
  j["out"] = (dir / "out").string();
  write(dir / "config.json", j.dump());
  auto r = cli("ingest --config \"" + (dir / "config.json").string() + "\"", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("[ingest]"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("missing.jsonl"), std::string::npos) << r.err;

  r = cli("predict --config \"" + synthetic_config().string() + "\" --out \"" + (dir / "fresh").string() + "\"", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("[predict]"), std::string::npos) << r.err;

  j["bogus"] = 1;
  write(dir / "bad.json", j.dump());
  r = cli("ingest --config \"" + (dir / "bad.json").string() + "\"", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("[config]"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("bogus"), std::string::npos) << r.err;
}

TEST(Pipeline, ConfigValidation) {
  const auto base = nlohmann::json::parse(slurp(synthetic_config()));
  auto dup = base;
  dup["models"] = nlohmann::json::array({{{"label", "A"}, {"kind", "lr"}}, {{"label", "A"}, {"kind", "lr"}}});
  EXPECT_TRUE(throws_with([&] { pipeline::parse_config(dup, "."); }, "duplicate model label"));
  auto grid = base;
  grid["models"] = nlohmann::json::array({{{"label", "A"}, {"kind", "lr"}, {"gamma_grid", {0.1}}}});
  EXPECT_TRUE(throws_with([&] { pipeline::parse_config(grid, "."); }, "gamma_grid"));
  auto label = base;
  label["models"] = nlohmann::json::array({{{"label", "a b"}, {"kind", "lr"}}});
  EXPECT_THROW(pipeline::parse_config(label, "."), Error);
  auto aspects = base;
  aspects["aspects"] = 14;
  EXPECT_THROW(pipeline::parse_config(aspects, "."), Error);
}
