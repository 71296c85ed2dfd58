// aspectcast <ingest|sentiment|features|fit|predict|evaluate|pipeline> --config <path>
//            [--out <dir>] [--seed <n>] [--aspects 13|16] [--no-lag]

#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "aspectcast/pipeline.hpp"

namespace ac = aspectcast::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Aspect-based sentiment features and revenue growth forecasting"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, std::function<void(const ac::Config&)>>> stages = {
      {"ingest", {"validate reviews and revenue; write reviews.jsonl, growth.csv, terms.csv",
                  [](const ac::Config& c) { ac::run_ingest(c); }}},
      {"sentiment", {"score every review; write sentiment.csv", [](const ac::Config& c) { ac::run_sentiment(c); }}},
      {"features", {"match aspects, aggregate perceptions; write features.csv",
                    [](const ac::Config& c) { ac::run_features(c); }}},
      {"fit", {"fit every configured model on the training split; write models/",
               [](const ac::Config& c) { ac::run_fit(c); }}},
      {"predict", {"predict the test split with the fitted models; write predictions.csv",
                   [](const ac::Config& c) { ac::run_predict(c); }}},
      {"evaluate", {"score predictions; write report.csv, report.json, plot_data.csv",
                    [](const ac::Config& c) { ac::run_evaluate(c); }}},
      {"pipeline", {"run every stage in order", [](const ac::Config& c) { ac::run_pipeline(c); }}},
  };

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int aspects = 0;
  bool no_lag = false;
  std::map<std::string, CLI::App*> commands;
  for (const auto& [name, stage] : stages) {
    auto* sub = app.add_subcommand(name, stage.first);
    sub->add_option("--config", config_path, "pipeline config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "seed for every model (overrides config)");
    sub->add_option("--aspects", aspects, "aspect set for features and every model")->check(CLI::IsMember({13, 16}));
    sub->add_flag("--no-lag", no_lag, "leave out the lagged growth feature");
    commands[name] = sub;
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : commands) {
    if (!sub->parsed()) continue;
    try {
      auto config = ac::load_config(config_path);
      ac::Overrides o;
      if (!out_dir.empty()) o.out = out_dir;
      if (sub->count("--seed")) o.seed = seed;
      if (sub->count("--aspects")) o.aspects = aspects;
      o.no_lag = no_lag;
      ac::apply(config, o);
      stages.at(name).second(config);
    } catch (const aspectcast::StageError& e) {
      std::cerr << "aspectcast: error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "aspectcast: error: [config] " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}
