// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairst/cli/commands.hpp"
#include "fairst/cli/config.hpp"
#include "fairst/error.hpp"

namespace {

constexpr const char* kConfigKeys = R"(Config keys (flat `key = value`, `#` comments; override with --set key=value):
  paths.output              output directory (all commands)
  paths.trips               trip CSV `timestamp,lat,lon` (prepare)
  paths.demographics        GeoJSON units with `population`, `<attr>_adv_frac` (prepare)
  paths.weather             hourly CSV `timestamp,<series>...` (prepare)
  features.<name>.path      GeoJSON points / lines for one 2D layer (prepare)
  features.<name>.mode      count | total_length            [count]
  grid.min_lat, grid.min_lon, grid.max_lat, grid.max_lon, grid.cell_size_m
  data.start, data.end      RFC 3339, on the hour; period [start, end)
  data.train_end            first hour of the test period
  data.series               weather columns to use          [all]
  data.window               history length in hours         [168]
  arch.filters3d            3D stream filters, last must be 1 [16,32,1]
  arch.kernel               odd kernel extent               [3]
  arch.width3d, arch.width2d, arch.width1d                  [8, 4, 4]
  arch.layers1d, arch.layers2d                              [1, 2]
  arch.fusion_widths        hidden head widths              [8]
  train.epochs [1]  train.batch_size [32]  train.seed [0]  train.threads [1]
  train.checkpoint_every    epochs between checkpoints, 0 = off [0]
  train.lr [0.005]  train.lr_decay [0.96]  train.lr_decay_steps [5000]
  fairness.kind             none | rf | if | em | pairwise  [none]
  fairness.lambda           global weight                   [0]
  fairness.attributes       comma list of sensitive attributes
  fairness.weights          per-attribute weights           [1 each]
  fairness.thresholds       advantaged iff w+ > threshold   [0.5 each]
  fairness.p_min [1e-9]  fairness.y_min [1]
  sweep.lambdas             comma list (sweep)
  predict.hours             comma list of RFC 3339 hours (predict) [first test hour]
  predict.clamp             clamp negatives to 0 in exported CSVs [false]
  eval.ha                   also report the historical average [false]
  synth.rows [8] synth.cols [8] synth.cell_size_m [1000] synth.origin_lat [47.6]
  synth.origin_lon [-122.35] synth.start [2018-01-01T00:00:00Z] synth.hours [504]
  synth.bias [3] synth.rate [1] synth.attribute [race] synth.threshold [0.5]
  synth.points [200] synth.roads [12] synth.seed [7] synth.test_hours [72] synth.window [24]

Exit codes: 0 ok, 2 config error, 3 data / input error, 4 numeric failure.
)";

int report_error(const std::string& code, int status, const std::string& message) {
  std::cerr << "fairst: error=" << code << " exit=" << status << ": " << message << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware spatiotemporal demand forecasting"};
  app.footer(kConfigKeys);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::size_t> threads;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("-c,--config", config_path, "run configuration file");
    if (config_required) opt->required();
    sub->add_option("--set", overrides, "override a config key (key=value), repeatable");
    sub->add_option("--threads", threads, "worker threads; 1 is the deterministic mode");
  };

  auto* prepare = app.add_subcommand("prepare", "grid the raw inputs into prepared.fst");
  add_common(prepare, true);
  auto* train = app.add_subcommand("train", "train and write checkpoint.fst + trainlog.csv");
  add_common(train, true);
  auto* evaluate = app.add_subcommand("evaluate", "write report.csv and report_truth.csv");
  add_common(evaluate, true);
  std::string predictions;
  evaluate->add_option("--predictions", predictions,
                       "score this predictions archive instead of the checkpoint");
  auto* predict = app.add_subcommand("predict", "export forecast heatmaps (CSV + PGM)");
  add_common(predict, true);
  std::vector<std::string> hours;
  bool clamp = false;
  predict->add_option("--hour", hours, "RFC 3339 hour to forecast, repeatable");
  predict->add_flag("--clamp", clamp, "clamp negative forecasts to 0 in the CSV");
  auto* sweep = app.add_subcommand("sweep", "train across fairness.lambda values");
  add_common(sweep, true);
  std::string lambdas;
  sweep->add_option("--lambdas", lambdas, "comma list, overrides sweep.lambdas");
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic city and city.cfg");
  add_common(synth, false);
  std::string synth_dir;
  synth->add_option("-o,--out", synth_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("config_error", 2, e.what());
  }

  try {
    fairst::Config config;
    if (!config_path.empty()) config = fairst::Config::load(config_path);
    for (const std::string& o : overrides) config.set(o);
    if (threads) config.set("train.threads", std::to_string(*threads));
    if (!lambdas.empty()) config.set("sweep.lambdas", lambdas);
    if (clamp) config.set("predict.clamp", "true");
    if (!hours.empty()) {
      std::string joined;
      for (const std::string& h : hours) joined += (joined.empty() ? "" : ",") + h;
      config.set("predict.hours", joined);
    }

    if (synth->parsed()) {
      fairst::cmd_synth(config, synth_dir, std::cout);
      return 0;
    }
    const fairst::RunConfig run = fairst::run_config_from(config);
    if (prepare->parsed()) fairst::cmd_prepare(run, std::cout);
    if (train->parsed()) fairst::cmd_train(run, std::cout);
    if (evaluate->parsed())
      fairst::cmd_evaluate(run, std::cout,
                           predictions.empty() ? std::nullopt
                                               : std::optional<std::filesystem::path>(predictions));
    if (predict->parsed()) fairst::cmd_predict(run, std::cout);
    if (sweep->parsed()) fairst::cmd_sweep(run, std::cout);
    return 0;
  } catch (const fairst::Error& e) {
    return report_error(fairst::to_string(e.kind()), fairst::exit_code(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("io_error", 3, e.what());
  }
}
