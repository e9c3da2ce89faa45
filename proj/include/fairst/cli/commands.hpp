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

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fairst/cli/config.hpp"
#include "fairst/cli/pipeline.hpp"
#include "fairst/cli/synth.hpp"
#include "fairst/error.hpp"
#include "fairst/eval/evaluate.hpp"
#include "fairst/eval/heatmap.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/features.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/tensor/archive.hpp"

namespace fairst {

namespace detail {

inline void require_input(const std::filesystem::path& path, const char* key) {
  require(!path.empty(), ErrorKind::config, "missing config key '", key, "'");
  require(std::filesystem::exists(path), ErrorKind::io, key, ": input ", path.string(),
          " does not exist");
}

// Evaluation always reports on some attribute: the configured ones, or every
// attribute of the field at the default threshold.
inline FairnessConfig evaluation_fairness(FairnessConfig f, const PreparedData& d) {
  if (f.attributes.empty())
    for (const std::string& name : d.field.attribute_names()) f.attributes.push_back({name});
  return f;
}

inline void check_prepared_matches(const RunConfig& run, const PreparedData& d) {
  require(d.demand.start_time == run.start && d.train_end == run.train_end, ErrorKind::config,
          "prepared data in ", run.prepared_path().string(),
          " was built for a different data.start / data.train_end; re-run prepare");
}

inline std::string hour_stem(UtcSeconds t) {
  std::string s = format_rfc3339(t);  // 2018-01-01T05:00:00Z
  std::string out;
  for (char ch : s.substr(0, 13))
    if (ch != '-' && ch != ':') out += ch;
  return out + "Z";
}

}  // namespace detail

inline PreparedData cmd_prepare(const RunConfig& run, std::ostream& log) {
  detail::require_input(run.trips, "paths.trips");
  detail::require_input(run.demographics, "paths.demographics");
  detail::require_input(run.weather, "paths.weather");
  require(!run.features.empty(), ErrorKind::config,
          "missing config key 'features.<name>.path' (at least one urban feature layer)");
  RawInputs raw;
  raw.trips = read_trips_csv(run.trips);
  raw.units = read_demographics_geojson(run.demographics);
  raw.weather = csv::read(run.weather);
  raw.weather_source = run.weather.string();
  raw.series_names = run.series_names;
  for (const FeatureSource& f : run.features) {
    detail::require_input(f.path, ("features." + f.name + ".path").c_str());
    raw.features.push_back({f.name, read_features_geojson(f.path), f.mode});
  }
  PrepareOptions opt{run.bbox, run.cell_size_m, run.start, run.end, run.train_end};
  PreparedData d = prepare_data(raw, opt);
  std::filesystem::create_directories(run.output);
  save_prepared(d, run.prepared_path());
  log << "prepared " << d.demand.steps() << " hours on a " << d.demand.rows() << "x"
      << d.demand.cols() << " grid; " << raw.trips.size() - d.dropped_trips << " trips kept, "
      << d.dropped_trips << " dropped -> " << run.prepared_path().string() << "\n";
  return d;
}

inline TrainResult cmd_train(const RunConfig& run, std::ostream& log) {
  const PreparedData d = load_prepared(run.prepared_path());
  detail::check_prepared_matches(run, d);
  const Experiment e = make_experiment(d, run.window, run.train.fairness);
  const ArchConfig arch = resolve_arch(run.arch, d, run.window);
  TrainConfig tc = run.train;
  tc.fairness = e.fairness;
  log << "training on " << e.train.size() << " slices (" << e.test.size()
      << " held out) for " << tc.epochs << " epochs\n";
  TrainResult result =
      train_model(e.train, initial_params(d, arch, tc.seed), tc, training_context(d, e),
                  [&](const EpochRecord& r) {
                    log << "epoch " << r.epoch << " acc_loss " << r.accuracy << " fair_loss "
                        << r.fairness << " lr " << r.lr << "\n";
                  });
  save_checkpoint(result.params, run.checkpoint_path());
  write_file_atomic(run.output / "trainlog.csv", result.log.to_csv());
  log << "checkpoint -> " << run.checkpoint_path().string() << "\n";
  return result;
}

inline void save_predictions(const DemandTensor& pred, const std::filesystem::path& path) {
  TensorArchive a;
  a.set_meta("kind", "fairst-predictions");
  a.set_meta("start", format_rfc3339(pred.start_time));
  a.put("prediction", pred.values);
  a.save(path);
}

inline DemandTensor load_predictions(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::io, "predictions file ", path.string(),
          " does not exist");
  const TensorArchive a = TensorArchive::load(path);
  require(a.has_meta("kind") && a.meta("kind") == "fairst-predictions", ErrorKind::data,
          path.string(), " is not a predictions archive");
  DemandTensor out;
  out.values = a.get("prediction");
  const auto t = parse_rfc3339(a.meta("start"));
  require(t.has_value() && out.values.rank() == 3, ErrorKind::data, path.string(),
          ": malformed predictions archive");
  out.start_time = *t;
  return out;
}

// Writes report.csv (predictions), report_truth.csv (ground truth) and, if
// enabled, report_ha.csv. With `predictions` set, that tensor is scored
// instead of the checkpoint's forecasts.
inline EvalReport cmd_evaluate(const RunConfig& run, std::ostream& log,
                               const std::optional<std::filesystem::path>& predictions = {}) {
  const PreparedData d = load_prepared(run.prepared_path());
  detail::check_prepared_matches(run, d);
  const FairnessConfig fairness = detail::evaluation_fairness(run.train.fairness, d);
  const Experiment e = make_experiment(d, run.window, fairness);
  const DemandTensor truth = test_truth(d, e);
  DemandTensor pred;
  if (predictions) {
    pred = load_predictions(*predictions);
    require(pred.values.shape() == truth.values.shape() && pred.start_time == truth.start_time,
            ErrorKind::data, predictions->string(), ": expected shape ",
            shape_string(truth.values.shape()), " starting at ", format_rfc3339(truth.start_time));
  } else {
    require(std::filesystem::exists(run.checkpoint_path()), ErrorKind::io, "checkpoint ",
            run.checkpoint_path().string(), " not found (run train first)");
    pred = predict_test(load_checkpoint(run.checkpoint_path()), d, e);
    save_predictions(pred, run.output / "predictions.fst");
  }
  const EvalReport report = evaluate(pred, truth, d.field, e.labelings, fairness);
  write_file_atomic(run.output / "report.csv", report.to_csv());
  write_file_atomic(run.output / "report_truth.csv",
                    evaluate_ground_truth(truth, d.field, e.labelings, fairness).to_csv());
  if (run.eval_ha) {
    const EvalReport ha = evaluate(ha_test(d, e), truth, d.field, e.labelings, fairness);
    write_file_atomic(run.output / "report_ha.csv", ha.to_csv());
  }
  log << "test MAE " << report.mae << " over " << truth.steps() << " hours -> "
      << (run.output / "report.csv").string() << "\n";
  return report;
}

// Heatmaps of the forecast for each requested hour (default: the first test
// hour). An hour may lie one step past the data as long as its history exists.
inline std::vector<HeatmapFiles> cmd_predict(const RunConfig& run, std::ostream& log) {
  const PreparedData d = load_prepared(run.prepared_path());
  detail::check_prepared_matches(run, d);
  require(std::filesystem::exists(run.checkpoint_path()), ErrorKind::io, "checkpoint ",
          run.checkpoint_path().string(), " not found (run train first)");
  const ModelParams params = load_checkpoint(run.checkpoint_path());
  std::vector<UtcSeconds> hours = run.predict_hours;
  if (hours.empty()) hours.push_back(d.train_end);
  const std::size_t T = d.demand.steps(), P = d.demand.cells(), M = d.series.count();
  const std::size_t W = run.window;
  std::vector<HeatmapFiles> files;
  for (UtcSeconds when : hours) {
    require(when >= d.demand.start_time, ErrorKind::config, "predict hour ",
            format_rfc3339(when), " precedes the data");
    const auto k = static_cast<std::size_t>((when - d.demand.start_time) / kSecondsPerHour);
    require(k >= W && k <= T, ErrorKind::config, "predict hour ", format_rfc3339(when),
            " needs ", W, " hours of history inside the data range");
    Tensor history(Shape{W, d.demand.rows(), d.demand.cols()});
    std::copy_n(d.demand.values.data() + (k - W) * P, W * P, history.data());
    Tensor series(Shape{M, W});
    for (std::size_t m = 0; m < M; ++m)
      std::copy_n(d.series.series.data() + m * T + (k - W), W, series.data() + m * W);
    const Tensor frame = predict_frame(params, history, series, d.features.maps);
    files.push_back(export_heatmap(frame, run.output / ("predict_" + detail::hour_stem(when)),
                                   run.clamp_export));
    log << "heatmap " << files.back().csv.string() << "\n";
  }
  return files;
}

struct SweepRow {
  double lambda = 0.0;
  double mae = 0.0;
  AttributeReport attribute;
};

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,attribute,mae,rfg,ifg,rho,p_value\n";
  for (const SweepRow& r : rows)
    out += csv::format_double(r.lambda) + "," + r.attribute.attribute + "," +
           csv::format_double(r.mae) + "," + csv::format_double(r.attribute.rfg) + "," +
           csv::format_double(r.attribute.ifg) + "," + csv::format_double(r.attribute.rho) +
           "," + csv::format_double(r.attribute.p_value) + "\n";
  return out;
}

// One training run per lambda, same seed; rows per (lambda, attribute).
inline std::vector<SweepRow> cmd_sweep(const RunConfig& run, std::ostream& log) {
  require(!run.sweep_lambdas.empty(), ErrorKind::config, "missing config key 'sweep.lambdas'");
  require(run.train.fairness.kind != RegularizerKind::none, ErrorKind::config,
          "sweep needs fairness.kind set to a regularizer");
  const PreparedData d = load_prepared(run.prepared_path());
  detail::check_prepared_matches(run, d);
  std::vector<SweepRow> rows;
  for (double lambda : run.sweep_lambdas) {
    FairnessConfig f = run.train.fairness;
    f.lambda = lambda;
    const Experiment e = make_experiment(d, run.window, f);
    const RunOutcome outcome = train_and_evaluate(d, e, run.arch, run.train);
    for (const AttributeReport& a : outcome.report.attributes)
      rows.push_back({lambda, outcome.report.mae, a});
    log << "lambda " << lambda << " MAE " << outcome.report.mae;
    for (const AttributeReport& a : outcome.report.attributes)
      log << " " << a.attribute << " IFG " << a.ifg;
    log << "\n";
    write_file_atomic(run.output / "sweep.csv", sweep_to_csv(rows));
  }
  return rows;
}

inline std::string trips_to_csv(const std::vector<TripRecord>& trips) {
  std::string out = "timestamp,lat,lon\n";
  for (const TripRecord& t : trips)
    out += format_rfc3339(t.timestamp) + "," + csv::format_double(t.lat) + "," +
           csv::format_double(t.lon) + "\n";
  return out;
}

inline std::string weather_to_csv(const SyntheticCity& city) {
  const csv::Table table = weather_table(city);
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out += (i ? "," : "") + table.header[i];
  out += "\n";
  for (const csv::Row& row : table.rows) {
    for (std::size_t i = 0; i < row.fields.size(); ++i) out += (i ? "," : "") + row.fields[i];
    out += "\n";
  }
  return out;
}

// A ready-to-run configuration for a synthetic city written under `dir`.
inline std::string synthetic_run_config(const SyntheticCity& city, const SynthConfig& s,
                                        const std::filesystem::path& dir,
                                        std::size_t test_hours, std::size_t window) {
  const UtcSeconds train_end = city.end - static_cast<UtcSeconds>(test_hours) * kSecondsPerHour;
  auto path = [&](const char* name) { return (dir / name).string(); };
  std::string out;
  out += "# Synthetic city, seed " + std::to_string(s.seed) + ", bias " +
         csv::format_double(s.bias) + "\n";
  out += "paths.trips = " + path("trips.csv") + "\n";
  out += "paths.demographics = " + path("demographics.geojson") + "\n";
  out += "paths.weather = " + path("weather.csv") + "\n";
  out += "paths.output = " + path("run") + "\n";
  out += "features.pois.path = " + path("pois.geojson") + "\n";
  out += "features.pois.mode = count\n";
  out += "features.roads.path = " + path("roads.geojson") + "\n";
  out += "features.roads.mode = total_length\n\n";
  out += "grid.min_lat = " + csv::format_double(city.bbox.min_lat) + "\n";
  out += "grid.min_lon = " + csv::format_double(city.bbox.min_lon) + "\n";
  out += "grid.max_lat = " + csv::format_double(city.bbox.max_lat) + "\n";
  out += "grid.max_lon = " + csv::format_double(city.bbox.max_lon) + "\n";
  out += "grid.cell_size_m = " + csv::format_double(city.cell_size_m) + "\n\n";
  out += "data.start = " + format_rfc3339(city.start) + "\n";
  out += "data.end = " + format_rfc3339(city.end) + "\n";
  out += "data.train_end = " + format_rfc3339(train_end) + "\n";
  out += "data.window = " + std::to_string(window) + "\n\n";
  out += "train.epochs = 12\ntrain.batch_size = 32\ntrain.seed = " + std::to_string(s.seed) +
         "\ntrain.threads = 1\n\n";
  out += "fairness.kind = if\nfairness.lambda = 0\nfairness.attributes = " + s.attribute +
         "\nfairness.thresholds = " + csv::format_double(s.threshold) + "\n\n";
  out += "sweep.lambdas = 0, 0.5, 1, 2\n";
  out += "eval.ha = true\n";
  return out;
}

inline SyntheticCity cmd_synth(const Config& config, const std::filesystem::path& dir,
                               std::ostream& log) {
  const SynthConfig s = synth_from(config);
  const SyntheticCity city = generate_city(s);
  const std::size_t test_hours = config.count("synth.test_hours", 72);
  const std::size_t window = config.count("synth.window", 24);
  require(test_hours >= 1 && test_hours + window < s.hours, ErrorKind::config,
          "synth.test_hours + synth.window must leave training hours");
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "trips.csv", trips_to_csv(city.trips));
  write_file_atomic(dir / "demographics.geojson", demographics_to_geojson(city.units));
  write_file_atomic(dir / "weather.csv", weather_to_csv(city));
  write_file_atomic(dir / "pois.geojson", features_to_geojson(city.points));
  write_file_atomic(dir / "roads.geojson", features_to_geojson(city.roads));
  write_file_atomic(dir / "city.cfg", synthetic_run_config(city, s, dir, test_hours, window));
  log << "synthetic city: " << s.rows << "x" << s.cols << " cells, " << s.hours << " hours, "
      << city.trips.size() << " trips -> " << (dir / "city.cfg").string() << "\n";
  return city;
}

}  // namespace fairst
