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

// End-to-end plumbing shared by the command-line tool and the tests: raw
// inputs -> prepared grid tensors -> slices -> trained model -> reports.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fairst/cli/synth.hpp"
#include "fairst/error.hpp"
#include "fairst/eval/evaluate.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/features.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/ingest/series.hpp"
#include "fairst/ingest/slices.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/model/fairst.hpp"
#include "fairst/model/ha.hpp"
#include "fairst/tensor/archive.hpp"
#include "fairst/train/train.hpp"

namespace fairst {

struct FeatureLayer {
  std::string name;
  UrbanGeometries geometries;
  RasterMode mode = RasterMode::count;
};

struct RawInputs {
  std::vector<TripRecord> trips;
  std::vector<DemographicUnit> units;
  csv::Table weather;
  std::string weather_source = "weather";
  std::vector<std::string> series_names;  // empty: every non-timestamp column
  std::vector<FeatureLayer> features;
};

struct PrepareOptions {
  BoundingBox bbox;
  double cell_size_m = 1000.0;
  UtcSeconds start = 0;
  UtcSeconds end = 0;
  UtcSeconds train_end = 0;  // first hour of the test period
};

struct PreparedData {
  BoundingBox bbox;
  double cell_size_m = 0.0;
  DemandTensor demand;
  SeriesStack1D series;
  FeatureStack2D features;  // each layer scaled to a maximum of 1
  DemographicField field;
  UtcSeconds train_end = 0;
  std::size_t dropped_trips = 0;

  std::size_t train_steps() const {
    return static_cast<std::size_t>((train_end - demand.start_time) / demand.interval_s);
  }
};

inline PreparedData prepare_data(const RawInputs& raw, const PrepareOptions& opt) {
  require(opt.start < opt.end && hour_aligned(opt.start) && hour_aligned(opt.end),
          ErrorKind::config, "data.start / data.end must be hour aligned with start < end");
  require(opt.train_end > opt.start && opt.train_end < opt.end && hour_aligned(opt.train_end),
          ErrorKind::config, "data.train_end must be an hour strictly inside the data range");
  require(!raw.features.empty(), ErrorKind::config, "at least one urban feature layer is required");
  const GridSpec grid = build_grid(opt.bbox, opt.cell_size_m);

  PreparedData out;
  out.bbox = opt.bbox;
  out.cell_size_m = opt.cell_size_m;
  out.train_end = opt.train_end;
  TripAggregation agg = aggregate_trips(raw.trips, grid, opt.start, opt.end);
  out.demand = std::move(agg.demand);
  out.dropped_trips = agg.dropped();

  std::vector<std::string> names = raw.series_names;
  if (names.empty())
    for (const std::string& h : raw.weather.header)
      if (h != "timestamp") names.push_back(h);
  require(!names.empty(), ErrorKind::data, raw.weather_source, ": no series columns");
  out.series = load_series(raw.weather, raw.weather_source, names, opt.start, opt.end,
                           opt.train_end);

  const std::size_t H = grid.rows, W = grid.cols;
  out.features.maps = Tensor(Shape{raw.features.size(), H, W});
  for (std::size_t n = 0; n < raw.features.size(); ++n) {
    Tensor layer = rasterize_features(raw.features[n].geometries, grid, raw.features[n].mode);
    const double top = layer.max();
    if (top > 0.0) layer *= 1.0 / top;
    std::copy_n(layer.data(), H * W, out.features.maps.data() + n * H * W);
    out.features.names.push_back(raw.features[n].name);
  }
  out.field = allocate_demographics(raw.units, grid);
  return out;
}

// Synthetic city as raw inputs, exactly what `synth` writes to disk.
inline csv::Table weather_table(const SyntheticCity& city) {
  csv::Table table;
  table.header.push_back("timestamp");
  for (const std::string& n : city.weather_names) table.header.push_back(n);
  std::size_t line = 2;
  for (const WeatherRow& row : city.weather) {
    csv::Row r{line++, {format_rfc3339(row.timestamp)}};
    for (double v : row.values) r.fields.push_back(csv::format_double(v));
    table.rows.push_back(std::move(r));
  }
  return table;
}

inline RawInputs raw_inputs(const SyntheticCity& city) {
  RawInputs raw;
  raw.trips = city.trips;
  raw.units = city.units;
  raw.weather = weather_table(city);
  raw.features.push_back({"pois", city.points, RasterMode::count});
  raw.features.push_back({"roads", city.roads, RasterMode::total_length});
  return raw;
}

// Test period = the last `test_hours` hours of the synthetic record.
inline PrepareOptions synthetic_options(const SyntheticCity& city, std::size_t test_hours) {
  PrepareOptions opt;
  opt.bbox = city.bbox;
  opt.cell_size_m = city.cell_size_m;
  opt.start = city.start;
  opt.end = city.end;
  opt.train_end = city.end - static_cast<UtcSeconds>(test_hours) * kSecondsPerHour;
  return opt;
}

// Prepared datasets are stored as one tensor archive.
inline TensorArchive to_archive(const PreparedData& d) {
  TensorArchive a;
  a.set_meta("kind", "fairst-prepared");
  a.set_meta("bbox", detail::hex_double(d.bbox.min_lat) + " " + detail::hex_double(d.bbox.min_lon) +
                         " " + detail::hex_double(d.bbox.max_lat) + " " +
                         detail::hex_double(d.bbox.max_lon));
  a.set_meta("cell_size_m", detail::hex_double(d.cell_size_m));
  a.set_meta("start", format_rfc3339(d.demand.start_time));
  a.set_meta("train_end", format_rfc3339(d.train_end));
  a.set_meta("dropped_trips", std::to_string(d.dropped_trips));
  std::string names, stats;
  for (std::size_t m = 0; m < d.series.count(); ++m) {
    names += (m ? "," : "") + d.series.names[m];
    stats += (m ? " " : "") + detail::hex_double(d.series.mean[m]) + " " +
             detail::hex_double(d.series.stddev[m]);
  }
  a.set_meta("series_names", names);
  a.set_meta("series_stats", stats);
  std::string fnames;
  for (std::size_t n = 0; n < d.features.names.size(); ++n)
    fnames += (n ? "," : "") + d.features.names[n];
  a.set_meta("feature_names", fnames);
  a.put("demand", d.demand.values);
  a.put("series", d.series.series);
  a.put("features", d.features.maps);
  const std::size_t H = d.field.rows, W = d.field.cols;
  a.put("population", Tensor(Shape{H, W}, d.field.cell_population));
  for (const auto& [name, w] : d.field.advantaged) a.put("adv." + name, Tensor(Shape{H, W}, w));
  return a;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = text.find(sep, start);
    out.push_back(text.substr(start, at == std::string::npos ? std::string::npos : at - start));
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return out;
}

inline UtcSeconds meta_time(const TensorArchive& a, const std::string& key) {
  const auto t = parse_rfc3339(a.meta(key));
  require(t.has_value(), ErrorKind::data, "prepared data: bad timestamp for ", key);
  return *t;
}

}  // namespace detail

inline PreparedData prepared_from_archive(const TensorArchive& a) {
  require(a.has_meta("kind") && a.meta("kind") == "fairst-prepared", ErrorKind::data,
          "not a prepared dataset archive");
  PreparedData d;
  const auto bbox = detail::split_list(a.meta("bbox"), ' ');
  require(bbox.size() == 4, ErrorKind::data, "prepared data: malformed bbox");
  d.bbox = {detail::parse_hex_double(bbox[0]), detail::parse_hex_double(bbox[1]),
            detail::parse_hex_double(bbox[2]), detail::parse_hex_double(bbox[3])};
  d.cell_size_m = detail::parse_hex_double(a.meta("cell_size_m"));
  d.train_end = detail::meta_time(a, "train_end");
  d.dropped_trips = std::stoull(a.meta("dropped_trips"));
  d.demand.values = a.get("demand");
  d.demand.start_time = detail::meta_time(a, "start");
  d.series.names = detail::split_list(a.meta("series_names"));
  d.series.series = a.get("series");
  d.series.start_time = d.demand.start_time;
  const auto stats = detail::split_list(a.meta("series_stats"), ' ');
  require(stats.size() == 2 * d.series.names.size(), ErrorKind::data,
          "prepared data: malformed series statistics");
  for (std::size_t m = 0; m < d.series.names.size(); ++m) {
    d.series.mean.push_back(detail::parse_hex_double(stats[2 * m]));
    d.series.stddev.push_back(detail::parse_hex_double(stats[2 * m + 1]));
  }
  d.features.names = detail::split_list(a.meta("feature_names"));
  d.features.maps = a.get("features");
  const Tensor& pop = a.get("population");
  std::map<std::string, std::vector<double>> adv;
  for (const auto& [name, t] : a.tensors())
    if (name.rfind("adv.", 0) == 0) adv[name.substr(4)] = t.storage();
  d.field = make_field(pop.dim(0), pop.dim(1), pop.storage(), std::move(adv));
  require(d.demand.values.rank() == 3 && d.demand.rows() == d.field.rows &&
              d.demand.cols() == d.field.cols && d.series.steps() == d.demand.steps() &&
              d.features.maps.rank() == 3 && d.features.maps.dim(0) == d.features.names.size(),
          ErrorKind::data, "prepared data: inconsistent tensor shapes");
  return d;
}

inline void save_prepared(const PreparedData& d, const std::filesystem::path& path) {
  to_archive(d).save(path);
}

inline PreparedData load_prepared(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::io, "prepared data not found at ",
          path.string(), " (run prepare first)");
  return prepared_from_archive(TensorArchive::load(path));
}

// Slices split by target time, labelings and the static inputs for training.
struct Experiment {
  std::size_t window = 0;
  std::vector<TemporalSlice> train;
  std::vector<TemporalSlice> test;
  std::vector<GroupLabeling> labelings;
  FairnessConfig fairness;
};

inline Experiment make_experiment(const PreparedData& d, std::size_t window,
                                  const FairnessConfig& fairness) {
  fairness.validate();
  Experiment e;
  e.window = window;
  e.fairness = fairness;
  const std::size_t boundary = d.train_steps();
  require(boundary > window, ErrorKind::config, "training period of ", boundary,
          " hours leaves no slices for window ", window);
  for (TemporalSlice& s : make_slices(d.demand, d.series, window))
    (s.target_index < boundary ? e.train : e.test).push_back(std::move(s));
  require(!e.test.empty(), ErrorKind::config, "test period is empty");
  for (const AttributeSetting& a : fairness.attributes)
    e.labelings.push_back(discretize_groups(d.field, a.name, a.threshold, fairness.p_min));
  return e;
}

inline TrainingContext training_context(const PreparedData& d, const Experiment& e) {
  return {&d.features.maps, &d.field, &e.labelings};
}

// Fills the data-dependent architecture fields from the prepared dataset.
inline ArchConfig resolve_arch(ArchConfig arch, const PreparedData& d, std::size_t window) {
  arch.window = window;
  arch.rows = d.field.rows;
  arch.cols = d.field.cols;
  arch.series_count = d.series.count();
  arch.feature_count = d.features.names.size();
  arch.validate();
  return arch;
}

// Fresh weights; the demand scale is the largest training-period count.
inline ModelParams initial_params(const PreparedData& d, const ArchConfig& arch,
                                  std::uint64_t seed) {
  ModelParams p = init_params(arch, seed);
  const std::size_t P = d.demand.cells();
  double top = 0.0;
  for (std::size_t i = 0; i < d.train_steps() * P; ++i) top = std::max(top, d.demand.values[i]);
  p.demand_scale = top > 0.0 ? top : 1.0;
  return p;
}

inline DemandTensor test_truth(const PreparedData& d, const Experiment& e) {
  const std::size_t P = d.demand.cells();
  DemandTensor out;
  out.start_time = d.demand.time_at(e.test.front().target_index);
  out.values = Tensor(Shape{e.test.size(), d.demand.rows(), d.demand.cols()});
  for (std::size_t k = 0; k < e.test.size(); ++k)
    std::copy_n(e.test[k].target.data(), P, out.values.data() + k * P);
  return out;
}

inline DemandTensor predict_test(const ModelParams& params, const PreparedData& d,
                                 const Experiment& e) {
  DemandTensor out = test_truth(d, e);
  const std::size_t P = d.demand.cells();
  for (std::size_t k = 0; k < e.test.size(); ++k) {
    const Tensor frame =
        predict_frame(params, e.test[k].history, e.test[k].history_1d, d.features.maps);
    std::copy_n(frame.data(), P, out.values.data() + k * P);
  }
  return out;
}

// Historical average over every observed frame before each test target.
inline DemandTensor ha_test(const PreparedData& d, const Experiment& e) {
  DemandTensor out = test_truth(d, e);
  const std::size_t P = d.demand.cells();
  for (std::size_t k = 0; k < e.test.size(); ++k) {
    const Tensor frame = ha_predict(d.demand, d.demand.time_at(e.test[k].target_index));
    std::copy_n(frame.data(), P, out.values.data() + k * P);
  }
  return out;
}

struct RunOutcome {
  TrainResult trained;
  DemandTensor prediction;
  EvalReport report;
};

inline RunOutcome train_and_evaluate(const PreparedData& d, const Experiment& e,
                                     const ArchConfig& arch, const TrainConfig& config,
                                     const EpochCallback& on_epoch = {}) {
  const ArchConfig resolved = resolve_arch(arch, d, e.window);
  TrainConfig tc = config;
  tc.fairness = e.fairness;
  RunOutcome out{train_model(e.train, initial_params(d, resolved, tc.seed), tc,
                             training_context(d, e), on_epoch),
                 {},
                 {}};
  out.prediction = predict_test(out.trained.params, d, e);
  out.report = evaluate(out.prediction, test_truth(d, e), d.field, e.labelings, e.fairness);
  return out;
}

}  // namespace fairst
