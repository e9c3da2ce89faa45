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

// Run configuration: a flat `key = value` file with dotted keys and `#`
// comments, overridable from the command line with `--set key=value`.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairst/cli/pipeline.hpp"
#include "fairst/cli/synth.hpp"
#include "fairst/error.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/ingest/features.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/ingest/time.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/tensor/archive.hpp"
#include "fairst/train/train.hpp"

namespace fairst {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "config") {
    Config cfg;
    std::size_t start = 0, line_no = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string_view line(text.data() + start, end - start);
      start = end + 1;
      ++line_no;
      if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      require(eq != std::string_view::npos, ErrorKind::config, source, ":", line_no,
              ": expected 'key = value'");
      const std::string key(detail::trim(line.substr(0, eq)));
      require(!key.empty(), ErrorKind::config, source, ":", line_no, ": empty key");
      require(cfg.values_.count(key) == 0, ErrorKind::config, source, ":", line_no,
              ": duplicate key '", key, "'");
      cfg.values_[key] = std::string(detail::trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::config, "config file ", path.string(),
            " not found");
    return parse(read_file(path), path.string());
  }

  // Applies one `key=value` override.
  void set(std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    require(eq != std::string_view::npos, ErrorKind::config, "override '", assignment,
            "' is not key=value");
    const std::string key(detail::trim(assignment.substr(0, eq)));
    require(!key.empty(), ErrorKind::config, "override '", assignment, "' has an empty key");
    values_[key] = std::string(detail::trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& text(const std::string& key) const {
    auto it = values_.find(key);
    require(it != values_.end(), ErrorKind::config, "missing config key '", key, "'");
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const {
    const std::string& v = text(key);
    const auto d = csv::to_double(v);
    require(d.has_value(), ErrorKind::config, "config key '", key, "': '", v,
            "' is not a number");
    return *d;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t count(const std::string& key) const {
    const std::string& v = text(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size() && !v.empty(), ErrorKind::config,
            "config key '", key, "': '", v, "' is not a nonnegative integer");
    return out;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorKind::config, "config key '", key, "': '", v, "' is not a boolean");
  }

  UtcSeconds time(const std::string& key) const {
    const std::string& v = text(key);
    const auto t = parse_rfc3339(v);
    require(t.has_value(), ErrorKind::config, "config key '", key, "': '", v,
            "' is not an RFC 3339 timestamp");
    return *t;
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    for (const std::string& item : detail::split_list(text(key)))
      if (const auto t = detail::trim(item); !t.empty()) out.emplace_back(t);
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : list(key)) {
      const auto d = csv::to_double(item);
      require(d.has_value(), ErrorKind::config, "config key '", key, "': '", item,
              "' is not a number");
      out.push_back(*d);
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (double d : numbers(key)) {
      require(d >= 0.0 && d == static_cast<double>(static_cast<std::size_t>(d)),
              ErrorKind::config, "config key '", key, "' must list nonnegative integers");
      out.push_back(static_cast<std::size_t>(d));
    }
    return out;
  }

  // Keys under `prefix.` (e.g. every `features.<name>.path`).
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& entry : values_)
      if (entry.first.rfind(prefix, 0) == 0) out.push_back(entry.first);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct FeatureSource {
  std::string name;
  std::filesystem::path path;
  RasterMode mode = RasterMode::count;
};

struct RunConfig {
  // paths.*
  std::filesystem::path trips;
  std::filesystem::path demographics;
  std::filesystem::path weather;
  std::vector<FeatureSource> features;  // features.<name>.path / .mode
  std::filesystem::path output;
  // grid.*
  BoundingBox bbox;
  double cell_size_m = 1000.0;
  // data.*
  UtcSeconds start = 0;
  UtcSeconds end = 0;
  UtcSeconds train_end = 0;
  std::vector<std::string> series_names;
  std::size_t window = kDefaultWindow;
  // arch.*, train.*, fairness.*
  ArchConfig arch;
  TrainConfig train;
  // sweep.*, predict.*, eval.*
  std::vector<double> sweep_lambdas;
  std::vector<UtcSeconds> predict_hours;
  bool clamp_export = false;
  bool eval_ha = false;

  std::filesystem::path prepared_path() const { return output / "prepared.fst"; }
  std::filesystem::path checkpoint_path() const { return output / "checkpoint.fst"; }
};

inline FairnessConfig fairness_from(const Config& c) {
  FairnessConfig f;
  try {
    f.kind = parse_regularizer(c.text("fairness.kind", "none"));
  } catch (const Error& e) {
    fail(ErrorKind::config, "fairness.kind: ", e.what());
  }
  f.lambda = c.number("fairness.lambda", 0.0);
  f.p_min = c.number("fairness.p_min", kDefaultPopulationFloor);
  f.y_min = c.number("fairness.y_min", kDefaultDemandFloor);
  const auto names = c.list("fairness.attributes");
  const auto weights = c.numbers("fairness.weights");
  const auto thresholds = c.numbers("fairness.thresholds");
  require(weights.empty() || weights.size() == names.size(), ErrorKind::config,
          "fairness.weights needs one entry per attribute");
  require(thresholds.empty() || thresholds.size() == names.size(), ErrorKind::config,
          "fairness.thresholds needs one entry per attribute");
  for (std::size_t i = 0; i < names.size(); ++i)
    f.attributes.push_back({names[i], weights.empty() ? 1.0 : weights[i],
                            thresholds.empty() ? 0.5 : thresholds[i]});
  require(f.kind == RegularizerKind::none || !f.attributes.empty(), ErrorKind::config,
          "fairness.kind = ", to_string(f.kind), " needs fairness.attributes");
  try {
    f.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  return f;
}

inline ArchConfig arch_from(const Config& c) {
  ArchConfig a;
  if (c.has("arch.filters3d")) a.filters3d = c.counts("arch.filters3d");
  if (c.has("arch.fusion_widths")) a.fusion_widths = c.counts("arch.fusion_widths");
  a.kernel = c.count("arch.kernel", a.kernel);
  a.width3d = c.count("arch.width3d", a.width3d);
  a.width2d = c.count("arch.width2d", a.width2d);
  a.width1d = c.count("arch.width1d", a.width1d);
  a.layers1d = c.count("arch.layers1d", a.layers1d);
  a.layers2d = c.count("arch.layers2d", a.layers2d);
  return a;
}

inline TrainConfig train_from(const Config& c, const std::filesystem::path& output) {
  TrainConfig t;
  t.epochs = c.count("train.epochs", t.epochs);
  t.batch_size = c.count("train.batch_size", t.batch_size);
  t.seed = c.count("train.seed", t.seed);
  t.threads = c.count("train.threads", t.threads);
  t.checkpoint_every = c.count("train.checkpoint_every", 0);
  t.checkpoint_dir = output;
  t.schedule.initial = c.number("train.lr", t.schedule.initial);
  t.schedule.decay_rate = c.number("train.lr_decay", t.schedule.decay_rate);
  t.schedule.decay_steps = c.count("train.lr_decay_steps", t.schedule.decay_steps);
  t.fairness = fairness_from(c);
  try {
    t.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  return t;
}

// Every command but `synth` reads the same run configuration. The grid,
// data period and output directory are always required; raw input paths
// only matter to `prepare`.
inline RunConfig run_config_from(const Config& c) {
  RunConfig r;
  r.output = c.text("paths.output");
  r.trips = c.text("paths.trips", "");
  r.demographics = c.text("paths.demographics", "");
  r.weather = c.text("paths.weather", "");
  for (const std::string& key : c.keys_with_prefix("features.")) {
    const std::string rest = key.substr(9);
    const std::size_t dot = rest.rfind('.');
    require(dot != std::string::npos && dot > 0, ErrorKind::config, "config key '", key,
            "' should be features.<name>.path or features.<name>.mode");
    const std::string name = rest.substr(0, dot), field = rest.substr(dot + 1);
    require(field == "path" || field == "mode", ErrorKind::config, "config key '", key,
            "' should be features.<name>.path or features.<name>.mode");
    if (field != "path") continue;
    FeatureSource f{name, c.text(key), RasterMode::count};
    try {
      f.mode = parse_raster_mode(c.text("features." + name + ".mode", "count"));
    } catch (const Error& e) {
      fail(ErrorKind::config, "features.", name, ".mode: ", e.what());
    }
    r.features.push_back(std::move(f));
  }

  r.bbox.min_lat = c.number("grid.min_lat");
  r.bbox.min_lon = c.number("grid.min_lon");
  r.bbox.max_lat = c.number("grid.max_lat");
  r.bbox.max_lon = c.number("grid.max_lon");
  r.cell_size_m = c.number("grid.cell_size_m");
  require(r.cell_size_m > 0.0, ErrorKind::config, "grid.cell_size_m must be positive");
  require(r.bbox.max_lat > r.bbox.min_lat && r.bbox.max_lon > r.bbox.min_lon,
          ErrorKind::config, "grid bounding box is degenerate");

  r.start = c.time("data.start");
  r.end = c.time("data.end");
  r.train_end = c.time("data.train_end");
  require(r.start < r.train_end && r.train_end < r.end, ErrorKind::config,
          "need data.start < data.train_end < data.end");
  r.series_names = c.list("data.series");
  r.window = c.count("data.window", kDefaultWindow);
  require(r.window >= 1, ErrorKind::config, "data.window must be >= 1");

  r.arch = arch_from(c);
  r.train = train_from(c, r.output);
  r.sweep_lambdas = c.numbers("sweep.lambdas");
  for (double l : r.sweep_lambdas)
    require(l >= 0.0, ErrorKind::config, "sweep.lambdas must be nonnegative");
  for (const std::string& h : c.list("predict.hours")) {
    const auto t = parse_rfc3339(h);
    require(t.has_value() && hour_aligned(*t), ErrorKind::config, "predict.hours entry '", h,
            "' is not an on-the-hour RFC 3339 timestamp");
    r.predict_hours.push_back(*t);
  }
  r.clamp_export = c.flag("predict.clamp", false);
  r.eval_ha = c.flag("eval.ha", false);
  return r;
}

inline SynthConfig synth_from(const Config& c) {
  SynthConfig s;
  s.rows = c.count("synth.rows", s.rows);
  s.cols = c.count("synth.cols", s.cols);
  s.cell_size_m = c.number("synth.cell_size_m", s.cell_size_m);
  s.origin_lat = c.number("synth.origin_lat", s.origin_lat);
  s.origin_lon = c.number("synth.origin_lon", s.origin_lon);
  if (c.has("synth.start")) s.start = c.time("synth.start");
  require(hour_aligned(s.start), ErrorKind::config, "synth.start must be on the hour");
  s.hours = c.count("synth.hours", s.hours);
  s.bias = c.number("synth.bias", s.bias);
  s.mean_cell_rate = c.number("synth.rate", s.mean_cell_rate);
  s.attribute = c.text("synth.attribute", s.attribute);
  s.threshold = c.number("synth.threshold", s.threshold);
  s.points = c.count("synth.points", s.points);
  s.roads = c.count("synth.roads", s.roads);
  s.seed = c.count("synth.seed", s.seed);
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  return s;
}

}  // namespace fairst
