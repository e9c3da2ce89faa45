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

// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairst/cli/commands.hpp"
#include "fairst/cli/pipeline.hpp"
#include "fairst/eval/spearman.hpp"
#include "fairst/fairness/losses.hpp"
#include "fairst/fairness/metrics.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/polygon.hpp"
#include "fairst/ingest/trips.hpp"
#include "fairst/model/ha.hpp"
#include "fairst/tensor/adam.hpp"
#include "fairst/tensor/conv.hpp"
#include "fairst/train/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fairst;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

DemandTensor frames(std::size_t steps, std::size_t rows, std::size_t cols,
                    std::vector<double> values) {
  DemandTensor d;
  d.values = Tensor(Shape{steps, rows, cols}, std::move(values));
  return d;
}

// 1. Convolution against nested loops.
Outcome conv_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::size_t rank = 1; rank <= 3; ++rank) {
    std::mt19937_64 rng(1000 + rank);
    std::uniform_int_distribution<std::size_t> ch(1, 4), co(1, 4), kk(0, 2);
    const std::size_t limits[3] = {6, 5, 5};
    for (int trial = 0; trial < 20; ++trial) {
      Shape in{ch(rng)}, ks{co(rng), in[0]};
      for (std::size_t a = 0; a < rank; ++a) {
        in.push_back(std::uniform_int_distribution<std::size_t>(1, limits[a])(rng));
        ks.push_back(2 * kk(rng) + 1);
      }
      const Tensor x = oracle::random_tensor(in, rng);
      const Tensor k = oracle::random_tensor(ks, rng);
      const Tensor b = oracle::random_tensor({ks[0]}, rng);
      const Tensor got = conv::forward(x, k, b, rank);
      const Tensor want = oracle::conv_same(x, k, b, rank);
      if (got.shape() != want.shape()) return {false, "shape mismatch"};
      worst = std::max(worst, oracle::max_relative_error(got, want));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0,
          fmt("60 fixtures, worst relative error %.2e, %.2f s", worst, secs)};
}

// 2. Every parameter gradient of a tiny model, through both regularizers.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  ArchConfig arch;
  arch.window = 12;
  arch.rows = 4;
  arch.cols = 4;
  arch.series_count = 2;
  arch.feature_count = 2;
  arch.filters3d = {2, 1};
  arch.width3d = 2;
  arch.width2d = 2;
  arch.width1d = 2;
  arch.fusion_widths = {3};

  std::mt19937_64 rng(21);
  const Tensor features = oracle::random_tensor({2, 4, 4}, rng);
  std::vector<double> pop(16), w(16);
  for (std::size_t i = 0; i < 16; ++i) {
    pop[i] = 1.0 + static_cast<double>(i % 5);
    const auto k = static_cast<double>(i % 4);
    w[i] = i < 8 ? 0.85 - 0.05 * k : 0.1 + 0.05 * k;
  }
  const DemographicField field = make_field(4, 4, pop, {{"race", w}});
  const std::vector<GroupLabeling> labelings{discretize_groups(field, "race", 0.5)};
  const TrainingContext ctx{&features, &field, &labelings};

  const std::size_t steps = 16;
  DemandTensor demand;
  demand.values = Tensor(Shape{steps, 4, 4});
  std::poisson_distribution<int> noise(2);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < 16; ++i)
      demand.values[t * 16 + i] = (i < 8 ? 8.0 : 2.0) + noise(rng);
  SeriesStack1D series;
  series.names = {"a", "b"};
  series.series = oracle::random_tensor({2, steps}, rng);
  const std::vector<TemporalSlice> slices = make_slices(demand, series, arch.window);
  const std::span<const TemporalSlice> batch(slices.data(), 2);

  ModelParams p = init_params(arch, 4);
  p.demand_scale = 10.0;
  std::size_t checked = 0;
  double worst = 0.0, smallest_gap = 1e300;
  for (RegularizerKind kind : {RegularizerKind::rf, RegularizerKind::individual}) {
    FairnessConfig fc;
    fc.kind = kind;
    fc.lambda = 1.5;
    fc.attributes = {{"race", 1.0, 0.5}};
    const BatchLoss loss = batch_loss(batch, p, fc, ctx, true);
    // The regularizer is |gap| / sum(y), so a positive value means a nonzero gap.
    for (const TemporalSlice& s : batch) {
      const Tensor y = predict_frame(p, s.history, s.history_1d, features);
      const double gap = kind == RegularizerKind::rf
                             ? rf_loss(y.values(), s.target.values(), labelings[0], field).value
                             : if_loss(y.values(), s.target.values(), field, "race").value;
      smallest_gap = std::min(smallest_gap, gap);
    }
    for (std::size_t k = 0; k < p.tensors.size(); ++k)
      for (std::size_t i = 0; i < p.tensors[k].size(); ++i) {
        const double keep = p.tensors[k][i];
        p.tensors[k][i] = keep + 1e-5;
        const double up = batch_loss(batch, p, fc, ctx).total;
        p.tensors[k][i] = keep - 1e-5;
        const double down = batch_loss(batch, p, fc, ctx).total;
        p.tensors[k][i] = keep;
        worst = std::max(worst,
                         oracle::gradient_error(loss.gradients[k][i], (up - down) / 2e-5, 1e-6));
        ++checked;
      }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && smallest_gap > 1e-6 && secs < 60.0,
          fmt("%zu parameter gradients, worst relative error %.2e, smallest |gap| term %.3g, "
              "%.1f s",
              checked, worst, smallest_gap, secs)};
}

// 3. Population-proportional forecasts are fair.
Outcome zero_at_fair() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cells = size(rng) + 2;
    std::vector<double> pop(cells), w(cells), prop(cells), truth(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      pop[i] = 0.05 + 10 * u(rng);
      w[i] = u(rng);
      truth[i] = std::floor(20 * u(rng));
    }
    w[0] = 0.95, w[1] = 0.05;
    const double threshold = 0.2 + 0.6 * u(rng);
    const DemographicField f = make_field(1, cells, pop, {{"race", w}});
    const GroupLabeling l = discretize_groups(f, "race", threshold);
    const double total = 1.0 + 100 * u(rng);
    for (std::size_t i = 0; i < cells; ++i) prop[i] = total * f.population_share[i];
    const DemandTensor pred = frames(1, 1, cells, prop);
    worst = std::max({worst, std::fabs(rfg(pred, l, f)), std::fabs(ifg(pred, f, "race")),
                      rf_loss(prop, truth, l, f).value, if_loss(prop, truth, f, "race").value});
  }
  return {worst < 1e-12, fmt("50 fields, largest |RFG|, |IFG|, rf, if = %.2e", worst)};
}

// 4. Two-cell metric and loss fixtures against direct formulas.
Outcome metric_fixtures() {
  const DemographicField rf_field = make_field(1, 2, {0.6, 0.4}, {{"race", {1.0, 0.0}}});
  const GroupLabeling rl = discretize_groups(rf_field, "race", 0.5);
  const double gap = rfg(frames(2, 1, 2, {10, 3, 14, 5}), rl, rf_field);

  const DemographicField half = make_field(1, 2, {0.5, 0.5}, {{"race", {1.0, 0.0}}});
  const GroupLabeling hl = discretize_groups(half, "race", 0.5);
  const std::vector<double> truth20{15, 5};

  // Direct evaluation: normalized per-capita gaps on one frame.
  const double rf_want = std::fabs(12 / 0.6 - 4 / 0.4) / 20.0;
  const double if_want = std::fabs((1.0 * 10 + 0.0 * 5) / 0.5 - (0.0 * 10 + 1.0 * 5) / 0.5) / 20;
  const double em_want = std::fabs(10 / 0.5 - 5 / 0.5) / 20.0;
  const double d = std::exp(-std::pow(5 / 0.5 - 5 / 0.5, 2));
  const double pw_want = std::pow(d * (2.5 / 0.5 - 1.0 / 0.5) / 10.0, 2);

  const double rf = rf_loss(std::vector<double>{12, 4}, truth20, rl, rf_field).value;
  const double ifv = if_loss(std::vector<double>{10, 5}, truth20, half, "race").value;
  const double em = em_loss(std::vector<double>{10, 5}, truth20, hl, half).value;
  const double pw =
      pairwise_loss(std::vector<double>{2.5, 1.0}, std::vector<double>{5, 5}, hl, half).value;
  const double err = std::max({std::fabs(rf - rf_want), std::fabs(ifv - if_want),
                               std::fabs(em - em_want), std::fabs(pw - pw_want)});
  return {gap == 10.0 && err <= 1e-12,
          fmt("RFG %.17g; rf %.6g if %.6g em %.6g pairwise %.6g; worst deviation %.2e", gap, rf,
              ifv, em, pw, err)};
}

// 5 and 6. Gap closure on the synthetic biased city.
struct SweepRun {
  std::uint64_t seed;
  double lambda, mae, ifg;
};

std::vector<SweepRun> synthetic_sweep(double& seconds) {
  const auto t0 = Clock::now();
  std::vector<SweepRun> runs;
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig sc;
    sc.seed = seed;
    const SyntheticCity city = generate_city(sc);
    const PreparedData d = prepare_data(raw_inputs(city), synthetic_options(city, 72));
    for (double lambda : {0.0, 1.0, 1.5, 2.0}) {
      FairnessConfig fc;
      fc.kind = RegularizerKind::individual;
      fc.lambda = lambda;
      fc.attributes = {{sc.attribute, 1.0, sc.threshold}};
      const Experiment e = make_experiment(d, 24, fc);
      TrainConfig tc;
      tc.epochs = 12;
      tc.batch_size = 32;
      tc.seed = seed;
      tc.threads = 1;
      const RunOutcome out = train_and_evaluate(d, e, ArchConfig{}, tc);
      runs.push_back({seed, lambda, out.report.mae, out.report.attributes.at(0).ifg});
      std::printf("  seed %llu lambda %.1f: MAE %.4f IFG %.3f\n",
                  static_cast<unsigned long long>(seed), lambda, out.report.mae,
                  out.report.attributes.at(0).ifg);
      std::fflush(stdout);
    }
  }
  seconds = seconds_since(t0);
  return runs;
}

Outcome gap_closure(const std::vector<SweepRun>& runs, double seconds) {
  int seeds_ok = 0;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const SweepRun* base = nullptr;
    for (const SweepRun& r : runs)
      if (r.seed == seed && r.lambda == 0.0) base = &r;
    if (!base) return {false, "missing lambda 0 run"};
    bool ok = false;
    double best_ratio = 1e300;
    for (const SweepRun& r : runs) {
      if (r.seed != seed || r.lambda == 0.0) continue;
      const double ratio = std::fabs(r.ifg) / std::fabs(base->ifg);
      const double mae_rise = r.mae / base->mae - 1.0;
      if (ratio <= 0.2 && mae_rise <= 0.25) {
        ok = true;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    seeds_ok += ok;
    detail += fmt("seed %llu %s", static_cast<unsigned long long>(seed),
                  ok ? fmt("closes to %.1f%%; ", 100 * best_ratio).c_str() : "no lambda qualifies; ");
  }
  detail += fmt("%d/3 seeds, %.0f s", seeds_ok, seconds);
  return {seeds_ok >= 2 && seconds < 15 * 60, detail};
}

Outcome endpoint_shrinks(const std::vector<SweepRun>& runs) {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    double at0 = NAN, at_max = NAN;
    for (const SweepRun& r : runs) {
      if (r.seed != seed) continue;
      if (r.lambda == 0.0) at0 = r.ifg;
      if (r.lambda == 2.0) at_max = r.ifg;
    }
    const bool shrinks = std::fabs(at_max) < std::fabs(at0);
    ok = ok && shrinks;
    detail += fmt("%sseed %llu |IFG| %.3f -> %.3f", detail.empty() ? "" : "; ",
                  static_cast<unsigned long long>(seed), std::fabs(at0), std::fabs(at_max));
  }
  return {ok, detail};
}

// 7. Rank correlation.
Outcome spearman_checks() {
  std::vector<double> x, up, down;
  for (int i = 1; i <= 12; ++i) {
    x.push_back(i);
    up.push_back(std::log(i) + 3);
    down.push_back(100.0 / i);
  }
  const double rp = spearman(x, up).rho, rn = spearman(x, down).rho;
  const std::vector<double> tx{1, 2, 2, 3, 4, 5}, ty{2, 1, 4, 4, 6, 3};
  const SpearmanResult got = spearman(tx, ty);
  const oracle::RankTest want = oracle::brute_force_spearman(tx, ty);
  const double err = std::max(std::fabs(got.rho - want.rho), std::fabs(got.p_value - want.p));
  return {rp == 1.0 && rn == -1.0 && err <= 1e-12,
          fmt("monotone %.17g / %.17g; tie fixture rho %.6f p %.6f, deviation %.2e", rp, rn,
              got.rho, got.p_value, err)};
}

// 8. Historical average on an exactly weekly-periodic history.
Outcome ha_baseline() {
  const UtcSeconds start = *parse_rfc3339("2018-01-01T00:00:00Z");
  const std::size_t weeks = 3, P = 12, T = weeks * 168;
  std::mt19937_64 rng(81);
  std::poisson_distribution<int> counts(4);
  std::vector<double> week(168 * P);
  for (double& v : week) v = counts(rng);
  DemandTensor d;
  d.start_time = start;
  d.values = Tensor(Shape{T, 3, 4});
  for (std::size_t t = 0; t < T; ++t)
    std::copy_n(week.data() + (t % 168) * P, P, d.values.data() + t * P);
  // Hold out the final 48 hours.
  const std::size_t held = 48;
  double err = 0.0;
  for (std::size_t t = T - held; t < T; ++t) {
    const Tensor f = ha_predict(d, d.time_at(t));
    for (std::size_t i = 0; i < P; ++i) err += std::fabs(f[i] - d.values[t * P + i]);
  }
  const double mae = err / static_cast<double>(held * P);
  return {mae == 0.0, fmt("MAE %.3g over %zu held-out hours", mae, held)};
}

// 9. Learning-rate schedule.
Outcome lr_schedule() {
  const double a = lr_at(0), b = lr_at(4999), c = lr_at(5000), e = lr_at(10000);
  return {a == 0.005 && b == 0.005 && c == 0.0048 && e == 0.004608,
          fmt("%.17g %.17g %.17g %.17g", a, b, c, e)};
}

// 10. Two full train + evaluate runs give identical reports.
Outcome pipeline_determinism() {
  const fs::path dir = fs::temp_directory_path() / "fairst_acceptance_determinism";
  fs::remove_all(dir);
  std::ostringstream log;
  cmd_synth(Config::parse("synth.seed = 5\n"), dir / "city", log);
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    Config c = Config::load(dir / "city" / "city.cfg");
    c.set("paths.output", (dir / ("run" + std::to_string(run))).string());
    c.set("train.epochs", "2");
    c.set("train.threads", "1");
    c.set("fairness.lambda", "1");
    const RunConfig rc = run_config_from(c);
    cmd_prepare(rc, log);
    cmd_train(rc, log);
    cmd_evaluate(rc, log);
    for (const char* name : {"report.csv", "report_truth.csv", "report_ha.csv"})
      reports[run] += read_file(rc.output / name);
  }
  fs::remove_all(dir);
  return {!reports[0].empty() && reports[0] == reports[1],
          fmt("%zu report bytes per run, %s", reports[0].size(),
              reports[0] == reports[1] ? "identical" : "different")};
}

// 11. Ingestion conserves counts, population and area.
Outcome ingestion_conservation() {
  const double mlat = kEarthRadiusM * std::numbers::pi / 180.0;
  const double lat0 = 47.6, lon0 = -122.35;
  auto grid = [&](double width, double height) {
    const double max_lat = lat0 + height / mlat;
    const double mlon = mlat * std::cos(0.5 * (lat0 + max_lat) * std::numbers::pi / 180.0);
    return build_grid({lat0, lon0, max_lat, lon0 + width / mlon}, 1000.0);
  };
  const UtcSeconds start = *parse_rfc3339("2018-01-01T00:00:00Z");

  const GridSpec g = grid(5000, 3000);
  std::mt19937_64 rng(111);
  std::uniform_real_distribution<double> x(-800, 5800), y(-800, 3800);
  std::uniform_int_distribution<int> sec(-7200, 50 * 3600);
  std::vector<TripRecord> trips;
  std::size_t inside = 0;
  for (int i = 0; i < 1000; ++i) {
    const double px = x(rng), py = y(rng);
    const int s = sec(rng);
    const LatLon p = g.unproject({px, py});
    trips.push_back({start + s, p.lat, p.lon});
    inside += px >= 0 && px <= 5000 && py >= 0 && py <= 3000 && s >= 0 && s < 48 * 3600;
  }
  const TripAggregation agg = aggregate_trips(trips, g, start, start + 48 * 3600);
  double total = 0.0;
  for (double v : agg.demand.values.values()) total += v;
  const bool trips_ok = total == static_cast<double>(inside);

  auto rect = [&](const GridSpec& gs, double x0, double y0, double x1, double y1) {
    std::vector<LatLon> r;
    for (auto [px, py] : {std::pair{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}})
      r.push_back(gs.unproject({px, py}));
    return r;
  };
  const GridSpec g4 = grid(4000, 4000);
  std::uniform_real_distribution<double> pos(0, 3200), extent(150, 800), frac(0, 1);
  std::vector<DemographicUnit> units;
  double people = 0.0;
  for (int i = 0; i < 40; ++i) {
    const double ux = pos(rng), uy = pos(rng), w = extent(rng), h = extent(rng);
    const double n = 5000 * frac(rng);
    units.push_back({{LatLonPolygon{rect(g4, ux, uy, ux + w, uy + h), {}}}, n, {{"race", frac(rng)}}});
    people += n;
  }
  const DemographicField f = allocate_demographics(units, g4);
  double allocated = 0.0;
  for (double v : f.cell_population) allocated += v;
  const double pop_err = std::fabs(allocated - people) / people;

  const GridSpec g3 = grid(3000, 3000);
  const std::vector<oracle::Pt> tri{{250, 150}, {2850, 900}, {700, 2750}};
  std::vector<LatLon> ring;
  for (const auto& p : tri) ring.push_back(g3.unproject({p.x, p.y}));
  std::vector<double> got(9, 0.0);
  for (const CellFraction& cf : cell_fractions(g3, make_plane_polygon(g3, ring)))
    got[cf.cell] = cf.fraction;
  const auto want = oracle::monte_carlo_fractions(tri, 1000.0, 3, 3, 4'000'000, 113);
  double clip_err = 0.0;
  for (std::size_t i = 0; i < 9; ++i) clip_err = std::max(clip_err, std::fabs(got[i] - want[i]));

  return {trips_ok && pop_err <= 1e-6 && clip_err <= 1e-3,
          fmt("trips %.0f of %zu in range; population relative error %.2e; clip deviation %.2e",
              total, inside, pop_err, clip_err)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "conv_oracle", conv_oracle);
  report(2, "gradient_check", gradient_check);
  report(3, "zero_at_fair", zero_at_fair);
  report(4, "metric_fixtures", metric_fixtures);

  std::vector<SweepRun> runs;
  double sweep_seconds = 0.0;
  std::string sweep_error;
  try {
    runs = synthetic_sweep(sweep_seconds);
  } catch (const std::exception& e) {
    sweep_error = std::string("exception: ") + e.what();
  }
  auto after_sweep = [&](const std::function<Outcome()>& check) {
    return [&, check]() -> Outcome {
      if (!sweep_error.empty()) return {false, sweep_error};
      return check();
    };
  };
  report(5, "gap_closure", after_sweep([&] { return gap_closure(runs, sweep_seconds); }));
  report(6, "lambda_endpoint", after_sweep([&] { return endpoint_shrinks(runs); }));

  report(7, "spearman", spearman_checks);
  report(8, "ha_baseline", ha_baseline);
  report(9, "lr_schedule", lr_schedule);
  report(10, "pipeline_determinism", pipeline_determinism);
  report(11, "ingestion_conservation", ingestion_conservation);

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
