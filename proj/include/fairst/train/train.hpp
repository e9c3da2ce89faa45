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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/fairness/groups.hpp"
#include "fairst/fairness/losses.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/ingest/demographics.hpp"
#include "fairst/ingest/slices.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/model/fairst.hpp"
#include "fairst/tensor/adam.hpp"
#include "fairst/tensor/autodiff.hpp"

namespace fairst {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  FairnessConfig fairness;
  LearningRateSchedule schedule;
  std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 disables
  std::filesystem::path checkpoint_dir;
  std::size_t threads = 1;  // 1 = strict deterministic mode

  void validate() const {
    require(epochs >= 1, ErrorKind::invalid_input, "epochs must be >= 1");
    require(batch_size >= 1, ErrorKind::invalid_input, "batch size must be >= 1");
    require(threads >= 1, ErrorKind::invalid_input, "threads must be >= 1");
    require(schedule.decay_steps >= 1 && schedule.initial > 0.0,
            ErrorKind::invalid_input, "invalid learning-rate schedule");
    fairness.validate();
  }
};

struct StepRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double accuracy = 0.0;
  double fairness = 0.0;
  double total = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double accuracy = 0.0;  // sample-weighted mean MAE
  double fairness = 0.0;  // sample-weighted mean fairness loss (before lambda)
  double lr = 0.0;        // rate used by the epoch's last step
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;

  // `epoch,acc_loss,fair_loss,lr,seconds`
  std::string to_csv() const {
    std::string out = "epoch,acc_loss,fair_loss,lr,seconds\n";
    for (const EpochRecord& e : epochs)
      out += std::to_string(e.epoch) + "," + csv::format_double(e.accuracy) + "," +
             csv::format_double(e.fairness) + "," + csv::format_double(e.lr) + "," +
             csv::format_double(e.seconds) + "\n";
    return out;
  }
};

// Training inputs shared by every slice: the static 2D feature stack and the
// demographics the fairness loss is measured on.
struct TrainingContext {
  const Tensor* features = nullptr;  // (N, H, W)
  const DemographicField* field = nullptr;
  const std::vector<GroupLabeling>* labelings = nullptr;
};

struct BatchLoss {
  double total = 0.0;
  double accuracy = 0.0;
  double fairness = 0.0;  // mean composite fairness loss, before lambda
  std::vector<Tensor> gradients;  // empty unless requested
};

namespace detail {

struct PartialLoss {
  double accuracy = 0.0;
  double fairness = 0.0;
  std::vector<Tensor> gradients;
};

inline PartialLoss accumulate_samples(std::span<const TemporalSlice* const> samples,
                                      std::size_t batch, const ModelParams& params,
                                      const FairnessConfig& fairness,
                                      const TrainingContext& ctx, bool with_gradients) {
  PartialLoss part;
  if (with_gradients)
    for (const Tensor& t : params.tensors) part.gradients.emplace_back(t.shape());
  const bool regularized = fairness.kind != RegularizerKind::none;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (const TemporalSlice* slice : samples) {
    ad::Tape tape;
    const BoundParams bound = bind_params(tape, params, with_gradients);
    const ad::Var pred =
        fairst_forward(bound, slice->history, slice->history_1d, *ctx.features);
    ad::Var loss = ad::mean_abs_error(pred, slice->target);
    part.accuracy += loss.value()[0];
    if (regularized) {
      const ad::Var fair =
          composite_loss_var(pred, slice->target, fairness, *ctx.field, *ctx.labelings);
      part.fairness += fair.value()[0];
      loss = ad::add(loss, ad::scale(fair, fairness.lambda));
    }
    if (with_gradients) {
      tape.backward(ad::scale(loss, inv_batch));
      for (std::size_t k = 0; k < bound.vars.size(); ++k)
        part.gradients[k] += tape.grad(bound.vars[k]);
    }
  }
  return part;
}

}  // namespace detail

// L = mean_batch MAE + lambda * mean_batch composite fairness loss.
inline BatchLoss batch_loss(std::span<const TemporalSlice* const> batch,
                            const ModelParams& params, const FairnessConfig& fairness,
                            const TrainingContext& ctx, bool with_gradients = false,
                            std::size_t threads = 1) {
  require(!batch.empty(), ErrorKind::invalid_input, "empty batch");
  require(ctx.features && ctx.field && ctx.labelings, ErrorKind::invalid_input,
          "training context is incomplete");
  const std::size_t n = batch.size();
  const std::size_t workers = std::min(threads, n);
  std::vector<detail::PartialLoss> parts(workers);
  if (workers <= 1) {
    parts[0] = detail::accumulate_samples(batch, n, params, fairness, ctx, with_gradients);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      pool.emplace_back([&, w, lo, hi] {
        try {
          parts[w] = detail::accumulate_samples(batch.subspan(lo, hi - lo), n, params,
                                                fairness, ctx, with_gradients);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  BatchLoss out;
  for (detail::PartialLoss& part : parts) {
    out.accuracy += part.accuracy;
    out.fairness += part.fairness;
    if (!with_gradients) continue;
    if (out.gradients.empty()) {
      out.gradients = std::move(part.gradients);
    } else {
      for (std::size_t k = 0; k < out.gradients.size(); ++k)
        out.gradients[k] += part.gradients[k];
    }
  }
  out.accuracy /= static_cast<double>(n);
  out.fairness /= static_cast<double>(n);
  out.total = out.accuracy + fairness.lambda * out.fairness;
  return out;
}

inline BatchLoss batch_loss(std::span<const TemporalSlice> batch, const ModelParams& params,
                            const FairnessConfig& fairness, const TrainingContext& ctx,
                            bool with_gradients = false, std::size_t threads = 1) {
  std::vector<const TemporalSlice*> ptrs;
  for (const TemporalSlice& s : batch) ptrs.push_back(&s);
  return batch_loss(std::span<const TemporalSlice* const>(ptrs), params, fairness, ctx,
                    with_gradients, threads);
}

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Seeded mini-batch Adam training. Slices are reshuffled every epoch; the
// last partial batch is kept. Global step k uses schedule.at(k).
inline TrainResult train_model(std::span<const TemporalSlice> slices,
                               ModelParams params, const TrainConfig& config,
                               const TrainingContext& ctx,
                               const EpochCallback& on_epoch = {}) {
  config.validate();
  require(!slices.empty(), ErrorKind::invalid_input, "no training slices");
  TrainResult result{std::move(params), {}};
  ModelParams& p = result.params;
  AdamState adam = make_adam_state(p.tensors);
  std::mt19937_64 rng(config.seed);
  std::vector<const TemporalSlice*> order;
  for (const TemporalSlice& s : slices) order.push_back(&s);
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size, ++batch_index) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      const std::span<const TemporalSlice* const> batch(order.data() + lo, hi - lo);
      BatchLoss loss = batch_loss(batch, p, config.fairness, ctx, true, config.threads);
      bool finite = std::isfinite(loss.total);
      for (const Tensor& g : loss.gradients) finite = finite && g.all_finite();
      require(finite, ErrorKind::numeric, "non-finite loss or gradient at epoch ",
              epoch, ", batch ", batch_index, " (step ", step, ")");
      const double lr = config.schedule.at(step);
      adam_step(p.tensors, loss.gradients, adam, lr);
      result.log.steps.push_back({step, lr, loss.accuracy, loss.fairness, loss.total});
      const auto weight = static_cast<double>(hi - lo);
      record.accuracy += loss.accuracy * weight;
      record.fairness += loss.fairness * weight;
      record.lr = lr;
      ++step;
    }
    record.accuracy /= static_cast<double>(order.size());
    record.fairness /= static_cast<double>(order.size());
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                         .count();
    result.log.epochs.push_back(record);
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
        !config.checkpoint_dir.empty())
      save_checkpoint(p, config.checkpoint_dir /
                             ("checkpoint_epoch" + std::to_string(epoch) + ".fst"));
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace fairst
