#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/data/batching.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/metrics.hpp"
#include "ecgnet/nn/adam.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "ecgnet/nn/model.hpp"
#include "ecgnet/parallel.hpp"
#include "ecgnet/train/schedule.hpp"
#include "ecgnet/windowing.hpp"

namespace ecgnet::train {

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

inline nlohmann::json epoch_log_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"lr", e.lr},           {"train_loss", e.train_loss},
          {"val_loss", e.val_loss}, {"val_acc", e.val_acc}, {"seconds", e.seconds}};
}

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 50;
  double learning_rate = 5e-4;
  std::size_t patience = 5;
  double lr_floor = 1e-5;
  data::AugmentOptions augment;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  /// Where to write the state dump if training hits a non-finite value.
  std::filesystem::path dump_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

/// Consecutive items are summed in blocks of this size, and block sums are
/// added in order, whatever the thread count.
inline constexpr std::size_t kReductionBlock = 10;

struct Prediction {
  std::string record_id;
  std::size_t truth = 0;
  std::size_t predicted = 0;
  std::vector<double> probs;
};

struct EvalResult {
  ConfusionMatrix confusion;
  std::vector<Prediction> predictions;
  double mean_loss = 0.0;
  std::vector<std::string> skipped;
};

inline std::size_t argmax(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

/// Eval-mode pass, one record at a time (no padding), offset 0, no sign flip,
/// no dropout.
template <typename T>
EvalResult evaluate(const nn::ModelParams<T>& params, const std::vector<data::PreparedRecord>& records,
                    std::size_t threads = 0) {
  const auto& config = params.config();
  for (const auto& r : records)
    if (r.label >= config.num_classes)
      throw ConfigError("record '" + r.record_id + "' has label " + std::string(rhythm_name(r.label)) +
                        " outside the model's " + std::to_string(config.num_classes) + " classes");

  std::vector<std::size_t> usable;
  EvalResult result{ConfusionMatrix(config.num_classes), {}, 0.0, {}};
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].signal.size() < config.window_size)
      result.skipped.push_back(records[i].record_id);
    else
      usable.push_back(i);
  }

  std::vector<Prediction> preds(usable.size());
  std::vector<double> losses(usable.size());
  parallel_for(usable.size(), threads, [&](std::size_t i) {
    const auto& r = records[usable[i]];
    const Tensor3<T> windows = extract_windows<T>(r.signal, config.window_size, 0);
    const std::vector<T> probs = nn::model_forward(windows, params, nn::Mode::eval);
    Prediction p{r.record_id, r.label, 0, std::vector<double>(probs.begin(), probs.end())};
    p.predicted = argmax(p.probs);
    losses[i] = static_cast<double>(nn::cross_entropy<T>(probs, r.label));
    preds[i] = std::move(p);
  });

  double loss_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    result.confusion.add(preds[i].truth, preds[i].predicted);
    loss_sum += losses[i];
  }
  result.mean_loss = preds.empty() ? 0.0 : loss_sum / static_cast<double>(preds.size());
  result.predictions = std::move(preds);
  return result;
}

template <typename T>
struct TrainResult {
  nn::ModelParams<T> best;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  nn::ModelParams<T> last;
  std::vector<EpochLog> log;
  std::vector<std::string> skipped;
};

namespace detail {

template <typename T>
void dump_state(const TrainOptions& options, const nn::ModelParams<T>& params, const nlohmann::json& info) {
  if (options.dump_dir.empty()) return;
  std::filesystem::create_directories(options.dump_dir);
  nn::save_checkpoint(options.dump_dir / "failed_state.ckpt", params, info);
  std::ofstream(options.dump_dir / "failure.json") << info.dump(2) << '\n';
}

} // namespace detail

/// Trains from `initial`: per epoch, augmented duration-sorted batches with an
/// Adam step per batch (mean loss over the batch), then a validation pass that
/// drives the plateau schedule (loss) and checkpoint selection (accuracy,
/// earliest epoch on ties).
template <typename T>
TrainResult<T> train(nn::ModelParams<T> initial, const std::vector<data::PreparedRecord>& train_set,
                     const std::vector<data::PreparedRecord>& validation_set, const TrainOptions& options) {
  const nn::ArchitectureConfig& config = initial.config();
  const std::size_t window = config.window_size;
  if (options.epochs > 0 && (train_set.empty() || validation_set.empty()))
    throw ConfigError("training needs non-empty training and validation splits");
  for (const auto* set : {&train_set, &validation_set})
    for (const auto& r : *set)
      if (r.label >= config.num_classes)
        throw ConfigError("record '" + r.record_id + "' has a label outside the model's classes");

  TrainResult<T> result;
  result.best = initial;
  nn::ModelParams<T> params = std::move(initial);
  nn::AdamState<T> adam = nn::AdamState<T>::init(params, options.learning_rate);
  PlateauSchedule schedule(options.learning_rate, options.patience, options.lr_floor);

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    adam.learning_rate = schedule.learning_rate();
    Rng order_rng = data::epoch_stream(options.seed, epoch);
    const data::BatchPlan plan = data::plan_batches(train_set, options.batch_size, window, order_rng);
    if (epoch == 1) result.skipped = plan.skipped;

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
      data::Batch<T> batch =
          data::assemble_batch<T>(train_set, plan.batches[b], window, options.seed, epoch, options.augment);
      const std::size_t n = batch.items.size();
      const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
      std::vector<nn::ModelParams<T>> block_grads(blocks);
      std::vector<double> block_loss(blocks, 0.0);

      try {
        parallel_for(blocks, options.threads, [&](std::size_t blk) {
          for (std::size_t i = blk * kReductionBlock; i < std::min(n, (blk + 1) * kReductionBlock); ++i) {
            auto& item = batch.items[i];
            const nn::LstmMasks<T> masks = nn::sample_dropout_masks<T>(config, item.rng);
            nn::BackwardResult<T> r = nn::model_backward(item.windows, params, item.label, &masks);
            if (!std::isfinite(static_cast<double>(r.loss)) || !r.grads.all_finite())
              throw NumericError("non-finite loss or gradient for record '" + train_set[item.record].record_id +
                                 "' in epoch " + std::to_string(epoch));
            if (i == blk * kReductionBlock)
              block_grads[blk] = std::move(r.grads);
            else
              block_grads[blk].axpy(T{1}, r.grads);
            block_loss[blk] += static_cast<double>(r.loss);
          }
        });
      } catch (const NumericError& e) {
        detail::dump_state(options, params, {{"epoch", epoch}, {"batch", b}, {"error", e.what()}});
        throw;
      }

      nn::ModelParams<T> grads = std::move(block_grads[0]);
      for (std::size_t blk = 1; blk < blocks; ++blk) grads.axpy(T{1}, block_grads[blk]);
      grads.scale(T{1} / static_cast<T>(n));
      for (double l : block_loss) loss_sum += l;
      seen += n;

      try {
        nn::adam_step(params, grads, adam);
      } catch (const NumericError& e) {
        detail::dump_state(options, params,
                           {{"epoch", epoch}, {"batch", b}, {"lr", adam.learning_rate}, {"error", e.what()}});
        throw;
      }
      if (!params.all_finite()) {
        detail::dump_state(options, params, {{"epoch", epoch}, {"batch", b}, {"error", "non-finite parameters"}});
        throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch));
      }
    }

    const EvalResult val = evaluate(params, validation_set, options.threads);
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = adam.learning_rate;
    entry.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    entry.val_loss = val.mean_loss;
    entry.val_acc = val.confusion.total() ? accuracy(val.confusion) : 0.0;
    if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.val_loss)) {
      detail::dump_state(options, params, {{"epoch", epoch}, {"error", "non-finite epoch loss"}});
      throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (result.best_epoch == 0 || entry.val_acc > result.best_val_acc) {
      result.best = params;
      result.best_epoch = epoch;
      result.best_val_acc = entry.val_acc;
    }
    schedule.update(entry.val_loss);
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
  }
  result.last = std::move(params);
  return result;
}

/// Builds the model from options.seed, then trains.
template <typename T = double>
TrainResult<T> train(const nn::ArchitectureConfig& config, const std::vector<data::PreparedRecord>& train_set,
                     const std::vector<data::PreparedRecord>& validation_set, const TrainOptions& options) {
  return train(nn::build_model<T>(config, options.seed), train_set, validation_set, options);
}

} // namespace ecgnet::train
