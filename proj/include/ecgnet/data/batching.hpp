#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"
#include "ecgnet/windowing.hpp"

namespace ecgnet::data {

/// A record after filtering, resampling and scaling, ready for windowing.
struct PreparedRecord {
  std::string record_id;
  std::vector<double> signal;
  std::size_t label = 0;
};

struct AugmentOptions {
  bool sign_flip = true;
  bool random_offset = true;
};

/// Random stream for one record in one epoch, independent of every other
/// record's stream.
inline Rng record_stream(std::uint64_t seed, std::uint64_t epoch, const std::string& record_id) {
  return Rng::derive(seed, epoch, record_id);
}

/// Stream that orders the batches of one epoch.
inline Rng epoch_stream(std::uint64_t seed, std::uint64_t epoch) { return Rng::derive(seed, epoch); }

struct BatchPlan {
  std::vector<std::vector<std::size_t>> batches; // indices into the record list
  std::vector<std::string> skipped;              // ids of records shorter than one window
};

/// Sorts records by length (ties by record id), cuts consecutive groups of at
/// most `batch_size`, then shuffles the group order with `epoch_rng`.
inline BatchPlan plan_batches(const std::vector<PreparedRecord>& records, std::size_t batch_size, std::size_t window,
                              Rng& epoch_rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  BatchPlan plan;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].signal.size() < window)
      plan.skipped.push_back(records[i].record_id);
    else
      order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto la = records[a].signal.size(), lb = records[b].signal.size();
    return la != lb ? la < lb : records[a].record_id < records[b].record_id;
  });
  for (std::size_t i = 0; i < order.size(); i += batch_size)
    plan.batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                              order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  epoch_rng.shuffle(plan.batches);
  return plan;
}

template <typename T>
struct BatchItem {
  std::size_t record = 0; // index into the record list
  Tensor3<T> windows;     // padded to the batch window count
  std::size_t label = 0;
  std::size_t offset = 0;
  bool flipped = false;
  Rng rng{0};             // the record's stream after augmentation draws
};

template <typename T>
struct Batch {
  std::vector<BatchItem<T>> items;
  std::size_t window_count = 0;
};

/// Windows for one planned batch. With augmentation each record draws from
/// record_stream(seed, epoch, id): sign flip first, then offset. Shorter
/// records get all-zero windows prepended up to the batch maximum.
template <typename T>
Batch<T> assemble_batch(const std::vector<PreparedRecord>& records, const std::vector<std::size_t>& indices,
                        std::size_t window, std::uint64_t seed, std::uint64_t epoch, const AugmentOptions& augment) {
  Batch<T> b;
  for (std::size_t idx : indices) {
    const PreparedRecord& r = records[idx];
    BatchItem<T> item;
    item.record = idx;
    item.label = r.label;
    item.rng = record_stream(seed, epoch, r.record_id);
    const Augmented a = random_augment(r.signal, window, item.rng, augment.sign_flip, augment.random_offset);
    item.offset = a.offset;
    item.flipped = a.flipped;
    item.windows = extract_windows<T>(a.signal, window, a.offset);
    b.window_count = std::max(b.window_count, item.windows.windows());
    b.items.push_back(std::move(item));
  }
  for (auto& item : b.items)
    if (item.windows.windows() < b.window_count) item.windows = pad_front(item.windows, b.window_count);
  return b;
}

/// Every batch of one epoch, materialised.
template <typename T = double>
std::vector<Batch<T>> make_batches(const std::vector<PreparedRecord>& records, std::size_t batch_size,
                                   std::size_t window, std::uint64_t seed, std::uint64_t epoch,
                                   const AugmentOptions& augment, std::vector<std::string>* skipped = nullptr) {
  Rng order_rng = epoch_stream(seed, epoch);
  const BatchPlan plan = plan_batches(records, batch_size, window, order_rng);
  if (skipped) *skipped = plan.skipped;
  std::vector<Batch<T>> out;
  for (const auto& idx : plan.batches) out.push_back(assemble_batch<T>(records, idx, window, seed, epoch, augment));
  return out;
}

} // namespace ecgnet::data
