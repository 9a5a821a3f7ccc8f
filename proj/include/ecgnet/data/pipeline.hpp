#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/data/batching.hpp"
#include "ecgnet/data/manifest.hpp"
#include "ecgnet/data/payload.hpp"
#include "ecgnet/data/split.hpp"
#include "ecgnet/dsp/scale.hpp"
#include "ecgnet/parallel.hpp"

namespace ecgnet::data {

/// A record after band-pass and resampling, before amplitude scaling.
struct ConditionedRecord {
  RecordMeta meta;
  std::vector<double> samples;
};

inline std::vector<ConditionedRecord> condition_records(const Manifest& manifest, const std::vector<RecordMeta>& records,
                                                        const dsp::PreprocessSpec& spec = {}, std::size_t threads = 0) {
  std::vector<ConditionedRecord> out(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const RawSignal raw = load_signal(manifest, records[i]);
    out[i] = {records[i], dsp::filter_and_resample(raw.samples, raw.fs, spec)};
  });
  return out;
}

/// Scale statistics from the records assigned to the training split only;
/// everything else in `records` is ignored.
inline dsp::ScaleStats training_scale(const std::vector<ConditionedRecord>& records, const SplitAssignment& assignment) {
  std::map<std::string, std::vector<std::span<const double>>> by_db;
  for (const auto& r : records) {
    auto it = assignment.find(r.meta.record_id);
    if (it != assignment.end() && it->second == Split::train) by_db[r.meta.database_id].emplace_back(r.samples);
  }
  return dsp::compute_scale(by_db);
}

inline std::vector<PreparedRecord> apply_scale(const std::vector<ConditionedRecord>& records,
                                               const dsp::ScaleStats& stats) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.meta.record_id, dsp::apply_scale(r.samples, stats.at(r.meta.database_id)), r.meta.label});
  return out;
}

} // namespace ecgnet::data
