#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ecgnet/classes.hpp"
#include "ecgnet/data/manifest.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/rng.hpp"

namespace ecgnet::data {

enum class Split : std::size_t { train = 0, validation = 1, test = 2 };

inline constexpr std::array<const char*, 3> kSplitNames{"train", "validation", "test"};

inline std::string to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

inline Split split_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (s == kSplitNames[i]) return static_cast<Split>(i);
  throw FormatError("unknown split name '" + s + "'");
}

using SplitAssignment = std::map<std::string, Split>;

struct SplitTargets {
  std::array<double, 3> fraction{0.6, 0.2, 0.2};

  static SplitTargets physionet() { return {{0.6, 0.2, 0.2}}; }
  static SplitTargets cinc() { return {{0.704, 0.148, 0.148}}; }

  void validate() const {
    double sum = 0.0;
    for (double f : fraction) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
};

struct SplitResult {
  SplitAssignment assignment;
  std::vector<std::string> warnings;
};

namespace detail {

struct SubjectGroup {
  std::string subject_id;
  std::size_t records = 0;
  std::array<std::size_t, kRhythmNames.size()> per_class{};
};

inline double squared(double x) { return x * x; }

} // namespace detail

/// Subject-level stratified split, run independently per database.
///
/// Subjects are visited in descending record count (equal counts in an order
/// shuffled by `seed`). Each goes to the split whose total cost
///   sum_s (n_s - t_s N)^2 + sum_{s,c} (n_sc - t_s N_c)^2
/// increases least, where N and N_c are the database totals; exact ties go to
/// the earliest split. All of a subject's records land in one split.
inline SplitResult stratified_subject_split(const Manifest& manifest, const SplitTargets& targets, std::uint64_t seed) {
  targets.validate();
  using detail::SubjectGroup;

  std::map<std::string, std::map<std::string, SubjectGroup>> by_db;
  std::map<std::string, std::string> subject_db;
  for (const auto& r : manifest.records) {
    auto [it, inserted] = subject_db.emplace(r.subject_id, r.database_id);
    if (!inserted && it->second != r.database_id)
      throw ConfigError("subject '" + r.subject_id + "' has records in databases '" + it->second + "' and '" +
                        r.database_id + "'");
    auto& g = by_db[r.database_id][r.subject_id];
    g.subject_id = r.subject_id;
    ++g.records;
    ++g.per_class.at(r.label);
  }

  SplitResult result;
  std::map<std::string, Split> subject_split;
  const double max_target = *std::max_element(targets.fraction.begin(), targets.fraction.end());

  for (auto& [db, subjects] : by_db) {
    std::vector<SubjectGroup> order;
    for (auto& [id, g] : subjects) order.push_back(g);
    Rng rng = Rng::derive(seed, 0, db);
    rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(),
                     [](const SubjectGroup& a, const SubjectGroup& b) { return a.records > b.records; });

    double total = 0.0;
    std::array<double, kRhythmNames.size()> class_total{};
    for (const auto& g : order) {
      total += static_cast<double>(g.records);
      for (std::size_t c = 0; c < class_total.size(); ++c) class_total[c] += static_cast<double>(g.per_class[c]);
    }

    std::array<double, 3> size{};
    std::array<std::array<double, kRhythmNames.size()>, 3> per_class{};
    for (const auto& g : order) {
      if (static_cast<double>(g.records) > (max_target + 0.10) * total)
        result.warnings.push_back("database '" + db + "': subject '" + g.subject_id + "' holds " +
                                  std::to_string(g.records) + " of " + std::to_string(static_cast<std::size_t>(total)) +
                                  " records; split fractions cannot be met");
      std::size_t best = 0;
      double best_delta = 0.0;
      for (std::size_t s = 0; s < 3; ++s) {
        const double t = targets.fraction[s];
        const double n = static_cast<double>(g.records);
        double delta = detail::squared(size[s] + n - t * total) - detail::squared(size[s] - t * total);
        for (std::size_t c = 0; c < class_total.size(); ++c) {
          const double add = static_cast<double>(g.per_class[c]);
          if (add == 0.0) continue;
          delta += detail::squared(per_class[s][c] + add - t * class_total[c]) -
                   detail::squared(per_class[s][c] - t * class_total[c]);
        }
        if (s == 0 || delta < best_delta) {
          best = s;
          best_delta = delta;
        }
      }
      size[best] += static_cast<double>(g.records);
      for (std::size_t c = 0; c < class_total.size(); ++c) per_class[best][c] += static_cast<double>(g.per_class[c]);
      subject_split[g.subject_id] = static_cast<Split>(best);
    }
  }

  for (const auto& r : manifest.records) result.assignment[r.record_id] = subject_split.at(r.subject_id);
  return result;
}

/// "record_id<TAB>split" lines sorted by record id.
inline void write_split_file(const std::filesystem::path& path, const SplitAssignment& a) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& [id, s] : a) os << id << '\t' << to_string(s) << '\n';
  if (!os) throw DataError("failed writing '" + path.string() + "'");
}

inline SplitAssignment read_split_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("split file '" + path.string() + "' not found");
  SplitAssignment a;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'record_id<TAB>split'");
    try {
      a[line.substr(0, tab)] = split_from_string(line.substr(tab + 1));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return a;
}

/// Records of `manifest` assigned to `which`, in manifest order.
inline std::vector<RecordMeta> select_split(const Manifest& manifest, const SplitAssignment& a, Split which) {
  std::vector<RecordMeta> out;
  for (const auto& r : manifest.records) {
    auto it = a.find(r.record_id);
    if (it == a.end()) throw ConfigError("record '" + r.record_id + "' missing from split file");
    if (it->second == which) out.push_back(r);
  }
  return out;
}

} // namespace ecgnet::data
