#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/classes.hpp"
#include "ecgnet/error.hpp"

namespace ecgnet::data {

struct RecordMeta {
  std::string record_id;
  std::string subject_id;
  std::string database_id;
  std::size_t label = 0;
  double fs = 0.0;
  std::size_t n_samples = 0;
  std::string path; // relative paths resolve against the manifest directory
  std::string lead;

  double duration_s() const { return static_cast<double>(n_samples) / fs; }

  bool operator==(const RecordMeta&) const = default;
};

struct Manifest {
  std::vector<RecordMeta> records;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const RecordMeta& r) const {
    const std::filesystem::path p(r.path);
    return p.is_absolute() ? p : base_dir / p;
  }
};

inline nlohmann::json record_to_json(const RecordMeta& r) {
  nlohmann::json j;
  j["record_id"] = r.record_id;
  j["subject_id"] = r.subject_id;
  j["database_id"] = r.database_id;
  j["label"] = std::string(rhythm_name(r.label));
  j["fs"] = r.fs;
  j["n_samples"] = r.n_samples;
  j["path"] = r.path;
  j["lead"] = r.lead;
  return j;
}

/// Throws UnknownLabelError for labels outside the class list and
/// FormatError for missing or mistyped fields.
inline RecordMeta record_from_json(const nlohmann::json& j) {
  RecordMeta r;
  try {
    r.record_id = j.at("record_id").get<std::string>();
    r.subject_id = j.value("subject_id", r.record_id);
    r.database_id = j.at("database_id").get<std::string>();
    r.fs = j.at("fs").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.path = j.at("path").get<std::string>();
    r.lead = j.value("lead", std::string{});
    r.label = rhythm_index(j.at("label").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
  if (r.record_id.empty()) throw FormatError("empty record_id");
  if (!(r.fs > 0.0) || !std::isfinite(r.fs)) throw FormatError("record '" + r.record_id + "' has invalid fs");
  if (r.n_samples < 2) throw FormatError("record '" + r.record_id + "' has fewer than two samples");
  return r;
}

/// One JSON object per line; blank lines are ignored. Errors carry file:line.
inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("manifest '" + path.string() + "' not found");
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      m.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const UnknownLabelError& e) {
      throw UnknownLabelError(where + e.what());
    } catch (const DataError& e) {
      throw FormatError(where + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + e.what());
    }
  }
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<RecordMeta>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
  if (!os) throw DataError("failed writing '" + path.string() + "'");
}

} // namespace ecgnet::data
