#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ecgnet/bytes.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/nn/params.hpp"

namespace ecgnet::nn {

// Checkpoint layout: a text header, then every array as raw little-endian
// IEEE-754 binary64 in header order.
//
//   ECGNET-CHECKPOINT
//   version 1
//   config {"window_size":512,...}
//   meta {...}
//   array conv1.kernel 3 5 1 8
//   ...
//   end
//   <binary payload>

inline constexpr const char* kCheckpointMagic = "ECGNET-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  ModelParams<T> params;
  nlohmann::json meta = nlohmann::json::object();
};

template <typename T>
void write_checkpoint(std::ostream& os, const ModelParams<T>& params,
                      const nlohmann::json& meta = nlohmann::json::object()) {
  os << kCheckpointMagic << '\n' << "version " << kCheckpointVersion << '\n';
  os << "config " << nlohmann::json(params.config()).dump() << '\n';
  os << "meta " << meta.dump() << '\n';
  for (const auto& a : params.arrays()) {
    os << "array " << a.name << ' ' << a.shape.size();
    for (auto d : a.shape) os << ' ' << d;
    os << '\n';
  }
  os << "end\n";
  for (const auto& a : params.arrays())
    for (T v : a.data) bytes::put_f64(os, static_cast<double>(v));
  if (!os) throw DataError("failed writing checkpoint");
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params,
                     const nlohmann::json& meta = nlohmann::json::object()) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(os, params, meta);
}

template <typename T>
Checkpoint<T> read_checkpoint(std::istream& is) {
  auto next_line = [&is](const char* what) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError(std::string("checkpoint truncated before ") + what);
    return line;
  };
  if (next_line("magic") != kCheckpointMagic) throw FormatError("not a checkpoint file");
  if (next_line("version") != "version " + std::to_string(kCheckpointVersion))
    throw FormatError("unsupported checkpoint version");

  const std::string config_line = next_line("config");
  if (config_line.rfind("config ", 0) != 0) throw FormatError("checkpoint missing config line");
  ArchitectureConfig config;
  nlohmann::json meta;
  try {
    config = nlohmann::json::parse(config_line.substr(7)).get<ArchitectureConfig>();
    const std::string meta_line = next_line("meta");
    if (meta_line.rfind("meta ", 0) != 0) throw FormatError("checkpoint missing meta line");
    meta = nlohmann::json::parse(meta_line.substr(5));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint<T> ck{ModelParams<T>(config), meta};
  auto& arrays = ck.params.arrays();
  for (auto& a : arrays) {
    std::istringstream ls(next_line("array list"));
    std::string tag, name;
    std::size_t rank = 0;
    ls >> tag >> name >> rank;
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) ls >> d;
    if (!ls || tag != "array" || name != a.name || shape != a.shape)
      throw FormatError("checkpoint array '" + name + "' does not match the architecture (expected '" + a.name + "')");
  }
  if (next_line("end") != "end") throw FormatError("checkpoint has extra arrays");
  for (auto& a : arrays)
    for (T& v : a.data) v = static_cast<T>(bytes::get_f64(is));
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint payload");
  return ck;
}

template <typename T = double>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("checkpoint '" + path.string() + "' not found");
  return read_checkpoint<T>(is);
}

} // namespace ecgnet::nn
