#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "ecgnet/bytes.hpp"
#include "ecgnet/data/manifest.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/signal.hpp"

namespace ecgnet::data {

// Signal payload:
//   offset 0   u32  magic 0x53474345 ("ECGS" in file order)
//   offset 4   u32  version (1)
//   offset 8   u32  sampling rate in millihertz
//   offset 12  u32  sample count n
//   offset 16  n x f32 samples
//   offset 16+4n u32 CRC-32 (zlib polynomial) of bytes [0, 16+4n)
// All fields little-endian.

inline constexpr std::uint32_t kPayloadMagic = 0x53474345u;
inline constexpr std::uint32_t kPayloadVersion = 1;

struct Payload {
  double fs = 0.0;
  std::vector<float> samples;
};

inline std::string encode_payload(double fs, std::span<const float> samples) {
  const double mhz = std::round(fs * 1000.0);
  if (!(mhz > 0.0 && mhz <= 4294967295.0)) throw ConfigError("sampling rate not representable in millihertz");
  if (samples.size() > 0xFFFFFFFFu) throw ConfigError("too many samples for one payload");
  std::ostringstream os(std::ios::binary);
  bytes::put_u32(os, kPayloadMagic);
  bytes::put_u32(os, kPayloadVersion);
  bytes::put_u32(os, static_cast<std::uint32_t>(mhz));
  bytes::put_u32(os, static_cast<std::uint32_t>(samples.size()));
  for (float v : samples) bytes::put_f32(os, v);
  std::string buf = os.str();
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  std::ostringstream tail(std::ios::binary);
  bytes::put_u32(tail, crc);
  return buf + tail.str();
}

inline Payload decode_payload(const std::string& buf, const std::string& what = "payload") {
  if (buf.size() < 20) throw FormatError(what + ": truncated payload");
  std::istringstream is(buf, std::ios::binary);
  if (bytes::get_u32(is) != kPayloadMagic) throw FormatError(what + ": bad magic");
  if (bytes::get_u32(is) != kPayloadVersion) throw FormatError(what + ": unsupported payload version");
  const std::uint32_t mhz = bytes::get_u32(is);
  const std::uint32_t n = bytes::get_u32(is);
  if (buf.size() != 16 + 4 * static_cast<std::size_t>(n) + 4)
    throw FormatError(what + ": length field " + std::to_string(n) + " does not match file size");
  const auto expected = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
  Payload p;
  p.fs = static_cast<double>(mhz) / 1000.0;
  p.samples.resize(n);
  for (float& v : p.samples) v = bytes::get_f32(is);
  if (bytes::get_u32(is) != expected) throw ChecksumError(what + ": checksum mismatch");
  return p;
}

inline void write_payload(const std::filesystem::path& path, double fs, std::span<const float> samples) {
  const std::string buf = encode_payload(fs, samples);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw DataError("failed writing '" + path.string() + "'");
}

inline Payload read_payload(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("signal file '" + path.string() + "' not found");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_payload(buf, path.string());
}

/// Reads a record's payload and checks it against the manifest entry.
inline RawSignal load_signal(const Manifest& manifest, const RecordMeta& meta) {
  const Payload p = read_payload(manifest.resolve(meta));
  if (p.samples.size() != meta.n_samples)
    throw FormatError("record '" + meta.record_id + "': manifest says " + std::to_string(meta.n_samples) +
                      " samples, payload has " + std::to_string(p.samples.size()));
  if (std::abs(p.fs - meta.fs) > 1e-3)
    throw FormatError("record '" + meta.record_id + "': manifest and payload sampling rates differ");
  RawSignal s;
  s.samples.assign(p.samples.begin(), p.samples.end());
  s.fs = p.fs;
  s.meta = {meta.record_id, meta.subject_id, meta.database_id, meta.lead, meta.label};
  for (double v : s.samples)
    if (!std::isfinite(v)) throw FormatError("record '" + meta.record_id + "' contains non-finite samples");
  return s;
}

} // namespace ecgnet::data
