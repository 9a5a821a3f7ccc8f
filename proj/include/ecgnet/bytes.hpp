#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "ecgnet/error.hpp"

// Little-endian encode/decode helpers for the on-disk formats.
namespace ecgnet::bytes {

template <typename U>
U byteswap_if_big(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
    return r;
  } else {
    return v;
  }
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw FormatError("unexpected end of file");
  return byteswap_if_big(v);
}

inline void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

inline void put_f64(std::ostream& os, double d) {
  auto v = byteswap_if_big(std::bit_cast<std::uint64_t>(d));
  os.write(reinterpret_cast<const char*>(&v), 8);
}

inline double get_f64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw FormatError("unexpected end of file");
  return std::bit_cast<double>(byteswap_if_big(v));
}

} // namespace ecgnet::bytes
