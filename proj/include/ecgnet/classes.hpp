#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "ecgnet/error.hpp"

namespace ecgnet {

/// Rhythm classes in their fixed order. A K-class task uses the first K.
enum class Rhythm : std::size_t { normal = 0, afib = 1, other = 2, noise = 3 };

inline constexpr std::array<std::string_view, 4> kRhythmNames{"normal", "afib", "other", "noise"};

inline std::string_view rhythm_name(std::size_t index) {
  if (index >= kRhythmNames.size()) throw ConfigError("class index out of range");
  return kRhythmNames[index];
}

inline std::size_t rhythm_index(std::string_view name) {
  for (std::size_t i = 0; i < kRhythmNames.size(); ++i)
    if (kRhythmNames[i] == name) return i;
  throw UnknownLabelError("unknown label '" + std::string(name) + "'");
}

} // namespace ecgnet
