#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ecgnet {

struct SignalMeta {
  std::string record_id;
  std::string subject_id;
  std::string database_id;
  std::string lead;
  std::size_t label = 0;
};

/// One ECG lead at its native sampling rate.
struct RawSignal {
  std::vector<double> samples;
  double fs = 0.0;
  SignalMeta meta;

  double duration() const { return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

} // namespace ecgnet
