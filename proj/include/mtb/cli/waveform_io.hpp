#pragma once

// Waveform files: CSV with columns t_seconds, real, imag (sqrt(W)) after a
// commented header carrying dt and n_samples. Values are written with 17
// significant digits, so a write/read round trip is bit-exact.

#include "mtb/signal.hpp"

#include <iosfwd>
#include <string>

namespace mtb::cli {

void write_waveform(std::ostream& out, const SampledSignal& s);
void write_waveform(const std::string& path, const SampledSignal& s);

SampledSignal read_waveform(std::istream& in, const std::string& name = "waveform");
SampledSignal read_waveform(const std::string& path);

}  // namespace mtb::cli
