#include "mtb/cli/waveform_io.hpp"

#include "mtb/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace mtb::cli {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& field, const std::string& where) {
  const char* end = field.data() + field.size();
  double v = 0.0;
  const auto r = std::from_chars(field.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(where + ": not a number: '" + field + "'");
  return v;
}

}  // namespace

void write_waveform(std::ostream& out, const SampledSignal& s) {
  const TimeGrid& g = s.grid();
  out << "# mtbpulse waveform, real and imag in sqrt(W)\n";
  out << "# dt_s=" << g17(g.dt()) << "\n";
  out << "# n_samples=" << g.size() << "\n";
  out << "t_seconds,real,imag\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    out << g17(g.time(k)) << ',' << g17(s[k].real()) << ',' << g17(s[k].imag()) << '\n';
}

void write_waveform(const std::string& path, const SampledSignal& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write waveform file " + path);
  write_waveform(out, s);
}

SampledSignal read_waveform(std::istream& in, const std::string& name) {
  double dt = 0.0;
  std::size_t n = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  ComplexVector samples;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = name + " line " + std::to_string(line_no);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# dt_s=", 0) == 0) dt = parse_number(line.substr(7), where);
      else if (line.rfind("# n_samples=", 0) == 0) n = static_cast<std::size_t>(parse_number(line.substr(12), where));
      continue;
    }
    if (!header) {
      if (line != "t_seconds,real,imag") throw ConfigError(where + ": expected header t_seconds,real,imag");
      header = true;
      if (!(dt > 0.0) || n == 0) throw ConfigError(where + ": missing dt or n_samples before the header");
      samples.reserve(n);
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 3) throw ConfigError(where + ": expected 3 columns");
    parse_number(fields[0], where);
    samples.emplace_back(parse_number(fields[1], where), parse_number(fields[2], where));
  }
  if (!header) throw ConfigError(name + ": no data header found");
  if (samples.size() != n)
    throw ConfigError(name + ": " + std::to_string(samples.size()) + " rows but n_samples=" + std::to_string(n));
  try {
    return SampledSignal(TimeGrid(n, dt), std::move(samples));
  } catch (const InvalidArgument& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

SampledSignal read_waveform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read waveform file " + path);
  return read_waveform(in, path);
}

}  // namespace mtb::cli
