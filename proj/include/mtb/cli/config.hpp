#pragma once

// Declarative run configuration for the mtbpulse tool. JSON in the customary
// engineering units (ps, pJ, GHz, ps^2/km); everything is converted to SI on
// ingest. Unknown keys are rejected.

#include "mtb/optimizer.hpp"
#include "mtb/propagator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtb::cli {

struct SolitonSweepConfig {
  std::vector<double> energies;  // J
};

struct MtbDesignConfig {
  std::vector<ChannelKind> channels = {ChannelKind::DispersionOnly, ChannelKind::Lossless, ChannelKind::Lossy};
  std::vector<double> energies;  // J; ignored for dispersion-only (one row)
  bool waveforms = true;
};

struct EmEvaluateConfig {
  std::vector<ChannelKind> channels = {ChannelKind::Lossless, ChannelKind::Lossy};
  std::vector<int> levels = {2, 4};
  std::size_t symbols = 256;
  std::vector<double> soliton_energies;  // J, OOK soliton curve
  std::vector<double> mtb_energies;      // J, MTB t*(E) curve
  /// mtb_design.csv from an earlier run; its designs are reused.
  std::optional<std::string> mtb_designs;
};

struct PropagateConfig {
  std::string waveform;
  ChannelKind channel = ChannelKind::Lossless;
  int z_points = 17;
  std::size_t time_stride = 1;
};

struct BoundConfig {
  std::vector<int> levels = {2, 4, 8, 16};
};

struct RunConfig {
  double eps = 1e-4;
  double w_max = 50e9;  // Hz
  // Base fiber constants; the channel kind chooses which of them apply.
  double beta2 = -21.7;           // ps^2/km
  double gamma = 1.2;             // 1/(W km)
  double alpha_db_per_km = 0.2;   // used by the lossy channel
  double length_km = 80.0;
  SsfmConfig ssfm;
  DesignOptions design;
  FixedPointOptions fixed_point;
  std::optional<double> grid_dt;         // s
  std::optional<std::size_t> grid_size;  // samples
  std::string output_dir = ".";
  std::uint64_t seed = 1;

  SolitonSweepConfig soliton_sweep;
  MtbDesignConfig mtb_design;
  EmEvaluateConfig em_evaluate;
  PropagateConfig propagate;
  BoundConfig bound;

  FiberParams fiber(ChannelKind kind) const;
  /// Grid override if both dt and size are configured.
  std::optional<TimeGrid> grid_override() const;
};

ChannelKind parse_channel(const std::string& name);

/// Parses and validates; throws ConfigError with the offending line when it
/// can be located.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace mtb::cli
