#pragma once

// The mtbpulse subcommands. Each writes CSV files (SI units, header row naming
// columns and units) into config.output_dir and returns their paths. Output
// is a pure function of the config, so reruns are byte-identical regardless
// of the job count.

#include "mtb/cli/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mtb::cli {

struct RunContext {
  int jobs = 1;
  /// Progress lines (stderr in the tool); may be empty.
  std::function<void(const std::string&)> log;
};

std::vector<std::string> cmd_soliton_sweep(const RunConfig& config, const RunContext& ctx = {});
std::vector<std::string> cmd_mtb_design(const RunConfig& config, const RunContext& ctx = {});
std::vector<std::string> cmd_em_evaluate(const RunConfig& config, const RunContext& ctx = {});
std::vector<std::string> cmd_propagate(const RunConfig& config, const RunContext& ctx = {});
std::vector<std::string> cmd_bound(const RunConfig& config, const RunContext& ctx = {});

/// Runs fn(0..n-1) on up to `jobs` threads; results keep index order. The
/// first exception (lowest index) is rethrown after all workers finish.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& fn);

}  // namespace mtb::cli

#include "mtb/cli/parallel_map.ipp"
