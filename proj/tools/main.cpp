// mtbpulse: regenerates the pulse-design and energy-modulation results as CSV.

#include "mtb/cli/commands.hpp"
#include "mtb/cli/config.hpp"
#include "mtb/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  using namespace mtb::cli;
  CLI::App app{"Minimum-time-broadening pulse design and energy-modulation link evaluation"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides seed)");
  app.add_option("--jobs", jobs, "worker threads for independent sweep points")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no progress lines on stderr");

  using Command = std::vector<std::string> (*)(const RunConfig&, const RunContext&);
  const std::map<std::string, std::pair<Command, std::string>> commands = {
      {"soliton-sweep", {cmd_soliton_sweep, "truncated-soliton transmit and received durations vs energy"}},
      {"mtb-design", {cmd_mtb_design, "minimum-time-broadening fixed-point designs and waveforms"}},
      {"em-evaluate", {cmd_em_evaluate, "rates, spectral efficiencies and loopback of EM schemes"}},
      {"propagate", {cmd_propagate, "magnitude surface |q(t, z)| of a waveform file"}},
      {"bound", {cmd_bound, "soliton energy-modulation rate bound"}},
  };
  std::map<CLI::App*, Command> by_sub;
  for (const auto& [name, entry] : commands) by_sub[app.add_subcommand(name, entry.second)] = entry.first;
  for (auto& [sub, fn] : by_sub) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = config_path.empty() ? parse_config("{}") : load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed_opt->count()) config.seed = seed;
    RunContext ctx;
    ctx.jobs = jobs;
    if (!quiet) ctx.log = [](const std::string& m) { std::cerr << m << '\n'; };
    for (auto& [sub, fn] : by_sub) {
      if (!sub->parsed()) continue;
      for (const auto& f : fn(config, ctx)) std::cout << f << '\n';
    }
    return 0;
  } catch (const mtb::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mtb::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mtb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
