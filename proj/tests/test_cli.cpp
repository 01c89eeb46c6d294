#include "doctest.h"

#include "mtb/cli/commands.hpp"
#include "mtb/cli/config.hpp"
#include "mtb/cli/waveform_io.hpp"
#include "mtb/errors.hpp"
#include "mtb/soliton.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace mtb;
using namespace mtb::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mtbpulse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> numeric_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) r.push_back(std::stod(f));
    rows.push_back(r);
  }
  return rows;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_tool(const std::string& args) {
  const int status = std::system((std::string(MTBPULSE_PATH) + " -q " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and unit conversion") {
  const RunConfig d = parse_config("{}");
  CHECK(d.eps == 1e-4);
  CHECK(d.w_max == 50e9);
  CHECK(d.length_km == 80.0);
  CHECK(d.soliton_sweep.energies.size() == 18);
  CHECK(d.soliton_sweep.energies.back() == doctest::Approx(1.8e-12));
  CHECK(!d.grid_override());
  CHECK(d.fiber(ChannelKind::DispersionOnly).gamma == 0.0);
  CHECK(d.fiber(ChannelKind::Lossless).alpha_db_per_km == 0.0);
  CHECK(d.fiber(ChannelKind::Lossy).alpha_db_per_km == 0.2);

  const RunConfig c = parse_config(R"({
    "w_max_ghz": 25, "seed": 9,
    "fiber": {"length_km": 40, "beta2_ps2_per_km": -20},
    "grid": {"dt_ps": 2.5, "n_samples": 4096},
    "optimizer": {"gradient": "finite-difference", "fixed_point_tolerance_ps": 0.01},
    "soliton_sweep": {"energies_pj": [0.3, 1.5]},
    "em_evaluate": {"channels": ["lossy"], "levels": [2, 8]}
  })");
  CHECK(c.w_max == 25e9);
  CHECK(c.seed == 9);
  CHECK(c.fiber(ChannelKind::Lossy).length_km == 40.0);
  CHECK(c.beta2 == -20.0);
  REQUIRE(c.grid_override());
  CHECK(c.grid_override()->dt() == doctest::Approx(2.5e-12));
  CHECK(c.grid_override()->size() == 4096);
  CHECK(c.design.gradient == GradientMethod::FiniteDifference);
  CHECK(c.fixed_point.tolerance == doctest::Approx(1e-14));
  CHECK(c.soliton_sweep.energies == std::vector<double>{0.3e-12, 1.5e-12});
  CHECK(c.em_evaluate.channels == std::vector<ChannelKind>{ChannelKind::Lossy});
  CHECK(c.em_evaluate.levels == std::vector<int>{2, 8});
}

TEST_CASE("config errors name the offending key and line") {
  CHECK(error_of("{\n  \"fiber\": {\n    \"gama\": 1.2\n  }\n}") == "config line 3: /fiber/gama is not a recognized key");
  CHECK(error_of("{\"bogus\": 1}").find("/bogus is not a recognized key") != std::string::npos);
  CHECK(error_of("{\n\"eps\": \"small\"}").find("line 2: /eps has the wrong type") != std::string::npos);
  CHECK(error_of("{\"fiber\": {\"beta2_ps2_per_km\": 21.7}}").find("must be negative") != std::string::npos);
  CHECK(error_of("{\"fiber\": {\"length_km\": 0}}").find("/fiber/length_km must be a positive") != std::string::npos);
  CHECK(error_of("{\"grid\": {\"dt_ps\": 1}}").find("given together") != std::string::npos);
  CHECK(error_of("{\"grid\": {\"dt_ps\": 1, \"n_samples\": 1000}}").find("power of two") != std::string::npos);
  CHECK(error_of("{\"bound\": {\"levels\": [3]}}").find("powers of two") != std::string::npos);
  CHECK(error_of("{\"em_evaluate\": {\"channels\": [\"dispersion-only\"]}}").find("nonlinear") != std::string::npos);
  CHECK(error_of("{\"mtb_design\": {\"channels\": [\"lossles\"]}}").find("unknown channel") != std::string::npos);
  CHECK(error_of("{\"soliton_sweep\": {\"energies_pj\": [1, -1]}}").find("positive") != std::string::npos);
  CHECK(error_of("{\"optimizer\": {\"gradient\": \"newton\"}}").find("/optimizer/gradient") != std::string::npos);
  CHECK(error_of("{\"eps\": 1e-4,}").rfind("config: ", 0) == 0);
  CHECK(error_of("[1, 2]").find("must be an object") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("waveform files round-trip bit-exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1e-3);
  const TimeGrid g(512, 0.6180339887e-12);
  ComplexVector v(g.size());
  for (auto& x : v) x = {nd(rng), nd(rng)};
  v[7] = {0.0, -0.0};
  v[9] = {1e-300, -4.9e-324};
  const SampledSignal s(g, v);
  std::stringstream ss;
  write_waveform(ss, s);
  const SampledSignal r = read_waveform(ss);
  CHECK(r.grid() == g);
  CHECK(r.grid().dt() == g.dt());
  for (std::size_t k = 0; k < g.size(); ++k) REQUIRE(r[k] == s[k]);

  const fs::path dir = scratch("waveform");
  write_waveform((dir / "w.csv").string(), s);
  const SampledSignal f = read_waveform((dir / "w.csv").string());
  for (std::size_t k = 0; k < g.size(); ++k) REQUIRE(f[k] == s[k]);

  auto bad = [](const std::string& text) {
    std::stringstream in(text);
    CHECK_THROWS_AS(read_waveform(in), ConfigError);
  };
  bad("t_seconds,real,imag\n0,1,0\n");                                  // no dt / n_samples
  bad("# dt_s=1e-12\n# n_samples=2\nt,re,im\n0,1,0\n1e-12,1,0\n");      // wrong header
  bad("# dt_s=1e-12\n# n_samples=2\nt_seconds,real,imag\n0,1,0\n");     // short
  bad("# dt_s=1e-12\n# n_samples=2\nt_seconds,real,imag\n0,1,0\n1,x,0\n");
  bad("# dt_s=1e-12\n# n_samples=2\nt_seconds,real,imag\n0,1\n1,1,0\n");
}

TEST_CASE("parallel map keeps order and reports the first failure") {
  const std::function<int(std::size_t)> sq = [](std::size_t i) { return int(i * i); };
  for (int jobs : {1, 3, 16}) {
    const auto v = parallel_map<int>(10, jobs, sq);
    for (std::size_t i = 0; i < 10; ++i) CHECK(v[i] == int(i * i));
  }
  CHECK(parallel_map<int>(0, 4, sq).empty());
  const std::function<int(std::size_t)> boom = [](std::size_t i) -> int {
    if (i >= 4) throw InvalidArgument("failed at " + std::to_string(i));
    return 0;
  };
  CHECK_THROWS_WITH_AS(parallel_map<int>(8, 3, boom), "failed at 4", InvalidArgument);
}

TEST_CASE("bound command") {
  RunConfig c = parse_config("{}");
  c.output_dir = scratch("bound").string();
  cmd_bound(c);
  const auto rows = numeric_rows(fs::path(c.output_dir) / "bound.csv");
  REQUIRE(rows.size() == 4);
  CHECK(slurp(fs::path(c.output_dir) / "bound.csv").rfind("M,w_max_Hz,eps,bound_bps\n", 0) == 0);
  // pi^2 W log2 M / ((M - 1)^2 ln^2((2 - eps)/eps))
  const double l = std::log((2 - 1e-4) / 1e-4);
  CHECK(rows[0][3] == doctest::Approx(M_PI * M_PI * 50e9 / (l * l)).epsilon(1e-11));
  CHECK(rows[0][3] == doctest::Approx(5.03e9).epsilon(1e-3));
  CHECK(rows[1][3] == doctest::Approx(1.12e9).epsilon(5e-3));

  c.w_max = 100e9;
  cmd_bound(c);
  const auto twice = numeric_rows(fs::path(c.output_dir) / "bound.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(twice[i][3] == doctest::Approx(2 * rows[i][3]).epsilon(1e-11));
}

TEST_CASE("soliton sweep") {
  RunConfig c = parse_config(R"({"soliton_sweep": {"energies_pj": []}})");
  c.output_dir = scratch("sweep").string();
  cmd_soliton_sweep(c);
  CHECK(slurp(fs::path(c.output_dir) / "soliton_sweep.csv") == "energy_J,ts_s,rx_lossless_s,rx_lossy_s\n");

  c.soliton_sweep.energies = {0.3e-12, 1.2e-12};
  cmd_soliton_sweep(c, {1, {}});
  const std::string serial = slurp(fs::path(c.output_dir) / "soliton_sweep.csv");
  cmd_soliton_sweep(c, {2, {}});
  CHECK(slurp(fs::path(c.output_dir) / "soliton_sweep.csv") == serial);

  const auto rows = numeric_rows(fs::path(c.output_dir) / "soliton_sweep.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][2] <= rows[0][1]);  // weak solitons do not broaden
  CHECK(rows[1][3] == doctest::Approx(338e-12).epsilon(0.02));
}

TEST_CASE("propagate command") {
  const fs::path dir = scratch("propagate");
  RunConfig c = parse_config("{}");
  c.output_dir = (dir / "out").string();
  c.propagate.z_points = 5;
  c.propagate.time_stride = 4;

  SUBCASE("zero input gives a zero surface") {
    write_waveform((dir / "zero.csv").string(), SampledSignal(TimeGrid(1024, 1e-12)));
    c.propagate.waveform = (dir / "zero.csv").string();
    cmd_propagate(c);
    const auto rows = numeric_rows(fs::path(c.output_dir) / "propagate_surface.csv");
    CHECK(rows.size() == 5 * 256);
    for (const auto& r : rows) REQUIRE(r[2] == 0.0);
    CHECK(rows.back()[0] == 80e3);
  }
  SUBCASE("a lossless soliton keeps its magnitude along the fiber") {
    const FiberParams fiber = c.fiber(ChannelKind::Lossless);
    const TimeGrid g = soliton_grid(1.0e-12, 1e-4, 50e9, fiber);
    const double a = soliton_amplitude_for_energy(1.0e-12, fiber);
    write_waveform((dir / "sol.csv").string(), soliton_pulse(a, fiber, g));
    c.propagate.waveform = (dir / "sol.csv").string();
    c.propagate.time_stride = 1;
    cmd_propagate(c);
    const auto rows = numeric_rows(fs::path(c.output_dir) / "propagate_surface.csv");
    REQUIRE(rows.size() == 5 * g.size());
    double worst = 0.0;
    for (std::size_t i = g.size(); i < rows.size(); ++i)
      worst = std::max(worst, std::abs(rows[i][2] - rows[i % g.size()][2]));
    CHECK(worst <= 1e-3 * a);
  }
  SUBCASE("dispersion-only output matches the Gaussian closed form") {
    // |q(t, z)| for q(t, 0) = exp(-t^2 / (2 T0^2)) under pure dispersion.
    const double t0 = 20e-12, b2z = -21.7e-24 * 80.0;
    const TimeGrid g(4096, 0.5e-12);
    ComplexVector v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = 0.01 * std::exp(-g.time(k) * g.time(k) / (2 * t0 * t0));
    const SampledSignal s(g, v);
    write_waveform((dir / "gauss.csv").string(), s);
    c.propagate.waveform = (dir / "gauss.csv").string();
    c.propagate.channel = ChannelKind::DispersionOnly;
    c.propagate.time_stride = 1;
    cmd_propagate(c);
    const SampledSignal out = read_waveform((fs::path(c.output_dir) / "propagate_output.csv").string());
    const double mod2 = t0 * t0 * t0 * t0 + b2z * b2z;
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double t = g.time(k);
      const double expect = 0.01 * t0 / std::pow(mod2, 0.25) * std::exp(-t * t * t0 * t0 / (2 * mod2));
      worst = std::max(worst, std::abs(std::abs(out[k]) - expect));
    }
    CHECK(worst <= 1e-10 * 0.01);
  }
  SUBCASE("missing waveform") {
    CHECK_THROWS_AS(cmd_propagate(c), ConfigError);
  }
}

TEST_CASE("em-evaluate reuses stored designs") {
  // A stored "design" table whose pulses are truncated solitons: exercises
  // loading, curve assembly, level selection and loopback without running
  // the optimizer.
  const fs::path dir = scratch("em");
  const FiberParams fiber = FiberParams::lossless();
  const double e = 1.8e-12;
  const TimeGrid g = soliton_grid(e, 1e-4, 50e9, fiber);
  write_waveform((dir / "p.csv").string(), truncated_soliton(e, 1e-4, fiber, g));
  {
    std::ofstream t(dir / "mtb_design.csv");
    t << "channel,energy_J,t_star_s,rx_s,inband,w_eff_Hz,converged,designs,waveform\n";
    t << "dispersion-only,1e-12,2.855e-10,2.855e-10,0.9999,2.93e10,1,7,\n";
    t << "lossless,1.8e-12,2.4e-10,2.4e-10,0.9999,4.9e10,1,5,p.csv\n";
  }
  RunConfig c = parse_config(R"({"em_evaluate": {"channels": ["lossless"], "levels": [2], "symbols": 16,
                                 "soliton_energies_pj": [1.7, 1.8], "mtb_energies_pj": [1.8]}})");
  c.em_evaluate.mtb_designs = (dir / "mtb_design.csv").string();
  c.output_dir = (dir / "out").string();
  cmd_em_evaluate(c);
  const std::string csv = slurp(fs::path(c.output_dir) / "em_evaluate.csv");
  std::istringstream in(csv);
  std::string header, sol, mtb, extra;
  std::getline(in, header);
  std::getline(in, sol);
  std::getline(in, mtb);
  CHECK(!std::getline(in, extra));
  CHECK(header.rfind("channel,pulse,M,e_max_J,t_mod_s,", 0) == 0);
  CHECK(sol.rfind("lossless,soliton,2,", 0) == 0);
  CHECK(mtb.rfind("lossless,mtb,2,1.8e-12,", 0) == 0);
  const auto field = [](const std::string& row, int i) {
    std::stringstream ss(row);
    std::string f;
    for (int k = 0; k <= i; ++k) std::getline(ss, f, ',');
    return std::stod(f);
  };
  CHECK(field(sol, 6) == doctest::Approx(4.18e9).epsilon(0.02));
  CHECK(field(sol, 11) == 0);
  CHECK(field(sol, 12) <= 4e-4 * 1.8e-12);
  CHECK(field(mtb, 11) == 0);
  const std::string curves = slurp(fs::path(c.output_dir) / "em_curves.csv");
  CHECK(curves.find("lossless,mtb,0,2.855e-10\n") != std::string::npos);

  c.em_evaluate.mtb_designs = (dir / "missing.csv").string();
  CHECK_THROWS_AS(cmd_em_evaluate(c), ConfigError);
}

TEST_CASE("tool exit codes") {
  const fs::path dir = scratch("tool");
  CHECK(run_tool("bound --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "bound.csv"));
  std::ofstream(dir / "bad.json") << "{\"fibre\": {}}";
  CHECK(run_tool("bound --config " + (dir / "bad.json").string()) == 2);
  // A waveform that fills its window overflows on the first snapshot.
  write_waveform((dir / "wide.csv").string(), SampledSignal(TimeGrid(256, 1e-12), ComplexVector(256, 0.01)));
  std::ofstream(dir / "p.json") << "{\"propagate\": {\"waveform\": \"" << (dir / "wide.csv").string() << "\"}}";
  CHECK(run_tool("propagate --out " + (dir / "o").string() + " --config " + (dir / "p.json").string()) == 3);
  CHECK(run_tool("no-such-command") != 0);
  CHECK(run_tool("") != 0);
}
