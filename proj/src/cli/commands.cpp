#include "mtb/cli/commands.hpp"

#include "mtb/cli/waveform_io.hpp"
#include "mtb/emsystem.hpp"
#include "mtb/errors.hpp"
#include "mtb/optimizer.hpp"
#include "mtb/soliton.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace mtb::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void say(const RunContext& ctx, const std::string& msg) {
  if (ctx.log) ctx.log(msg);
}

// One CSV file; rows are joined by the caller in a fixed order.
class Csv {
 public:
  Csv(const RunConfig& c, const std::string& name, const std::string& header)
      : path_((fs::path(c.output_dir) / name).string()) {
    fs::create_directories(c.output_dir);
    out_.open(path_);
    if (!out_) throw ConfigError("cannot write " + path_);
    out_ << header << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... f) {
    std::string sep;
    ((out_ << sep << field(f), sep = ","), ...);
    out_ << '\n';
  }

  const std::string& path() const { return path_; }

 private:
  static std::string field(double v) { return num(v); }
  static std::string field(const std::string& s) { return s; }
  static std::string field(const char* s) { return s; }
  static std::string field(int v) { return std::to_string(v); }
  static std::string field(std::size_t v) { return std::to_string(v); }
  static std::string field(bool v) { return v ? "1" : "0"; }

  std::string path_;
  std::ofstream out_;
};

double soliton_rx(const RunConfig& c, double e, const FiberParams& fiber) {
  if (const auto g = c.grid_override())
    return effective_duration(propagate(truncated_soliton(e, c.eps, fiber, *g), fiber, c.ssfm), c.eps);
  return truncated_soliton_rx_duration(e, c.eps, c.w_max, fiber, c.ssfm);
}

// Larger of the transmit and received effective bandwidths.
double design_bandwidth(const RunConfig& c, const SampledSignal& pulse, const FiberParams& fiber) {
  return std::max(effective_bandwidth(pulse, c.eps), effective_bandwidth(propagate(pulse, fiber, c.ssfm), c.eps));
}

DesignOptions design_options(const RunConfig& c) {
  DesignOptions o = c.design;
  o.seed = c.seed;
  o.jobs = 1;  // parallelism is across sweep points
  return o;
}

struct Design {
  ChannelKind channel = ChannelKind::Lossless;
  double energy = 0.0;
  double t_star = 0.0;
  double rx = 0.0;
  double inband = 0.0;
  bool converged = false;
  std::size_t designs = 0;
  std::optional<SampledSignal> pulse;
};

Design run_design(const RunConfig& c, ChannelKind kind, double e, const RunContext& ctx) {
  say(ctx, to_string(kind) + ": designing at E = " + num(e * 1e12) + " pJ");
  const MtbResult m = find_mtb(e, c.w_max, c.eps, c.fiber(kind), c.ssfm, design_options(c), c.fixed_point);
  say(ctx, to_string(kind) + ": E = " + num(e * 1e12) + " pJ, t* = " + num(m.t_star * 1e12) + " ps");
  return {kind, e, m.t_star, m.design.rx_duration, m.design.inband, m.converged, m.history.size(), m.design.pulse};
}

// Energy used for the single dispersion-only row; the channel is linear so
// the design does not depend on it.
constexpr double kLinearEnergy = 1e-12;

std::string waveform_name(const Design& d) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "mtb_%s_%.0ffJ.csv", to_string(d.channel).c_str(), d.energy * 1e15);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

// Reads designs written by mtb-design (waveforms resolved next to the CSV).
std::vector<Design> load_designs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  if (header.size() != 9 || header[0] != "channel" || header[8] != "waveform")
    throw ConfigError(path + ": not an mtb_design.csv file");
  std::vector<Design> out;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) throw ConfigError(path + " line " + std::to_string(n) + ": expected 9 columns");
    Design d;
    try {
      d.channel = parse_channel(f[0]);
      d.energy = std::stod(f[1]);
      d.t_star = std::stod(f[2]);
      d.rx = std::stod(f[3]);
      d.inband = std::stod(f[4]);
      d.converged = f[6] == "1";
      d.designs = std::stoul(f[7]);
    } catch (const std::exception& e) {
      throw ConfigError(path + " line " + std::to_string(n) + ": " + e.what());
    }
    if (!f[8].empty()) d.pulse = read_waveform((fs::path(path).parent_path() / f[8]).string());
    out.push_back(std::move(d));
  }
  return out;
}

bool same_energy(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

constexpr const char* kEmHeader =
    "channel,pulse,M,e_max_J,t_mod_s,w_eff_Hz,rate_bps,se_bps_per_Hz,tbp,bound_bps,symbols,symbol_errors,"
    "max_leakage_J";

void scheme_row(Csv& csv, const RunConfig& c, ChannelKind kind, const char* pulse, const EmScheme& s,
                const RunContext& ctx) {
  const FiberParams fiber = c.fiber(kind);
  const auto msg = random_messages(s.m_levels, c.em_evaluate.symbols, c.seed);
  const LinkReport rep = evaluate_link(s, fiber, c.ssfm, msg);
  say(ctx, to_string(kind) + " " + pulse + " M=" + std::to_string(s.m_levels) + ": " + num(rep.rate * 1e-9) +
               " Gbit/s, " + std::to_string(rep.symbol_errors) + " errors");
  csv.row(to_string(kind), pulse, s.m_levels, s.e_max, s.t_mod, s.w_eff, rep.rate, rep.spectral_efficiency, rep.tbp,
          soliton_em_rate_bound(s.m_levels, c.w_max, c.eps), c.em_evaluate.symbols, rep.symbol_errors,
          rep.max_leakage);
}

}  // namespace

std::vector<std::string> cmd_soliton_sweep(const RunConfig& c, const RunContext& ctx) {
  const auto& es = c.soliton_sweep.energies;
  Csv csv(c, "soliton_sweep.csv", "energy_J,ts_s,rx_lossless_s,rx_lossy_s");
  struct Row {
    double ts, lossless, lossy;
  };
  const auto rows = parallel_map<Row>(es.size(), ctx.jobs, [&](std::size_t i) {
    const double e = es[i];
    const FiberParams lossless = c.fiber(ChannelKind::Lossless);
    Row r{SolitonSpec::from_energy(e, lossless).duration(c.eps), soliton_rx(c, e, lossless),
          soliton_rx(c, e, c.fiber(ChannelKind::Lossy))};
    say(ctx, "soliton E = " + num(e * 1e12) + " pJ done");
    return r;
  });
  for (std::size_t i = 0; i < es.size(); ++i) csv.row(es[i], rows[i].ts, rows[i].lossless, rows[i].lossy);
  return {csv.path()};
}

std::vector<std::string> cmd_mtb_design(const RunConfig& c, const RunContext& ctx) {
  std::vector<std::pair<ChannelKind, double>> points;
  for (ChannelKind k : c.mtb_design.channels) {
    if (k == ChannelKind::DispersionOnly) points.emplace_back(k, kLinearEnergy);
    else
      for (double e : c.mtb_design.energies) points.emplace_back(k, e);
  }
  const auto designs = parallel_map<Design>(points.size(), ctx.jobs, [&](std::size_t i) {
    return run_design(c, points[i].first, points[i].second, ctx);
  });
  std::vector<std::string> files;
  Csv csv(c, "mtb_design.csv", "channel,energy_J,t_star_s,rx_s,inband,w_eff_Hz,converged,designs,waveform");
  files.push_back(csv.path());
  for (const Design& d : designs) {
    std::string wf;
    if (c.mtb_design.waveforms) {
      wf = waveform_name(d);
      write_waveform((fs::path(c.output_dir) / wf).string(), *d.pulse);
      files.push_back((fs::path(c.output_dir) / wf).string());
    }
    csv.row(to_string(d.channel), d.energy, d.t_star, d.rx, d.inband, design_bandwidth(c, *d.pulse, c.fiber(d.channel)),
            d.converged, d.designs, wf);
  }
  return files;
}

std::vector<std::string> cmd_em_evaluate(const RunConfig& c, const RunContext& ctx) {
  const auto& cfg = c.em_evaluate;
  std::vector<Design> known;
  if (cfg.mtb_designs) known = load_designs(*cfg.mtb_designs);

  auto find_known = [&](ChannelKind kind, double e) -> const Design* {
    for (const Design& d : known)
      if (d.channel == kind && (kind == ChannelKind::DispersionOnly || same_energy(d.energy, e))) return &d;
    return nullptr;
  };
  // Designs at the requested energies, reusing loaded ones; `need_pulse`
  // forces a rerun when a loaded row has no waveform.
  auto designs_at = [&](ChannelKind kind, const std::vector<double>& es, bool need_pulse) {
    return parallel_map<Design>(es.size(), ctx.jobs, [&](std::size_t i) {
      if (const Design* d = find_known(kind, es[i]); d && (!need_pulse || d->pulse)) return *d;
      return run_design(c, kind, es[i], ctx);
    });
  };

  Csv csv(c, "em_evaluate.csv", kEmHeader);
  Csv curves(c, "em_curves.csv", "channel,pulse,energy_J,t_s");
  for (ChannelKind kind : cfg.channels) {
    const FiberParams fiber = c.fiber(kind);

    // Soliton: duration curve max(T_s, received) for OOK, maximal energy for
    // M >= 4 (the lowest level is the widest and governs t_mod).
    DurationCurve sol;
    sol.energies = cfg.soliton_energies;
    std::sort(sol.energies.begin(), sol.energies.end());
    sol.durations = parallel_map<double>(sol.energies.size(), ctx.jobs, [&](std::size_t i) {
      const double e = sol.energies[i];
      return std::max(SolitonSpec::from_energy(e, fiber).duration(c.eps), soliton_rx(c, e, fiber));
    });
    for (std::size_t i = 0; i < sol.energies.size(); ++i)
      curves.row(to_string(kind), "soliton", sol.energies[i], sol.durations[i]);
    for (int m : cfg.levels) {
      const double e_max =
          m == 2 ? select_levels(2, sol).e_max : max_soliton_energy(c.w_max, c.eps, fiber);
      scheme_row(csv, c, kind, "soliton", soliton_scheme(m, e_max, c.w_max, c.eps, fiber, c.ssfm), ctx);
    }

    // MTB: fixed-point durations over the energy list, anchored at E = 0 by
    // the dispersion-only design.
    if (cfg.mtb_energies.empty()) continue;
    std::vector<double> es = cfg.mtb_energies;
    std::sort(es.begin(), es.end());
    const auto curve_designs = designs_at(kind, es, false);
    const Design linear = designs_at(ChannelKind::DispersionOnly, {kLinearEnergy}, false).front();
    DurationCurve mtb;
    mtb.energies.push_back(0.0);
    mtb.durations.push_back(linear.t_star);
    for (const Design& d : curve_designs) {
      mtb.energies.push_back(d.energy);
      mtb.durations.push_back(d.t_star);
    }
    for (std::size_t i = 0; i < mtb.energies.size(); ++i)
      curves.row(to_string(kind), "mtb", mtb.energies[i], mtb.durations[i]);
    for (int m : cfg.levels) {
      const LevelChoice choice = select_levels(m, mtb);
      std::vector<double> level_e;
      for (double e : energy_levels(m, choice.e_max))
        if (e > 0.0) level_e.push_back(e);
      for (const Design& d : curve_designs)
        if (d.pulse) known.push_back(d);
      const auto level_designs = designs_at(kind, level_e, true);
      std::vector<SampledSignal> pulses;
      for (const Design& d : level_designs) pulses.push_back(*d.pulse);
      scheme_row(csv, c, kind, "mtb", make_scheme(m, choice.e_max, std::move(pulses), fiber, c.ssfm, c.eps), ctx);
    }
  }
  return {csv.path(), curves.path()};
}

std::vector<std::string> cmd_propagate(const RunConfig& c, const RunContext& ctx) {
  const auto& cfg = c.propagate;
  if (cfg.waveform.empty()) throw ConfigError("propagate: no waveform file configured (propagate/waveform)");
  const SampledSignal input = read_waveform(cfg.waveform);
  const FiberParams fiber = c.fiber(cfg.channel);
  std::vector<double> z;
  for (int i = 0; i < cfg.z_points; ++i) z.push_back(fiber.length_km * i / (cfg.z_points - 1));
  say(ctx, "propagating " + cfg.waveform + " over " + to_string(cfg.channel));
  const auto snaps = SplitStepPropagator(input.grid(), fiber, c.ssfm).propagate_snapshots(input, z);

  Csv surface(c, "propagate_surface.csv", "z_m,t_s,magnitude_sqrtW");
  Csv summary(c, "propagate_summary.csv", "z_m,energy_J,duration_s,bandwidth_Hz");
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const double zm = z[i] * 1e3;
    const SampledSignal& s = snaps[i];
    for (std::size_t k = 0; k < s.size(); k += cfg.time_stride) surface.row(zm, s.grid().time(k), std::abs(s[k]));
    const double e = energy(s);
    summary.row(zm, e, e > 0.0 ? effective_duration(s, c.eps) : 0.0, e > 0.0 ? effective_bandwidth(s, c.eps) : 0.0);
  }
  const std::string out = (fs::path(c.output_dir) / "propagate_output.csv").string();
  write_waveform(out, snaps.back());
  return {surface.path(), summary.path(), out};
}

std::vector<std::string> cmd_bound(const RunConfig& c, const RunContext& ctx) {
  Csv csv(c, "bound.csv", "M,w_max_Hz,eps,bound_bps");
  for (int m : c.bound.levels) {
    const double b = soliton_em_rate_bound(m, c.w_max, c.eps);
    say(ctx, "M = " + std::to_string(m) + ": " + num(b * 1e-9) + " Gbit/s");
    csv.row(m, c.w_max, c.eps, b);
  }
  return {csv.path()};
}

}  // namespace mtb::cli
