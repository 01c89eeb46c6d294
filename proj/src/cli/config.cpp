#include "mtb/cli/config.hpp"

#include "mtb/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mtb::cli {

namespace {

using nlohmann::json;

// Line of the first occurrence of "key" in the source text, 0 if absent.
std::size_t line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

// Walks one JSON object, remembering which keys were read so the rest can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path, const std::string& text) : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_.empty() ? "top level" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  void touch(const std::string& key) { seen_.insert(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  double positive(const std::string& key, double fallback, double unit = 1.0) {
    const double v = get<double>(key, fallback / unit);
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be a positive number");
    return v * unit;
  }

  std::vector<double> positive_list(const std::string& key, std::vector<double> fallback, double unit) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    auto v = get<std::vector<double>>(key, {});
    for (double& x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) fail(key, "entries must be positive numbers");
      x *= unit;
    }
    return v;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, path_ + "/" + key, text_);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(item.key(), "is not a recognized key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream msg;
    msg << "config";
    if (const auto line = line_of(text_, key)) msg << " line " << line;
    msg << ": " << path_ << "/" << key << " " << what;
    throw ConfigError(msg.str());
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

std::vector<ChannelKind> channels(Section& s, const std::string& key, std::vector<ChannelKind> fallback) {
  if (!s.has(key)) {
    s.touch(key);
    return fallback;
  }
  std::vector<ChannelKind> out;
  for (const auto& name : s.get<std::vector<std::string>>(key, {})) {
    try {
      out.push_back(parse_channel(name));
    } catch (const ConfigError& e) {
      s.fail(key, e.what());
    }
  }
  return out;
}

std::vector<int> level_list(Section& s, const std::string& key, std::vector<int> fallback) {
  const auto v = s.get<std::vector<int>>(key, fallback);
  for (int m : v)
    if (m < 2 || (m & (m - 1)) != 0) s.fail(key, "entries must be powers of two >= 2");
  return v;
}

std::vector<double> energy_ladder(double lo_pj, double hi_pj, double step_pj) {
  std::vector<double> e;
  const int n = static_cast<int>(std::lround((hi_pj - lo_pj) / step_pj));
  for (int i = 0; i <= n; ++i) e.push_back((lo_pj + i * step_pj) * 1e-12);
  return e;
}

}  // namespace

ChannelKind parse_channel(const std::string& name) {
  if (name == "dispersion-only") return ChannelKind::DispersionOnly;
  if (name == "lossless") return ChannelKind::Lossless;
  if (name == "lossy") return ChannelKind::Lossy;
  throw ConfigError("unknown channel '" + name + "' (dispersion-only, lossless, lossy)");
}

FiberParams RunConfig::fiber(ChannelKind kind) const {
  FiberParams f;
  f.beta2 = beta2;
  f.length_km = length_km;
  f.gamma = kind == ChannelKind::DispersionOnly ? 0.0 : gamma;
  f.alpha_db_per_km = kind == ChannelKind::Lossy ? alpha_db_per_km : 0.0;
  return f;
}

std::optional<TimeGrid> RunConfig::grid_override() const {
  if (grid_dt && grid_size) return TimeGrid(*grid_size, *grid_dt);
  return std::nullopt;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  Section top(root, "", text);
  c.eps = top.get<double>("eps", c.eps);
  if (!(c.eps > 0.0 && c.eps < 1.0)) top.fail("eps", "must lie in (0, 1)");
  c.w_max = top.positive("w_max_ghz", c.w_max, 1e9);
  c.output_dir = top.get<std::string>("output_dir", c.output_dir);
  c.seed = top.get<std::uint64_t>("seed", c.seed);

  {
    Section f = top.child("fiber");
    c.beta2 = f.get<double>("beta2_ps2_per_km", c.beta2);
    if (!(c.beta2 < 0.0)) f.fail("beta2_ps2_per_km", "must be negative (anomalous dispersion)");
    c.gamma = f.positive("gamma_per_w_km", c.gamma);
    c.alpha_db_per_km = f.positive("alpha_db_per_km", c.alpha_db_per_km);
    c.length_km = f.positive("length_km", c.length_km);
    f.finish();
  }
  {
    Section s = top.child("ssfm");
    c.ssfm.max_nonlinear_phase_per_step = s.positive("max_nonlinear_phase_per_step", c.ssfm.max_nonlinear_phase_per_step);
    c.ssfm.max_dz = s.positive("max_dz_km", c.ssfm.max_dz);
    c.ssfm.verify_convergence = s.get<bool>("verify_convergence", c.ssfm.verify_convergence);
    c.ssfm.convergence_tol = s.positive("convergence_tol", c.ssfm.convergence_tol);
    s.finish();
  }
  {
    Section g = top.child("grid");
    if (g.has("dt_ps")) c.grid_dt = g.positive("dt_ps", 1.0, 1e-12);
    else g.touch("dt_ps");
    if (g.has("n_samples")) {
      const auto n = g.get<std::size_t>("n_samples", 0);
      if (n < 2 || (n & (n - 1)) != 0) g.fail("n_samples", "must be a power of two >= 2");
      c.grid_size = n;
    } else {
      g.touch("n_samples");
    }
    if (c.grid_dt.has_value() != c.grid_size.has_value()) g.fail("dt_ps", "and n_samples must be given together");
    g.finish();
  }
  {
    Section o = top.child("optimizer");
    c.design.perturbed_starts = o.get<int>("perturbed_starts", c.design.perturbed_starts);
    if (c.design.perturbed_starts < 0) o.fail("perturbed_starts", "must be >= 0");
    c.design.perturbation = o.positive("perturbation", c.design.perturbation);
    c.design.max_iterations = o.get<int>("max_iterations", c.design.max_iterations);
    if (c.design.max_iterations < 1) o.fail("max_iterations", "must be >= 1");
    const auto grad = o.get<std::string>("gradient", to_string(c.design.gradient));
    if (grad == "adjoint") c.design.gradient = GradientMethod::Adjoint;
    else if (grad == "finite-difference") c.design.gradient = GradientMethod::FiniteDifference;
    else o.fail("gradient", "must be \"adjoint\" or \"finite-difference\"");
    c.design.search_phase_per_step = o.positive("search_phase_per_step", c.design.search_phase_per_step);
    c.fixed_point.tolerance = o.positive("fixed_point_tolerance_ps", c.fixed_point.tolerance, 1e-12);
    c.fixed_point.max_evaluations = o.get<int>("fixed_point_max_designs", c.fixed_point.max_evaluations);
    if (c.fixed_point.max_evaluations < 2) o.fail("fixed_point_max_designs", "must be >= 2");
    o.finish();
  }
  {
    Section s = top.child("soliton_sweep");
    c.soliton_sweep.energies = s.positive_list("energies_pj", energy_ladder(0.1, 1.8, 0.1), 1e-12);
    s.finish();
  }
  {
    Section s = top.child("mtb_design");
    c.mtb_design.channels = channels(s, "channels", c.mtb_design.channels);
    c.mtb_design.energies = s.positive_list("energies_pj", {0.2e-12, 0.4e-12, 0.8e-12, 1.2e-12, 1.5e-12, 1.8e-12}, 1e-12);
    c.mtb_design.waveforms = s.get<bool>("waveforms", c.mtb_design.waveforms);
    s.finish();
  }
  {
    Section s = top.child("em_evaluate");
    c.em_evaluate.channels = channels(s, "channels", c.em_evaluate.channels);
    for (auto k : c.em_evaluate.channels)
      if (k == ChannelKind::DispersionOnly) s.fail("channels", "energy modulation needs a nonlinear channel");
    c.em_evaluate.levels = level_list(s, "levels", c.em_evaluate.levels);
    c.em_evaluate.symbols = s.get<std::size_t>("symbols", c.em_evaluate.symbols);
    if (c.em_evaluate.symbols < 1) s.fail("symbols", "must be >= 1");
    c.em_evaluate.soliton_energies = s.positive_list("soliton_energies_pj", energy_ladder(0.1, 1.8, 0.1), 1e-12);
    c.em_evaluate.mtb_energies =
        s.positive_list("mtb_energies_pj", {0.2e-12, 0.4e-12, 0.8e-12, 1.2e-12, 1.5e-12, 1.8e-12}, 1e-12);
    if (s.has("mtb_designs")) c.em_evaluate.mtb_designs = s.get<std::string>("mtb_designs", "");
    else s.touch("mtb_designs");
    s.finish();
  }
  {
    Section s = top.child("propagate");
    c.propagate.waveform = s.get<std::string>("waveform", "");
    if (s.has("channel")) {
      try {
        c.propagate.channel = parse_channel(s.get<std::string>("channel", ""));
      } catch (const ConfigError& e) {
        s.fail("channel", e.what());
      }
    } else {
      s.touch("channel");
    }
    c.propagate.z_points = s.get<int>("z_points", c.propagate.z_points);
    if (c.propagate.z_points < 2) s.fail("z_points", "must be >= 2");
    c.propagate.time_stride = s.get<std::size_t>("time_stride", c.propagate.time_stride);
    if (c.propagate.time_stride < 1) s.fail("time_stride", "must be >= 1");
    s.finish();
  }
  {
    Section s = top.child("bound");
    c.bound.levels = level_list(s, "levels", c.bound.levels);
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mtb::cli
