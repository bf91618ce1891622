#include "kflow/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "kflow/error.hpp"

namespace kflow {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config field '" + field + "': " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) config_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) config_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

double get_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) config_error(path.empty() ? key : path + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  return get_number(obj, key, path);
}

int get_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  const std::string where = path.empty() ? key : path + "." + key;
  if (!v.is_number_integer()) config_error(where, "expected an integer");
  const auto value = v.get<std::int64_t>();
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
    config_error(where, "integer out of range");
  return static_cast<int>(value);
}

std::string get_string_or(const json& obj, const std::string& key, const std::string& path,
                          const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) config_error(path.empty() ? key : path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<FourierMode> parse_modes(const json& obj, const std::string& path) {
  std::vector<FourierMode> modes;
  if (!obj.contains("modes")) return modes;
  const json& arr = obj.at("modes");
  if (!arr.is_array()) config_error(path + ".modes", "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = path + ".modes[" + std::to_string(i) + "]";
    const int n = get_int(arr[i], "n", where);
    if (n < 1) config_error(where + ".n", "mode index must be >= 1");
    modes.push_back({n, get_number_or(arr[i], "a", where, 0.0), get_number_or(arr[i], "b", where, 0.0)});
  }
  return modes;
}

InitialSpec parse_initial(const json& obj) {
  const std::string path = "initial";
  const json& type = require(obj, "type", path);
  if (!type.is_string()) config_error("initial.type", "expected a string");
  const auto name = type.get<std::string>();
  if (name == "circle") return CircleSpec{get_number(obj, "r", path)};
  if (name == "fourier") return FourierSpec{get_number(obj, "a0", path), parse_modes(obj, path)};
  if (name == "perturbed_circle")
    return PerturbedCircleSpec{get_number(obj, "r", path), get_int(obj, "n", path), get_number(obj, "eps", path)};
  if (name == "k_symmetric_random") {
    KSymmetricRandomSpec spec;
    const json& seed = require(obj, "seed", path);
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
      config_error("initial.seed", "expected a non-negative integer");
    spec.seed = seed.get<std::uint64_t>();
    spec.max_mode = get_int(obj, "N_max", path);
    spec.amplitude = get_number(obj, "amplitude", path);
    spec.r = get_number_or(obj, "r", path, 1.0);
    return spec;
  }
  config_error("initial.type", "unknown curve type '" + name + "'");
}

json initial_to_json(const InitialSpec& spec) {
  struct Visitor {
    json operator()(const CircleSpec& s) const { return {{"type", "circle"}, {"r", s.r}}; }
    json operator()(const FourierSpec& s) const {
      json modes = json::array();
      for (const auto& md : s.modes) modes.push_back({{"n", md.n}, {"a", md.a}, {"b", md.b}});
      return {{"type", "fourier"}, {"a0", s.a0}, {"modes", modes}};
    }
    json operator()(const KSymmetricRandomSpec& s) const {
      return {{"type", "k_symmetric_random"}, {"seed", s.seed}, {"N_max", s.max_mode},
              {"amplitude", s.amplitude}, {"r", s.r}};
    }
    json operator()(const PerturbedCircleSpec& s) const {
      return {{"type", "perturbed_circle"}, {"r", s.r}, {"n", s.n}, {"eps", s.eps}};
    }
  };
  return std::visit(Visitor{}, spec);
}

void require_admissible(const SupportSamples& p, const char* what) {
  const auto check = is_locally_convex(p);
  if (!is_admissible(p))
    throw Error(ErrorCode::ConfigError, std::string(what) + ": initial curve is not locally convex (min rho = " +
                                            format_double(check.min_rho) + ")");
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view token, std::size_t line) {
  const std::string s(token);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) parse_error(line, "malformed number '" + s + "'");
  return v;
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

bool FourierSpec::operator==(const FourierSpec& o) const {
  if (a0 != o.a0 || modes.size() != o.modes.size()) return false;
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i].n != o.modes[i].n || modes[i].a != o.modes[i].a || modes[i].b != o.modes[i].b) return false;
  return true;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return m == o.m && params == o.params && tolerances.width == o.tolerances.width &&
         tolerances.circle == o.tolerances.circle && tolerances.symmetry == o.tolerances.symmetry &&
         initial == o.initial && output == o.output;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SupportSamples generate_initial(const InitialSpec& spec, int winding, std::size_t grid, int k) {
  struct Visitor {
    int m;
    std::size_t grid;
    int k;

    SupportSamples operator()(const CircleSpec& s) const {
      if (!(s.r > 0.0)) throw Error(ErrorCode::ConfigError, "circle: radius must be > 0");
      return SupportSamples::constant(m, grid, s.r);
    }
    SupportSamples operator()(const FourierSpec& s) const {
      FourierSupport f{m, s.a0, s.modes};
      if (2 * static_cast<std::size_t>(f.max_mode()) >= grid)
        throw Error(ErrorCode::ConfigError, "fourier: mode " + std::to_string(f.max_mode()) +
                                                " does not fit below the Nyquist mode of grid " + std::to_string(grid));
      auto p = synthesize(f, grid);
      require_admissible(p, "fourier");
      return p;
    }
    SupportSamples operator()(const PerturbedCircleSpec& s) const {
      if (s.n < 1 || 2 * static_cast<std::size_t>(s.n) >= grid)
        throw Error(ErrorCode::ConfigError, "perturbed_circle: mode n out of range");
      auto p = SupportSamples::sample(m, grid, [&](double th) { return s.r + s.eps * std::cos(s.n * th / m); });
      require_admissible(p, "perturbed_circle");
      return p;
    }
    SupportSamples operator()(const KSymmetricRandomSpec& s) const {
      if (s.max_mode < k || 2 * static_cast<std::size_t>(s.max_mode) >= grid)
        throw Error(ErrorCode::ConfigError, "k_symmetric_random: N_max must satisfy k <= N_max < G/2");
      if (!(s.r > 0.0)) throw Error(ErrorCode::ConfigError, "k_symmetric_random: r must be > 0");
      Lcg64 rng(s.seed);
      FourierSupport f{m, 2.0 * s.r, {}};
      for (int n = k; n <= s.max_mode; n += k) {
        const double a = 2.0 * rng.next_unit() - 1.0;
        const double b = 2.0 * rng.next_unit() - 1.0;
        f.modes.push_back({n, s.amplitude * a, s.amplitude * b});
      }
      // Halve the perturbation until min rho >= 0.1 * a0 / 2.
      for (int attempt = 0; attempt < 100; ++attempt) {
        auto p = synthesize(f, grid);
        const auto check = is_locally_convex(p);
        if (check.min_rho >= 0.1 * s.r) return p;
        for (auto& md : f.modes) {
          md.a *= 0.5;
          md.b *= 0.5;
        }
      }
      throw Error(ErrorCode::ConfigError, "k_symmetric_random: no admissible rescaling within 100 attempts");
    }
  };
  return std::visit(Visitor{winding, grid, k}, spec);
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError,
                "config syntax error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) config_error("<root>", "expected a JSON object");

  RunConfig cfg;
  cfg.m = get_int(doc, "m", "");
  cfg.params.k = get_int(doc, "k", "");
  const int grid = get_int(doc, "grid", "");
  if (grid < 0) config_error("grid", "must be positive");
  cfg.params.grid = static_cast<std::size_t>(grid);
  const std::string solver = get_string_or(doc, "solver", "", "spectral");
  const auto kind = parse_solver(solver);
  if (!kind) config_error("solver", "unknown solver '" + solver + "'");
  cfg.params.solver = *kind;
  cfg.params.dt = get_number(doc, "dt", "");
  cfg.params.t_end = get_number(doc, "t_end", "");
  cfg.params.snapshot_interval = get_number_or(doc, "snapshot_interval", "", cfg.params.snapshot_interval);
  cfg.params.series_interval = get_number_or(doc, "series_interval", "", cfg.params.series_interval);

  if (doc.contains("tolerances")) {
    const json& tol = doc.at("tolerances");
    if (!tol.is_object()) config_error("tolerances", "expected an object");
    cfg.tolerances.width = get_number_or(tol, "width", "tolerances", cfg.tolerances.width);
    cfg.tolerances.circle = get_number_or(tol, "circle", "tolerances", cfg.tolerances.circle);
    cfg.tolerances.symmetry = get_number_or(tol, "symmetry", "tolerances", cfg.tolerances.symmetry);
    cfg.params.convexity_guard = get_number_or(tol, "convexity_guard", "tolerances", cfg.params.convexity_guard);
  }
  cfg.params.width_tolerance = cfg.tolerances.width;
  cfg.initial = parse_initial(require(doc, "initial", ""));

  if (doc.contains("output")) {
    const json& out = doc.at("output");
    if (!out.is_object()) config_error("output", "expected an object");
    cfg.output.dir = get_string_or(out, "dir", "output", cfg.output.dir);
    cfg.output.series = get_string_or(out, "series", "output", cfg.output.series);
    cfg.output.report = get_string_or(out, "report", "output", cfg.output.report);
    cfg.output.snapshots = get_string_or(out, "snapshots", "output", cfg.output.snapshots);
  }
  return cfg;
}

std::string write_config(const RunConfig& cfg) {
  json doc = {
      {"m", cfg.m},
      {"k", cfg.params.k},
      {"grid", cfg.params.grid},
      {"solver", std::string(solver_name(cfg.params.solver))},
      {"dt", cfg.params.dt},
      {"t_end", cfg.params.t_end},
      {"snapshot_interval", cfg.params.snapshot_interval},
      {"series_interval", cfg.params.series_interval},
      {"tolerances",
       {{"width", cfg.tolerances.width},
        {"circle", cfg.tolerances.circle},
        {"symmetry", cfg.tolerances.symmetry},
        {"convexity_guard", cfg.params.convexity_guard}}},
      {"initial", initial_to_json(cfg.initial)},
      {"output",
       {{"dir", cfg.output.dir},
        {"series", cfg.output.series},
        {"report", cfg.output.report},
        {"snapshots", cfg.output.snapshots}}},
  };
  return doc.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::string write_snapshot(const Snapshot& s) {
  std::string out;
  out += "# m=" + std::to_string(s.p.winding()) + " t=" + format_double(s.t) + " G=" + std::to_string(s.p.size()) +
         "\n";
  out += "theta,p\n";
  for (std::size_t j = 0; j < s.p.size(); ++j) out += format_double(s.p.theta(j)) + "," + format_double(s.p[j]) + "\n";
  return out;
}

Snapshot parse_snapshot(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) parse_error(1, "empty snapshot");

  const std::string_view meta = lines[0];
  if (meta.empty() || meta[0] != '#') parse_error(1, "expected metadata comment '# m=<m> t=<t> G=<G>'");
  int m = 0;
  double t = 0.0;
  long grid = -1;
  bool have_m = false, have_t = false, have_g = false;
  std::istringstream tokens{std::string(meta.substr(1))};
  std::string token;
  while (tokens >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) parse_error(1, "malformed metadata token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "m") {
      m = static_cast<int>(parse_number(value, 1));
      have_m = true;
    } else if (key == "t") {
      t = parse_number(value, 1);
      have_t = true;
    } else if (key == "G") {
      grid = static_cast<long>(parse_number(value, 1));
      have_g = true;
    }
  }
  if (!have_m || !have_t || !have_g) parse_error(1, "metadata must define m, t and G");
  if (lines.size() < 2 || lines[1] != "theta,p") parse_error(2, "expected header 'theta,p'");
  if (grid < 0 || lines.size() - 2 != static_cast<std::size_t>(grid))
    parse_error(lines.size(), "expected " + std::to_string(grid) + " data rows, found " +
                                  std::to_string(lines.size() - 2));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(grid));
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto comma = lines[i].find(',');
    if (comma == std::string_view::npos) parse_error(i + 1, "expected 'theta,p'");
    parse_number(lines[i].substr(0, comma), i + 1);
    values.push_back(parse_number(lines[i].substr(comma + 1), i + 1));
  }
  try {
    return {t, SupportSamples(m, std::move(values))};
  } catch (const Error& e) {
    parse_error(1, e.what());
  }
}

Snapshot load_snapshot(const std::filesystem::path& path) { return parse_snapshot(read_text_file(path)); }

std::string write_series_csv(const std::vector<SeriesRow>& rows) {
  std::string out(kSeriesColumns);
  out += "\n";
  for (const auto& r : rows) {
    const double cols[] = {r.t,          r.energy,       r.f,
                           r.a0,         r.min_rho,      r.max_rho,
                           r.width_defect, r.symmetry_defect, r.grad_rho_k_max,
                           r.drift_rho_offset, r.drift_p_offset};
    for (std::size_t i = 0; i < std::size(cols); ++i) {
      if (i) out += ",";
      out += format_double(cols[i]);
    }
    out += "\n";
  }
  return out;
}

std::string write_report_json(const InvariantReport& r, const RunConfig& config, const Trajectory& trajectory) {
  json fits = json::array();
  for (const auto& fit : r.decay_fits)
    fits.push_back({{"n", fit.n},
                    {"component", std::string(1, fit.component)},
                    {"fitted_rate", fit.fitted_rate},
                    {"predicted_rate", fit.predicted_rate},
                    {"relative_error", fit.relative_error},
                    {"samples", fit.samples}});
  json warnings = json::array();
  for (const auto& w : trajectory.warnings) warnings.push_back(w);
  json doc = {
      {"m", config.m},
      {"k", config.params.k},
      {"solver", std::string(solver_name(config.params.solver))},
      {"grid", config.params.grid},
      {"t_final", r.t_final},
      {"converged", r.converged},
      {"energy_drift", r.energy_drift},
      {"offset_drift_rho", r.offset_drift_rho},
      {"offset_drift_p", r.offset_drift_p},
      {"min_rho_over_run", r.min_rho_over_run},
      {"max_rho_over_run", r.max_rho_over_run},
      {"empirical_M1", r.empirical_M1},
      {"m0", r.m0},
      {"M0", r.M0},
      {"radius_bounds_satisfied", r.radius_bounds_satisfied},
      {"gradient_bound_margin", finite_or_string(r.gradient_bound_margin)},
      {"decay_fits", fits},
      {"initial_symmetry_defect", r.initial_symmetry_defect},
      {"final_width_defect", r.final_width_defect},
      {"final_symmetry_defect", r.final_symmetry_defect},
      {"final_p_variation", r.final_p_variation},
      {"final_radius", r.final_radius},
      {"limit_radius_prediction", r.limit_radius_prediction},
      {"classification", std::string(limit_class_name(r.classification))},
      {"classification_consistent", r.classification_consistent},
      {"warnings", warnings},
  };
  return doc.dump(2) + "\n";
}

std::string render_svg(const PlaneCurve& curve) {
  if (curve.points.empty()) throw Error(ErrorCode::InvalidArgument, "render_svg: empty curve");
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& pt : curve.points) {
    min_x = std::min(min_x, pt.x);
    max_x = std::max(max_x, pt.x);
    min_y = std::min(min_y, -pt.y);
    max_y = std::max(max_y, -pt.y);
  }
  const double width = max_x - min_x;
  const double height = max_y - min_y;
  const double larger = std::max(width, height);
  const double pad_x = 0.05 * width;
  const double pad_y = 0.05 * height;

  std::ostringstream os;
  os.precision(17);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << min_x - pad_x << ' ' << min_y - pad_y << ' '
     << width + 2.0 * pad_x << ' ' << height + 2.0 * pad_y << "\">\n";
  os << "  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"" << 0.005 * larger << "\" points=\"";
  for (std::size_t i = 0; i <= curve.points.size(); ++i) {
    const auto& pt = curve.points[i % curve.points.size()];
    if (i) os << ' ';
    os << pt.x << ',' << -pt.y;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kflow
