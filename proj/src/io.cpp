#include "spinctl/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace spinctl {

namespace fs = std::filesystem;

// --- states and matrices ----------------------------------------------------

namespace {

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SpinError(what + ": expected [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw SpinError(what + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& what) {
  const json& v = field(j, key, what);
  if (!v.is_number()) throw SpinError(what + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double dflt, const std::string& what) {
  return j.contains(key) ? number(j, key, what) : dflt;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string header_lines(const std::vector<std::string>& header) {
  std::string s;
  for (const auto& h : header) s += "# " + h + "\n";
  return s;
}

int dim_for_f(double f) { return Spin::from_double(f).dim(); }

} // namespace

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(cplx_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SpinError(what + ": 'data' must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != n)
      throw SpinError(what + ": 'data' must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = cplx_from_json(j[i][k], what);
  }
  return m;
}

json state_to_json(const QuantumState& s) {
  json j;
  j["f"] = 0.5 * (s.dim() - 1);
  if (s.is_pure()) {
    j["kind"] = "pure";
    json data = json::array();
    for (Eigen::Index i = 0; i < s.amplitudes().size(); ++i) data.push_back(cplx_to_json(s.amplitudes()(i)));
    j["data"] = std::move(data);
  } else {
    j["kind"] = "mixed";
    j["data"] = matrix_to_json(s.density());
  }
  return j;
}

QuantumState state_from_json(const json& j) {
  const std::string what = "state";
  const double f = number(j, "f", what);
  const int d = dim_for_f(f);
  const json& kind = field(j, "kind", what);
  const json& data = field(j, "data", what);
  if (kind == "pure") {
    if (!data.is_array() || static_cast<int>(data.size()) != d)
      throw SpinError("state: 'data' must hold 2f+1 = " + std::to_string(d) + " amplitudes");
    CVector v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx_from_json(data[i], what);
    return QuantumState::pure(v);
  }
  if (kind == "mixed") {
    CMatrix m = matrix_from_json(data, what);
    if (m.rows() != d) throw SpinError("state: 'data' must be (2f+1) x (2f+1)");
    return QuantumState::mixed(m);
  }
  throw SpinError("state: field 'kind' must be \"pure\" or \"mixed\"");
}

json operator_to_json(const SpinSystem& sys, const CMatrix& op) {
  return {{"f", sys.f()}, {"kind", "operator"}, {"data", matrix_to_json(op)}};
}

// --- params, filter, waveform -------------------------------------------------

json params_to_json(const ControlParams& p) {
  return {{"larmor_rate_rad_s", p.larmor_rate},
          {"nonlinear_rate_rad_s", p.nonlinear_rate},
          {"beta", p.beta},
          {"duration_s", p.duration},
          {"n_steps", p.n_steps}};
}

ControlParams params_from_json(const json& j) {
  const std::string what = "params";
  ControlParams p;
  p.larmor_rate = number_or(j, "larmor_rate_rad_s", p.larmor_rate, what);
  p.nonlinear_rate = number_or(j, "nonlinear_rate_rad_s", p.nonlinear_rate, what);
  p.beta = number_or(j, "beta", p.beta, what);
  p.duration = number_or(j, "duration_s", p.duration, what);
  if (j.contains("n_steps")) {
    if (!j["n_steps"].is_number_integer()) throw SpinError("params: field 'n_steps' must be an integer");
    p.n_steps = j["n_steps"].get<int>();
  }
  p.validate();
  return p;
}

json filter_to_json(const FilterSpec& f) {
  json j{{"substeps_per_step", f.substeps_per_step}};
  j["cutoff_hz"] = std::isfinite(f.cutoff_hz) ? json(f.cutoff_hz) : json(nullptr);
  j["slew_limit_per_s"] = std::isfinite(f.slew_limit) ? json(f.slew_limit) : json(nullptr);
  return j;
}

FilterSpec filter_from_json(const json& j) {
  const std::string what = "filter";
  FilterSpec f;
  if (j.contains("cutoff_hz") && j["cutoff_hz"].is_null()) f.cutoff_hz = std::numeric_limits<double>::infinity();
  else f.cutoff_hz = number_or(j, "cutoff_hz", f.cutoff_hz, what);
  if (j.contains("slew_limit_per_s") && !j["slew_limit_per_s"].is_null())
    f.slew_limit = number(j, "slew_limit_per_s", what);
  if (j.contains("substeps_per_step")) {
    if (!j["substeps_per_step"].is_number_integer())
      throw SpinError("filter: field 'substeps_per_step' must be an integer");
    f.substeps_per_step = j["substeps_per_step"].get<int>();
  }
  f.validate();
  return f;
}

json noise_to_json(const NoiseModel& n) {
  return {{"decoherence", to_string(n.decoherence)},
          {"scattering_rate_per_s", n.scattering_rate},
          {"inhomogeneity_sigma", n.relative_sigma},
          {"inhomogeneity_samples", n.n_samples},
          {"inhomogeneity_scheme", to_string(n.scheme)}};
}

json waveform_to_json(const ControlWaveform& w, const FilterSpec& filter, double f) {
  json params = params_to_json(w.params);
  params["f"] = f;
  return {{"params", params}, {"phis", w.phis}, {"filter", filter_to_json(filter)}};
}

WaveformFile waveform_from_json(const json& j) {
  const std::string what = "waveform";
  WaveformFile out;
  const json& params = field(j, "params", what);
  out.waveform.params = params_from_json(params);
  out.f = number_or(params, "f", 3.0, "params");
  dim_for_f(out.f);
  const json& phis = field(j, "phis", what);
  if (!phis.is_array()) throw SpinError("waveform: field 'phis' must be an array");
  for (const auto& v : phis) {
    if (!v.is_number()) throw SpinError("waveform: field 'phis' must hold numbers");
    out.waveform.phis.push_back(v.get<double>());
  }
  out.filter = j.contains("filter") ? filter_from_json(j["filter"]) : FilterSpec::for_params(out.waveform.params);
  out.waveform.validate();
  return out;
}

// --- results and tables -------------------------------------------------------

json result_to_json(const OptimizationResult& r) {
  json j{{"yield_pure_final", r.yield_pure_final},
         {"iterations", r.iterations},
         {"seed_index", r.seed_index},
         {"converged", r.converged},
         {"history", r.history},
         {"phis", r.waveform.phis}};
  j["yield_mixed_final"] = r.yield_mixed_final ? json(*r.yield_mixed_final) : json(nullptr);
  return j;
}

json trajectory_to_json(const Trajectory& t) {
  json states = json::array();
  for (const auto& s : t.states) states.push_back(state_to_json(s));
  json metrics = json::object();
  for (const auto& [name, values] : t.metrics) {
    json arr = json::array();
    for (double v : values) arr.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    metrics[name] = std::move(arr);
  }
  return {{"times_s", t.times}, {"states", states}, {"metrics", metrics}};
}

std::string trajectory_csv(const Trajectory& t, const std::vector<std::string>& header) {
  std::ostringstream os;
  os << header_lines(header) << "time_s";
  for (const auto& [name, values] : t.metrics) os << ',' << name;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    os << t.times[i];
    for (const auto& [name, values] : t.metrics) {
      os << ',';
      if (i < values.size() && std::isfinite(values[i])) os << values[i];
      else os << "nan";
    }
    os << '\n';
  }
  return os.str();
}

json squeeze_report_to_json(const SqueezeReport& r) {
  return {{"xi", r.xi},
          {"xi_normalized", r.xi_normalized},
          {"squeezing_db", r.squeezing_db},
          {"anti_squeezing_db", r.anti_squeezing_db},
          {"mean_spin", r.mean_spin},
          {"ground_state_overlap", r.ground_state_overlap}};
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& header) {
  std::ostringstream os;
  os << header_lines(header)
     << "omega_end_rad_s,xi,xi_normalized,squeezing_db,anti_squeezing_db,mean_spin,ground_state_overlap\n"
     << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.omega_end;
    if (r.report) {
      const auto& p = *r.report;
      os << ',' << p.xi << ',' << p.xi_normalized << ',' << p.squeezing_db << ',' << p.anti_squeezing_db << ','
         << p.mean_spin << ',' << p.ground_state_overlap << '\n';
    } else {
      os << ",nan,nan,nan,nan,nan,nan\n";
    }
  }
  return os.str();
}

std::string histogram_csv(const Histogram& h, const std::vector<std::string>& header) {
  std::ostringstream os;
  os << header_lines(header) << "bin_left,bin_right,count\n" << std::setprecision(17);
  for (std::size_t i = 0; i < h.counts.size(); ++i) os << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  return os.str();
}

json batch_to_json(const BatchRecord& rec) {
  json entries = json::array();
  for (const auto& e : rec.entries) {
    json j{{"label", e.label}};
    if (!e.error.empty()) {
      j["error"] = e.error;
    } else {
      j["yield_pure"] = e.yield_pure;
      j["yield_mixed"] = e.yield_mixed;
      j["fidelity"] = e.fidelity;
      j["corrected_yield_pure"] = e.corrected_yield_pure;
      j["corrected_yield_mixed"] = e.corrected_yield_mixed;
      j["corrected_fidelity"] = e.corrected_fidelity;
      j["rotation_axis"] = {e.rotation.axis.x(), e.rotation.axis.y(), e.rotation.axis.z()};
      j["rotation_angle_rad"] = e.rotation.angle;
    }
    entries.push_back(std::move(j));
  }
  return {{"entries", entries}};
}

// --- files ------------------------------------------------------------------

json read_json_file(const fs::path& p) {
  const std::string text = read_text_file(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpinError(p.string() + ": invalid JSON (" + e.what() + ")");
  }
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw SpinError("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SpinError("cannot write file: " + p.string());
    out << text;
    if (!out) throw SpinError("write failed: " + p.string());
  }
  fs::rename(tmp, p);
}

std::string sha256_file(const fs::path& p) {
  const std::string bytes = read_text_file(p);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr)) throw SpinError("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// --- config -----------------------------------------------------------------

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw SpinError("config key '" + key + "': expected a number, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw SpinError("config key '" + key + "': expected an integer, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Key {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define DBL(name, expr)                                                                                    \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { expr = parse_double(k, v); },     \
          [](const RunConfig& c) { return fmt(expr); }}}
#define INT(name, expr)                                                                                    \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) {                                   \
            expr = static_cast<std::remove_reference_t<decltype(expr)>>(parse_int(k, v));                  \
          },                                                                                               \
          [](const RunConfig& c) { return std::to_string(expr); }}}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = {
      DBL("f", c.f),
      DBL("larmor_rate_rad_s", c.params.larmor_rate),
      DBL("nonlinear_rate_rad_s", c.params.nonlinear_rate),
      DBL("beta", c.params.beta),
      DBL("duration_s", c.params.duration),
      INT("n_steps", c.params.n_steps),
      DBL("filter_cutoff_hz", c.filter.cutoff_hz),
      DBL("filter_slew_limit_per_s", c.filter.slew_limit),
      {"filter_substeps_per_step",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.filter.substeps_per_step = static_cast<int>(parse_int(k, v));
          c.filter_substeps_set = true;
        },
        [](const RunConfig& c) { return std::to_string(c.filter.substeps_per_step); }}},
      {"noise",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "none") c.noise = NoiseModel::none();
          else if (v == "default") c.noise = NoiseModel::defaults(c.params);
          else throw SpinError("config key '" + k + "': expected none|default, got '" + v + "'");
        },
        [](const RunConfig& c) {
          const NoiseModel d = NoiseModel::defaults(c.params);
          if (c.noise.is_closed() && c.noise.n_samples == 1) return std::string("none");
          if (c.noise.decoherence == d.decoherence && c.noise.relative_sigma == d.relative_sigma &&
              c.noise.n_samples == d.n_samples && c.noise.scheme == d.scheme)
            return std::string("default");
          return std::string("custom");
        }}},
      {"decoherence",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.noise.decoherence = decoherence_from_string(v); },
        [](const RunConfig& c) { return to_string(c.noise.decoherence); }}},
      {"scattering_rate_per_s",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.scattering_rate = parse_double(k, v); },
        [](const RunConfig& c) { return fmt(c.noise.scattering_rate); }}},
      DBL("inhomogeneity_sigma", c.noise.relative_sigma),
      INT("inhomogeneity_samples", c.noise.n_samples),
      {"inhomogeneity_scheme",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.noise.scheme = scheme_from_string(v); },
        [](const RunConfig& c) { return to_string(c.noise.scheme); }}},
      INT("n_seeds", c.optimizer.n_seeds),
      INT("max_iters", c.optimizer.max_iters),
      INT("stage2_max_iters", c.optimizer.stage2_max_iters),
      DBL("grad_tolerance", c.optimizer.grad_tolerance),
      INT("improvement_window", c.optimizer.improvement_window),
      DBL("improvement_threshold", c.optimizer.improvement_threshold),
      DBL("fd_step", c.optimizer.fd_step),
      DBL("line_search_initial_step", c.optimizer.line_search.initial_step),
      DBL("line_search_shrink", c.optimizer.line_search.shrink),
      DBL("line_search_armijo", c.optimizer.line_search.armijo),
      INT("line_search_max_halvings", c.optimizer.line_search.max_halvings),
      {"ascent",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "lbfgs") c.optimizer.direction = AscentDirection::lbfgs;
          else if (v == "steepest") c.optimizer.direction = AscentDirection::steepest;
          else throw SpinError("config key '" + k + "': expected lbfgs|steepest, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.optimizer.direction == AscentDirection::lbfgs ? "lbfgs" : "steepest");
        }}},
      INT("lbfgs_memory", c.optimizer.lbfgs_memory),
      INT("rng_seed", c.optimizer.rng_seed),
      DBL("target_yield", c.optimizer.target_yield),
      DBL("pumped_fraction", c.pumped_fraction),
      {"ramp_shape",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.ramp.shape = ramp_shape_from_string(v); },
        [](const RunConfig& c) { return to_string(c.ramp.shape); }}},
      DBL("ramp_omega_start_rad_s", c.ramp.omega_start),
      DBL("ramp_omega_end_rad_s", c.ramp.omega_end),
      {"ramp_time_s",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.ramp.ramp_time = parse_double(k, v);
          c.ramp_time_set = true;
        },
        [](const RunConfig& c) { return fmt(c.ramp.ramp_time); }}},
      DBL("ramp_hold_time_s", c.ramp.hold_time),
      INT("sweep_points", c.sweep_points),
      INT("wigner_n_theta", c.wigner_n_theta),
      INT("wigner_n_phi", c.wigner_n_phi),
      INT("synthetic_targets", c.synthetic.n_targets),
      DBL("synthetic_sigma", c.synthetic.displacement_sigma),
      DBL("synthetic_pumped_fraction", c.synthetic.pumped_fraction),
      DBL("synthetic_planted_angle", c.synthetic.planted_angle),
      {"synthetic_planted",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.synthetic.planted = parse_int_list(k, v); },
        [](const RunConfig& c) {
          std::string s;
          for (int i : c.synthetic.planted) s += (s.empty() ? "" : ",") + std::to_string(i);
          return s;
        }}},
      INT("histogram_bins", c.histogram_bins),
  };
  return table;
}

#undef DBL
#undef INT

} // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : key_table()) out.push_back(k);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = key_table().find(key);
  if (it == key_table().end()) throw SpinError("unknown config key '" + key + "'");
  it->second.set(*this, key, trim(value));
}

void RunConfig::load_file(const fs::path& p) {
  std::istringstream in(read_text_file(p));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SpinError(p.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void RunConfig::finalize() {
  const SpinSystem sys = build_spin_system(f);
  params.validate();
  if (!filter_substeps_set) filter.substeps_per_step = default_substeps(params);
  filter.validate();
  if (noise.decoherence == NoiseModel::Decoherence::depolarize)
    noise.scattering_rate = scattering_rate.value_or(params.scattering_rate());
  else
    noise.scattering_rate = scattering_rate.value_or(0.0);
  noise.validate();
  optimizer.validate();
  if (!(pumped_fraction > 0.0) || pumped_fraction > 1.0) throw SpinError("pumped_fraction must lie in (0, 1]");
  if (!ramp_time_set && ramp.omega_start > ramp.omega_end && ramp.omega_end > 0.0)
    ramp.ramp_time = adiabatic_ramp_time(sys, params.nonlinear_rate, ramp.omega_start, ramp.omega_end, ramp.shape);
  ramp.validate();
  if (sweep_points < 1) throw SpinError("sweep_points must be >= 1");
  if (wigner_n_theta < 2 || wigner_n_phi < 3) throw SpinError("wigner grid needs n_theta >= 2 and n_phi >= 3");
  if (histogram_bins < 1) throw SpinError("histogram_bins must be >= 1");
  synthetic.params = params;
  synthetic.filter = filter;
  synthetic.noise = noise;
  synthetic.rng_seed = optimizer.rng_seed;
}

std::map<std::string, std::string> RunConfig::snapshot() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : key_table()) out[k] = v.get(*this);
  return out;
}

json run_record_to_json(const RunRecord& r) {
  auto digests = [](const std::vector<FileDigest>& v) {
    json a = json::array();
    for (const auto& d : v) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return a;
  };
  return {{"command", r.command},        {"argv", r.argv},
          {"config", r.config},          {"rng_seed", r.rng_seed},
          {"versions", {{"spinctl", version_string()},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"inputs", digests(r.inputs)}, {"outputs", digests(r.outputs)},
          {"wall_time_s", r.wall_time_s}};
}

std::string version_string() { return "1.0.0"; }

} // namespace spinctl
