#include "spinctl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "spinctl/io.hpp"

namespace spinctl {

namespace fs = std::filesystem;

namespace {

class UsageError : public SpinError {
public:
  using SpinError::SpinError;
};

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string noise;
  std::optional<double> pumped_fraction;
  std::optional<std::uint64_t> rng_seed;
};

void add_common(CLI::App* app, Common& c, bool with_noise = true) {
  app->add_option("--config", c.config_file, "flat key = value config file");
  app->add_option("--set", c.sets, "override one config key (key=value); repeatable");
  if (with_noise) app->add_option("--noise", c.noise, "none | default");
  app->add_option("--pumped-fraction", c.pumped_fraction, "optical pumping fidelity p in (0, 1]");
  app->add_option("--rng-seed", c.rng_seed, "master RNG seed");
}

RunConfig build_config(const Common& c, const std::string& default_noise) {
  try {
    RunConfig cfg;
    cfg.set("noise", default_noise);
    if (!c.config_file.empty()) cfg.load_file(c.config_file);
    for (const auto& kv : c.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw SpinError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!c.noise.empty()) cfg.set("noise", c.noise);
    if (c.pumped_fraction) cfg.pumped_fraction = *c.pumped_fraction;
    if (c.rng_seed) cfg.optimizer.rng_seed = *c.rng_seed;
    cfg.finalize();
    return cfg;
  } catch (const UsageError&) {
    throw;
  } catch (const SpinError& e) {
    throw UsageError(e.what());
  }
}

bool looks_like_path(const std::string& s) {
  return s.find('/') != std::string::npos || s.ends_with(".json");
}

QuantumState resolve_target(const std::string& spec, const SpinSystem& sys) {
  const auto names = target_names();
  if (std::find(names.begin(), names.end(), spec) != names.end()) return target_library(spec, sys);
  if (!looks_like_path(spec) && !fs::exists(spec)) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown target '" + spec + "' (library names: " + list + "; or a state JSON file)");
  }
  if (!fs::exists(spec)) throw SpinError("target file not found: " + spec);
  QuantumState s = state_from_json(read_json_file(spec));
  if (s.dim() != sys.dim()) throw SpinError("target " + spec + " has dimension " + std::to_string(s.dim()) +
                                            ", expected " + std::to_string(sys.dim()));
  return s;
}

/// Buffered outputs; nothing touches disk until commit().
class Outputs {
public:
  Outputs(fs::path dir, std::string record_name) : dir_(std::move(dir)), record_name_(std::move(record_name)) {}

  const std::string& record_name() const { return record_name_; }
  std::vector<std::string> csv_header(std::vector<std::string> extra = {}) const {
    extra.insert(extra.begin(), "run_record: " + record_name_);
    return extra;
  }
  json tag(json j) const {
    j["run_record"] = record_name_;
    return j;
  }
  void add(const std::string& name, std::string text) { files_.emplace_back(name, std::move(text)); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  std::vector<FileDigest> commit() const {
    std::vector<FileDigest> d;
    for (const auto& [name, text] : files_) {
      const fs::path p = dir_ / name;
      write_text_file(p, text);
      d.push_back({p.string(), sha256_file(p)});
    }
    return d;
  }
  fs::path record_path() const { return dir_ / record_name_; }

private:
  fs::path dir_;
  std::string record_name_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Context {
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::ostream& out;
};

void finish(const Context& ctx, const std::string& command, const RunConfig* cfg, const Outputs& outputs,
            const std::vector<std::string>& inputs) {
  RunRecord rec;
  rec.command = command;
  rec.argv = ctx.argv;
  if (cfg) {
    rec.config = cfg->snapshot();
    rec.rng_seed = cfg->optimizer.rng_seed;
  }
  for (const auto& in : inputs) rec.inputs.push_back({in, sha256_file(in)});
  rec.outputs = outputs.commit();
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  write_text_file(outputs.record_path(), run_record_to_json(rec).dump(2) + "\n");
  for (const auto& o : rec.outputs) ctx.out << "wrote " << o.path << '\n';
  ctx.out << "wrote " << outputs.record_path().string() << '\n';
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// --- ops --------------------------------------------------------------------

struct OpsArgs {
  double f = 3.0;
  std::string out;
};

void cmd_ops(const Context& ctx, const OpsArgs& a) {
  SpinSystem sys = [&] {
    try {
      return build_spin_system(a.f);
    } catch (const SpinError& e) {
      throw UsageError(e.what());
    }
  }();
  json j{{"f", sys.f()},
         {"operators",
          {{"fx", operator_to_json(sys, sys.fx())},
           {"fy", operator_to_json(sys, sys.fy())},
           {"fz", operator_to_json(sys, sys.fz())},
           {"fx2", operator_to_json(sys, sys.fx2())}}}};
  if (a.out.empty()) {
    ctx.out << j.dump(2) << '\n';
    return;
  }
  const fs::path p(a.out);
  Outputs o(p.has_parent_path() ? p.parent_path() : fs::path("."), p.filename().string() + ".run.json");
  o.add_json(p.filename().string(), o.tag(j));
  finish(ctx, "ops", nullptr, o, {});
}

// --- optimize ---------------------------------------------------------------

struct OptimizeArgs {
  Common common;
  std::string target;
  std::optional<int> seeds;
  std::string out;
};

void cmd_optimize(const Context& ctx, const OptimizeArgs& a) {
  RunConfig cfg = build_config(a.common, "default");
  if (a.seeds) {
    if (*a.seeds < 1) throw UsageError("--seeds must be >= 1");
    cfg.optimizer.n_seeds = *a.seeds;
  }
  const SpinSystem sys = build_spin_system(cfg.f);
  const QuantumState target = resolve_target(a.target, sys);
  if (a.out.empty()) throw UsageError("--out is required");

  DesignConfig dc;
  dc.params = cfg.params;
  dc.filter = cfg.filter;
  dc.noise = cfg.noise;
  dc.optimizer = cfg.optimizer;
  dc.pumped_fraction = cfg.pumped_fraction;
  const DesignResult r = design_control(sys, target, dc);

  Outputs o(a.out, "run_record.json");
  o.add_json("waveform.json", o.tag(waveform_to_json(r.stage2.waveform, cfg.filter, cfg.f)));
  json res{{"target", a.target},
           {"target_state", state_to_json(target)},
           {"params", params_to_json(cfg.params)},
           {"filter", filter_to_json(cfg.filter)},
           {"noise", noise_to_json(cfg.noise)},
           {"pumped_fraction", cfg.pumped_fraction},
           {"stage1", result_to_json(r.stage1)},
           {"stage2", result_to_json(r.stage2)}};
  o.add_json("result.json", o.tag(res));
  std::vector<std::string> inputs;
  if (!a.common.config_file.empty()) inputs.push_back(a.common.config_file);
  if (looks_like_path(a.target)) inputs.push_back(a.target);

  ctx.out << "stage1 seed " << r.stage1.seed_index << ": yield_pure = " << fmt(r.stage1.yield_pure_final, 8)
          << ", yield_mixed (noisy) = " << fmt(r.stage1.yield_mixed_final.value_or(NAN), 8) << '\n'
          << "stage2: yield_mixed = " << fmt(r.stage2.yield_mixed_final.value_or(NAN), 8)
          << ", yield_pure (closed) = " << fmt(r.stage2.yield_pure_final, 8) << '\n';
  finish(ctx, "optimize", &cfg, o, inputs);
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string waveform;
  bool master = false;
  int snapshots = 2;
  std::string target;
  std::string initial;
  bool no_wigner = false;
  std::string out;
};

void cmd_simulate(const Context& ctx, const SimulateArgs& a) {
  RunConfig cfg = build_config(a.common, a.master ? "default" : "none");
  if (a.snapshots < 2) throw UsageError("--snapshots must be >= 2");
  if (a.out.empty()) throw UsageError("--out is required");
  const WaveformFile wf = waveform_from_json(read_json_file(a.waveform));
  const SpinSystem sys = build_spin_system(wf.f);
  QuantumState init = fiducial_state(sys);
  if (!a.initial.empty()) {
    init = state_from_json(read_json_file(a.initial));
    if (init.dim() != sys.dim())
      throw SpinError("dimension mismatch: waveform is for f = " + fmt(wf.f) + " (d = " + std::to_string(sys.dim()) +
                      ") but initial state " + a.initial + " has d = " + std::to_string(init.dim()));
    if (cfg.pumped_fraction < 1.0) throw UsageError("--pumped-fraction applies to the default initial state only");
  }
  if (cfg.pumped_fraction < 1.0) init = prepare_initial(sys, InitialPrep{init, cfg.pumped_fraction});
  std::optional<QuantumState> target;
  if (!a.target.empty()) target = resolve_target(a.target, sys);

  // rates and noise come from the waveform file; the config only selects the noise model
  const ControlParams& params = wf.waveform.params;
  NoiseModel noise = a.master ? cfg.noise : NoiseModel::none();
  if (a.master && noise.decoherence == NoiseModel::Decoherence::depolarize && !cfg.scattering_rate)
    noise.scattering_rate = params.scattering_rate();
  const RenderedDrive drive = render_waveform(wf.waveform, wf.filter);
  Trajectory traj = propagate_with_snapshots(sys, init, drive, params, noise, a.snapshots);
  add_spin_metrics(sys, traj);
  if (target) {
    auto& y = traj.metrics["yield_mixed"];
    for (const auto& s : traj.states) y.push_back(yield_mixed(*target, s));
  }

  Outputs o(a.out, "run_record.json");
  json tj = trajectory_to_json(traj);
  tj["params"] = params_to_json(params);
  tj["noise"] = noise_to_json(noise);
  o.add_json("trajectory.json", o.tag(tj));
  o.add("trajectory.csv", trajectory_csv(traj, o.csv_header({"times in s; fx/fy/fz moments in units of hbar"})));
  if (!a.no_wigner)
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const WignerGrid g = wigner_grid(sys, traj.states[i], cfg.wigner_n_theta, cfg.wigner_n_phi);
      std::ostringstream os;
      write_wigner_csv(os, g, o.csv_header({"snapshot " + std::to_string(i + 1) + " at t = " + fmt(traj.times[i], 10) + " s"}));
      char name[32];
      std::snprintf(name, sizeof name, "wigner_%02zu.csv", i + 1);
      o.add(name, os.str());
    }
  if (target) ctx.out << "final yield_mixed = " << fmt(traj.metrics["yield_mixed"].back(), 8) << '\n';
  std::vector<std::string> inputs{a.waveform};
  if (!a.common.config_file.empty()) inputs.push_back(a.common.config_file);
  if (!a.initial.empty()) inputs.push_back(a.initial);
  finish(ctx, "simulate", &cfg, o, inputs);
}

// --- squeeze ----------------------------------------------------------------

struct SqueezeArgs {
  Common common;
  std::string ramp;
  std::optional<std::string> sweep;
  std::string out;
};

RampSpec ramp_from_json(const json& j, RampSpec r) {
  if (!j.is_object()) throw SpinError("ramp: expected a JSON object");
  if (j.contains("shape")) r.shape = ramp_shape_from_string(j["shape"].get<std::string>());
  auto num = [&](const char* key, double& v) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw SpinError(std::string("ramp: field '") + key + "' must be a number");
    v = j[key].get<double>();
  };
  num("omega_start_rad_s", r.omega_start);
  num("omega_end_rad_s", r.omega_end);
  num("ramp_time_s", r.ramp_time);
  num("hold_time_s", r.hold_time);
  return r;
}

json ramp_to_json(const RampSpec& r) {
  return {{"shape", to_string(r.shape)},
          {"omega_start_rad_s", r.omega_start},
          {"omega_end_rad_s", r.omega_end},
          {"ramp_time_s", r.ramp_time},
          {"hold_time_s", r.hold_time}};
}

void cmd_squeeze(const Context& ctx, const SqueezeArgs& a) {
  RunConfig cfg = build_config(a.common, "default");
  if (a.out.empty()) throw UsageError("--out is required");
  const SpinSystem sys = build_spin_system(cfg.f);
  RampSpec ramp = cfg.ramp;
  if (!a.ramp.empty()) {
    const json j = read_json_file(a.ramp);
    ramp = ramp_from_json(j, ramp);
    if (!j.contains("ramp_time_s") && ramp.omega_start > ramp.omega_end && ramp.omega_end > 0.0)
      ramp.ramp_time =
          adiabatic_ramp_time(sys, cfg.params.nonlinear_rate, ramp.omega_start, ramp.omega_end, ramp.shape);
  }
  try {
    ramp.validate();
    if (ramp.omega_start > std::abs(cfg.params.larmor_rate) * (1.0 + 1e-12))
      throw SpinError("ramp omega_start exceeds the maximum Larmor rate");
  } catch (const SpinError& e) {
    throw UsageError(std::string("invalid ramp: ") + e.what());
  }

  std::vector<double> omegas;
  if (a.sweep) {
    std::stringstream ss(*a.sweep);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        omegas.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw UsageError("--sweep: not a number: '" + item + "'");
      }
    }
    if (omegas.empty()) throw UsageError("--sweep: empty list of omega_end values");
  } else {
    omegas = cfg.sweep_points == 1 ? std::vector<double>{ramp.omega_end} : default_sweep_values(ramp, cfg.sweep_points);
  }
  for (double w : omegas)
    if (!(w >= 0.0) || w > ramp.omega_start) throw UsageError("--sweep: omega_end " + fmt(w) + " outside [0, omega_start]");

  const auto rows = sweep_final_field(sys, cfg.params, cfg.noise, ramp, omegas, cfg.pumped_fraction);
  const auto oracle = ground_state_xi(sys, cfg.params.nonlinear_rate, omegas);

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].report && (!best || rows[i].report->squeezing_db < rows[*best].report->squeezing_db)) best = i;

  Outputs o(a.out, "run_record.json");
  o.add("sweep.csv", sweep_csv(rows, o.csv_header({"squeeze axis x, anti-squeeze axis z, mean spin along y",
                                                   "dB relative to a coherent state with the same |<F_y>|",
                                                   "noise: " + to_string(cfg.noise.decoherence)})));
  {
    std::ostringstream os;
    os << "# run_record: " << o.record_name() << "\n# exact ground state of omega fy + chi fx^2, chi = "
       << std::setprecision(17) << cfg.params.nonlinear_rate << " rad/s\n"
       << "omega_rad_s,xi,xi_normalized,squeezing_db,gap_rad_s\n";
    for (const auto& r : oracle) {
      os << r.omega << ',';
      if (r.values) os << r.values->xi << ',' << r.values->xi_normalized << ',' << r.values->squeezing_db;
      else os << "nan,nan,nan";
      os << ',' << r.gap << '\n';
    }
    o.add("oracle.csv", os.str());
  }
  json report{{"ramp", ramp_to_json(ramp)},
              {"noise", noise_to_json(cfg.noise)},
              {"pumped_fraction", cfg.pumped_fraction},
              {"control_duration_s", cfg.params.duration},
              {"ramp_duration_s", ramp.total_time()},
              {"duration_ratio_ramp_over_control", ramp.total_time() / cfg.params.duration}};
  json jrows = json::array();
  for (const auto& r : rows) {
    json jr{{"omega_end_rad_s", r.omega_end}};
    if (r.report) jr["report"] = squeeze_report_to_json(*r.report);
    else jr["error"] = r.error;
    jrows.push_back(jr);
  }
  report["rows"] = jrows;
  if (best) {
    report["best"] = {{"omega_end_rad_s", rows[*best].omega_end}, {"report", squeeze_report_to_json(*rows[*best].report)}};
    const AdiabaticRun run =
        run_adiabatic(sys, cfg.params, cfg.noise, ramp.truncated_at(rows[*best].omega_end), 2, cfg.pumped_fraction);
    const WignerGrid g = wigner_grid(sys, run.trajectory.states.back(), cfg.wigner_n_theta, cfg.wigner_n_phi);
    std::ostringstream os;
    write_wigner_csv(os, g, o.csv_header({"best squeezing point, omega_end = " + fmt(rows[*best].omega_end, 10) + " rad/s"}));
    o.add("best_wigner.csv", os.str());
    ctx.out << "best squeezing " << fmt(rows[*best].report->squeezing_db, 5) << " dB at omega_end = "
            << fmt(rows[*best].omega_end, 6) << " rad/s (xi_normalized " << fmt(rows[*best].report->xi_normalized, 6)
            << ")\n";
  } else {
    ctx.out << "no sweep point has a defined squeezing parameter\n";
  }
  o.add_json("report.json", o.tag(report));
  std::vector<std::string> inputs;
  if (!a.common.config_file.empty()) inputs.push_back(a.common.config_file);
  if (!a.ramp.empty()) inputs.push_back(a.ramp);
  finish(ctx, "squeeze", &cfg, o, inputs);
}

// --- stats ------------------------------------------------------------------

struct StatsArgs {
  Common common;
  std::string batch_dir;
  bool synthetic = false;
  std::string out;
};

std::vector<BatchInput> load_batch_dir(const fs::path& dir, const SpinSystem& sys, std::vector<std::string>& inputs) {
  if (!fs::is_directory(dir)) throw SpinError("batch directory not found: " + dir.string());
  static const char* roles[3] = {".target.json", ".predicted.json", ".measured.json"};
  std::map<std::string, std::array<std::optional<fs::path>, 3>> groups;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    for (int r = 0; r < 3; ++r)
      if (name.ends_with(roles[r]) && name.size() > std::strlen(roles[r]))
        groups[name.substr(0, name.size() - std::strlen(roles[r]))][r] = e.path();
  }
  if (groups.empty())
    throw SpinError("batch directory " + dir.string() + " holds no <label>.{target,predicted,measured}.json files");
  std::vector<std::string> unpaired;
  for (const auto& [label, files] : groups)
    for (int r = 0; r < 3; ++r)
      if (!files[r]) unpaired.push_back(label + roles[r]);
  if (!unpaired.empty()) {
    std::string list;
    for (const auto& u : unpaired) list += "\n  missing " + u;
    throw SpinError("unpaired batch files:" + list);
  }
  std::vector<BatchInput> out;
  for (const auto& [label, files] : groups) {
    std::vector<QuantumState> s;
    for (int r = 0; r < 3; ++r) {
      inputs.push_back(files[r]->string());
      s.push_back(state_from_json(read_json_file(*files[r])));
      if (s.back().dim() != sys.dim()) throw SpinError(files[r]->string() + ": dimension does not match f");
    }
    out.push_back({label, s[0], s[1], s[2]});
  }
  return out;
}

void cmd_stats(const Context& ctx, const StatsArgs& a) {
  RunConfig cfg = build_config(a.common, "default");
  if (a.synthetic == !a.batch_dir.empty()) throw UsageError("give exactly one of --batch-dir or --synthetic");
  if (a.out.empty()) throw UsageError("--out is required");
  const SpinSystem sys = build_spin_system(cfg.f);
  std::vector<std::string> inputs;
  const std::vector<BatchInput> batch =
      a.synthetic ? synthetic_batch(sys, cfg.synthetic) : load_batch_dir(a.batch_dir, sys, inputs);
  const BatchRecord rec = batch_evaluate(sys, batch, cfg.histogram_bins);

  Outputs o(a.out, "run_record.json");
  const std::string source = a.synthetic ? "SYNTHETIC measured states (displacement model), not laboratory data"
                                         : "states from " + a.batch_dir;
  auto hist = [&](const char* name, const Histogram& h, const char* what) {
    o.add(name, histogram_csv(h, o.csv_header({what, source})));
  };
  hist("hist_yields.csv", rec.yields, "yield (Uhlmann overlap with the target) of measured states");
  hist("hist_fidelities.csv", rec.fidelities, "fidelity of measured vs predicted states");
  hist("hist_corrected_yields.csv", rec.corrected_yields, "yield after rotation correction");
  hist("hist_corrected_fidelities.csv", rec.corrected_fidelities, "fidelity after rotation correction");
  json bj = batch_to_json(rec);
  bj["source"] = source;
  bj["synthetic"] = a.synthetic;
  o.add_json("batch.json", o.tag(bj));
  int failed = 0;
  for (const auto& e : rec.entries)
    if (!e.error.empty()) {
      ++failed;
      ctx.out << "entry " << e.label << " failed: " << e.error << '\n';
    }
  ctx.out << rec.entries.size() << " entries evaluated, " << failed << " failed\n";
  if (!a.common.config_file.empty()) inputs.push_back(a.common.config_file);
  finish(ctx, "stats", &cfg, o, inputs);
}

// --- wigner -----------------------------------------------------------------

struct WignerArgs {
  Common common;
  std::string state;
  std::string target;
  std::optional<int> n_theta, n_phi;
  std::string out;
};

void cmd_wigner(const Context& ctx, const WignerArgs& a) {
  RunConfig cfg = build_config(a.common, "none");
  if (a.n_theta) cfg.wigner_n_theta = *a.n_theta;
  if (a.n_phi) cfg.wigner_n_phi = *a.n_phi;
  if (cfg.wigner_n_theta < 2 || cfg.wigner_n_phi < 3) throw UsageError("wigner grid needs n_theta >= 2 and n_phi >= 3");
  if (a.state.empty() == a.target.empty()) throw UsageError("give exactly one of --state or --target");
  if (a.out.empty()) throw UsageError("--out is required");
  std::vector<std::string> inputs;
  QuantumState s = [&] {
    if (!a.state.empty()) {
      inputs.push_back(a.state);
      return state_from_json(read_json_file(a.state));
    }
    return resolve_target(a.target, build_spin_system(cfg.f));
  }();
  const SpinSystem sys = spin_system_for_dim(s.dim());
  const WignerGrid g = wigner_grid(sys, s, cfg.wigner_n_theta, cfg.wigner_n_phi);
  const fs::path p(a.out);
  Outputs o(p.has_parent_path() ? p.parent_path() : fs::path("."), p.filename().string() + ".run.json");
  std::ostringstream os;
  write_wigner_csv(os, g, o.csv_header({"sphere integral = " + fmt(g.integral(), 12)}));
  o.add(p.filename().string(), os.str());
  finish(ctx, "wigner", &cfg, o, inputs);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"spinctl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spin-F quantum control toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  OpsArgs ops;
  auto* c_ops = app.add_subcommand("ops", "write fx, fy, fz, fx^2 for spin f");
  c_ops->add_option("--f", ops.f, "spin quantum number (integer or half-integer)");
  c_ops->add_option("--out", ops.out, "output JSON file (stdout if omitted)");

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "two-stage waveform design for a target state");
  c_opt->add_option("--target", opt.target, "library name or state JSON file")->required();
  c_opt->add_option("--seeds", opt.seeds, "number of random stage-1 seeds");
  c_opt->add_option("--out", opt.out, "output directory")->required();
  add_common(c_opt, opt.common);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "propagate a waveform and record snapshots");
  c_sim->add_option("--waveform", sim.waveform, "waveform JSON file")->required();
  c_sim->add_flag("--master", sim.master, "dissipative ensemble evolution (default noise unless --noise)");
  c_sim->add_option("--snapshots", sim.snapshots, "equally spaced snapshots including both ends");
  c_sim->add_option("--target", sim.target, "adds a yield_mixed channel against this target");
  c_sim->add_option("--initial", sim.initial, "initial state JSON (default |m_y=+f>)");
  c_sim->add_flag("--no-wigner", sim.no_wigner, "skip per-snapshot Wigner grids");
  c_sim->add_option("--out", sim.out, "output directory")->required();
  add_common(c_sim, sim.common);

  SqueezeArgs sq;
  auto* c_sq = app.add_subcommand("squeeze", "adiabatic squeezing sweep over the final field");
  c_sq->add_option("--ramp", sq.ramp, "ramp JSON (shape, omega_start_rad_s, omega_end_rad_s, ramp_time_s, hold_time_s)");
  c_sq->add_option("--sweep", sq.sweep, "comma-separated omega_end values in rad/s");
  c_sq->add_option("--out", sq.out, "output directory")->required();
  add_common(c_sq, sq.common);

  StatsArgs st;
  auto* c_st = app.add_subcommand("stats", "yield/fidelity statistics with rotation correction");
  c_st->add_option("--batch-dir", st.batch_dir, "directory of <label>.{target,predicted,measured}.json");
  c_st->add_flag("--synthetic", st.synthetic, "synthetic measured states from the displacement model");
  c_st->add_option("--out", st.out, "output directory")->required();
  add_common(c_st, st.common);

  WignerArgs wg;
  auto* c_wg = app.add_subcommand("wigner", "spherical Wigner function grid of a state");
  c_wg->add_option("--state", wg.state, "state JSON file");
  c_wg->add_option("--target", wg.target, "library target name");
  c_wg->add_option("--n-theta", wg.n_theta, "Gauss-Legendre points in theta");
  c_wg->add_option("--n-phi", wg.n_phi, "uniform points in phi");
  c_wg->add_option("--out", wg.out, "output CSV file")->required();
  add_common(c_wg, wg.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Context ctx{std::vector<std::string>(argv + 1, argv + argc), std::chrono::steady_clock::now(), out};
  try {
    if (c_ops->parsed()) cmd_ops(ctx, ops);
    else if (c_opt->parsed()) cmd_optimize(ctx, opt);
    else if (c_sim->parsed()) cmd_simulate(ctx, sim);
    else if (c_sq->parsed()) cmd_squeeze(ctx, sq);
    else if (c_st->parsed()) cmd_stats(ctx, st);
    else if (c_wg->parsed()) cmd_wigner(ctx, wg);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace spinctl
