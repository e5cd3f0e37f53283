#pragma once

// File formats shared by the CLI and the plotting scripts.
//
//   state     {"f": 3, "kind": "pure"|"mixed", "data": [[re, im], ...] or rows of them}
//   operator  same layout with "kind": "operator"
//   waveform  {"params": {...}, "phis": [rad], "filter": {...}}
//   config    flat "key = value" lines, '#' comments; keys listed in config_keys()
//
// Angular frequencies are rad/s with a _rad_s suffix; times are seconds.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinctl/analysis.hpp"
#include "spinctl/optimizer.hpp"
#include "spinctl/squeezing.hpp"
#include "spinctl/wigner.hpp"

namespace spinctl {

using json = nlohmann::json;

json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const json& j, const std::string& what);

json state_to_json(const QuantumState& s);
QuantumState state_from_json(const json& j);
json operator_to_json(const SpinSystem& sys, const CMatrix& op);

json params_to_json(const ControlParams& p);
ControlParams params_from_json(const json& j);
json filter_to_json(const FilterSpec& f);
FilterSpec filter_from_json(const json& j);
json noise_to_json(const NoiseModel& n);

json waveform_to_json(const ControlWaveform& w, const FilterSpec& filter, double f = 3.0);
struct WaveformFile {
  ControlWaveform waveform;
  FilterSpec filter;
  double f = 3.0;
};
WaveformFile waveform_from_json(const json& j);

json result_to_json(const OptimizationResult& r);
json trajectory_to_json(const Trajectory& t);
/// time_s then the metric channels in name order.
std::string trajectory_csv(const Trajectory& t, const std::vector<std::string>& header = {});
json squeeze_report_to_json(const SqueezeReport& r);
std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& header = {});
std::string histogram_csv(const Histogram& h, const std::vector<std::string>& header = {});
json batch_to_json(const BatchRecord& rec);

json read_json_file(const std::filesystem::path& p);
std::string read_text_file(const std::filesystem::path& p);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_text_file(const std::filesystem::path& p, const std::string& text);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

/// Everything a command can be configured with. Layering: built-in defaults,
/// then a config file, then command-line flags.
struct RunConfig {
  double f = 3.0;
  ControlParams params;
  FilterSpec filter = FilterSpec::for_params(ControlParams{});
  bool filter_substeps_set = false;
  NoiseModel noise = NoiseModel::defaults(ControlParams{});
  std::optional<double> scattering_rate;  // default chi / beta
  OptimizerConfig optimizer;
  double pumped_fraction = 1.0;
  RampSpec ramp;
  bool ramp_time_set = false;
  int sweep_points = 16;
  int wigner_n_theta = kDefaultThetaPoints;
  int wigner_n_phi = kDefaultPhiPoints;
  SyntheticBatchConfig synthetic;
  int histogram_bins = 20;

  /// Throws SpinError naming the key when it is unknown or its value does not parse.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& p);
  /// Fills derived defaults (substeps, scattering rate, ramp time) and validates.
  void finalize();
  std::map<std::string, std::string> snapshot() const;
};

std::vector<std::string> config_keys();

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunRecord {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;
  std::uint64_t rng_seed = 0;
  std::vector<FileDigest> inputs, outputs;
  double wall_time_s = 0.0;
};

json run_record_to_json(const RunRecord& r);
std::string version_string();

} // namespace spinctl
