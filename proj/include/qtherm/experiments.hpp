// Copyright 2026 The qtherm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtherm/common.hpp"
#include "qtherm/models.hpp"

namespace qtherm::app {

namespace fs = std::filesystem;
using nlohmann::json;

enum class ExperimentKind { kEvolve, kTrajectories, kDosMeasure, kEinstein, kEntropy, kOu, kSampleEnsemble };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);  // ConfigError if unknown
std::vector<std::string> experiment_names();

struct ModelSpec {
  ModelKind kind = ModelKind::kOscillatorChain;
  OscillatorParams oscillator;
  BlbqParams blbq;
  SpinHalfParams spin_half;
  Index max_dim = 20000;
};

HamiltonianPair build_model(const ModelSpec& spec);
std::vector<std::string> model_names();
ModelKind model_from_string(const std::string& name);

struct StateRule {
  std::string rule = "mid_spectrum_max";  // mid_spectrum_max | central_half_max | product
  Index count = 1;
  Index index = -1;
};

struct TimeGridSpec {
  std::string kind = "log";  // log | linear
  double t_min = 1e-2;
  double t_max = 200.0;
  Index n = 400;

  Vector build() const;
};

struct EvolveKnobs {
  TimeGridSpec grid;
  double band_factor = 2.0;
  double max_residual_fraction = 0.1;
};

struct TrajectoryKnobs {
  std::vector<double> dt_list{2.0};
  Index n_meas = 50;
  Index n_real = 500;
  TimeGridSpec grid;  // for the unmonitored reference decay
  double band_factor = 2.0;
  Index entropy_record_length = 1000;
  Index dump_realizations = 10;
  // Acceptance bookkeeping; each check is skipped when its dt is not swept.
  std::optional<double> zeno_dt;
  std::vector<double> ratio_dts;
  double ratio_lo = 0.8;
  double ratio_hi = 1.2;
  double zeno_max_ratio = 0.8;
  std::vector<double> entropy_dts;
  double entropy_n_se = 2.0;
  double entropy_saturation = 0.05;
  std::optional<double> histories_dt;
  double histories_max_z = 3.0;
  std::optional<double> kernel_dt;
  double kernel_max_z = 3.0;
  std::optional<double> drift_dt;
  std::optional<double> drift_target;
  double drift_factor = 2.0;
};

struct DosKnobs {
  TimeGridSpec grid;
  double bandwidth = 0.0;
  double band_factor = 2.0;
  double tolerance_factor = 1.5;
  double required_fraction = 0.8;
};

struct EinsteinKnobs {
  TimeGridSpec grid;
  double mass = 2.0;
  double bath_bandwidth = 0.0;  // <= 0: max(default rule, widest gap between distinct bath levels)
  double band_factor = 2.0;
  double max_deviation = 0.3;
  Index min_states = 5;
  // Analytic control: D_B = exp(beta E) on the integer lattice |s| <= gaussian_half_range.
  double gaussian_beta = 0.05;
  Index gaussian_half_range = 60;
  double gaussian_tolerance = 1e-6;
};

struct OracleKnobs {
  Index n_outcomes = 7;
  Index n_ck_draws = 100;
  Index n_entropy_draws = 50;
  Index n_entropy_times = 400;
  double gamma_min = 0.01;
  double gamma_max = 2.0;
  double ck_tolerance = 1e-12;
  double stationarity_tolerance = 1e-12;
  double long_time_tolerance = 1e-9;
  double entropy_tolerance = 1e-12;
};

struct OuKnobs {
  double k = 1.0;
  double gamma_friction = 1.0;
  double diffusion = 0.5;
  std::vector<double> x0_list{0.0, 2.0};
  double dt_step = 0.01;
  double t_final = 10.0;
  Index n_paths = 10000;
  Index n_records = 101;
  double v_std = 0.3;
  double shaken_diffusion = 0.1;
  double shaken_dt_step = 0.05;
  double shaken_t_final = 1000.0;
  double burn_in = 10.0;
  double temperature = 0.8;
  double n_sigma = 3.0;
  double shaken_tolerance = 0.1;
  double curve_tolerance = 0.05;
};

struct EnsembleKnobs {
  Index n_grid = 401;
  double omega0 = 1.0;
  double gamma = 10.0;
  Index row_begin = 200;
  Index n_states = 2;
  Index n_members = 10000;
  Index max_offset = 60;
  std::string orthogonalization = "preserve_norms";  // preserve_norms | orthonormal
  std::vector<std::array<Index, 6>> tuples;
  Index variance_bin = 5;         // offsets pooled per bin
  Index variance_check_offset = 30;  // bins with |offset| <= this are checked
  double variance_tolerance = 0.05;
  double four_point_n_sigma = 3.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kEvolve;
  json raw;  // as read, used for hashing and the manifest
  std::optional<ModelSpec> model;
  std::string observable;
  StateRule state;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output;  // empty: derived from the config name
  EvolveKnobs evolve;
  TrajectoryKnobs trajectories;
  DosKnobs dos;
  EinsteinKnobs einstein;
  OracleKnobs oracle;
  OuKnobs ou;
  EnsembleKnobs ensemble;
};

// Validates against the schema; unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const fs::path& path);
// The "model" section on its own, with the same validation.
ModelSpec parse_model_section(const json& j);
std::string config_hash(const json& raw);

using Logger = std::function<void(const std::string&)>;

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config
  std::optional<int> threads;
  Logger log;
};

struct RunSummary {
  fs::path dir;
  std::vector<std::string> files;
  double wall_seconds = 0.0;
};

// Runs the pipeline and writes outputs plus manifest.json into out_dir. On
// failure the partial outputs stay, a FAILED marker is written and the
// original exception is rethrown.
RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir,
                          const RunOptions& opt = {});

// Writes H (binary), the spectrum (binary), free and eigen energies and the
// mid-spectrum envelope bins for the config's model, with a manifest.
inline constexpr const char* kDumpLabel = "dump-matrix";
RunSummary dump_model(const ExperimentConfig& cfg, const fs::path& out_dir, const RunOptions& opt = {});

// Output directory: explicit flag, else the config's "output", else
// $QTHERM_OUTPUT_ROOT (or ./qtherm-out) / <config stem>.
fs::path resolve_output_dir(const ExperimentConfig& cfg, const fs::path& config_path,
                            const std::optional<fs::path>& flag);

struct Verdict {
  int criterion = 0;
  std::string label;
  bool pass = false;
  std::string detail;
};

class MissingArtifacts : public std::runtime_error {
 public:
  explicit MissingArtifacts(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

// Re-evaluates the acceptance checks that apply to the run in `dir` from its
// CSV artifacts alone.
std::vector<Verdict> verify_run(const fs::path& dir);

// Exit codes shared by the CLI and tests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitAcceptance = 4;
inline constexpr int kExitMissing = 5;
inline constexpr int kExitIo = 6;

}  // namespace qtherm::app
