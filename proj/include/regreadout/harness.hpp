#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "regreadout/ensemble.hpp"

namespace regreadout {

/// Bad configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A --check assertion did not hold (exit code 3).
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitCheck = 3 };

std::string_view library_version();

struct ExperimentConfig {
  int num_qubits = 1;
  double gamma = 1.0;
  double dt = kReferenceTimeStep;
  double max_time = 10.0;
  Integrator integrator = Integrator::exact;
  PolicyKind policy = PolicyKind::none;
  std::optional<std::filesystem::path> cycle_file;
  std::vector<double> epsilons = default_epsilon_grid();
  std::size_t count = 10000;
  std::uint64_t seed = kDefaultMasterSeed;
  std::filesystem::path out = "regreadout_out";
  double stop_epsilon = 1e-6;
  double sample_interval = 0.01;
  /// ln(infidelity) fit window in units of 1/gamma. Trajectories run at
  /// least until its end.
  std::pair<double, double> fit_window{0.5, 1.0};
  unsigned threads = 0;

  /// Throws ConfigError.
  void validate() const;
  SimulationParams simulation_params() const;
  /// Loads the cycle file when needed. With no file, n = 2 falls back to
  /// the single 3-cycle on indices 0..2.
  ControlPolicy control_policy() const;
  EnsembleOptions ensemble_options() const;
};

/// Applies one `key = value` setting. Throws ConfigError naming the key.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; '#' starts a comment. Errors read
/// "source:line: message".
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>",
                              ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// "1e-4,1e-5" or "default".
std::vector<double> parse_epsilon_list(std::string_view text);
std::vector<int> parse_int_list(std::string_view text);

nlohmann::json config_to_json(const ExperimentConfig& config);

// CSV emitters. Column order is fixed; numbers use round-trip precision.
inline constexpr std::string_view kTrajectoriesHeader = "t,mean_ln_delta,stderr";
inline constexpr std::string_view kFirstPassageHeader = "epsilon,mean_T,stderr,censored_frac";
inline constexpr std::string_view kSweepHeader = "policy,n,speedup,stderr,bound_lo,bound_hi";

void write_trajectories_csv(std::ostream& os, const EnsembleStats& stats);
void write_first_passage_csv(std::ostream& os, const EnsembleStats& stats);
void write_sweep_csv(std::ostream& os, std::span<const SweepResult> sweeps);

nlohmann::json ensemble_summary(const EnsembleStats& stats);

struct RunOutputs {
  EnsembleStats stats;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

/// Runs one ensemble and writes trajectories.csv, first_passage.csv,
/// summary.json and manifest.json into config.out.
RunOutputs cmd_run(const ExperimentConfig& config);

/// Throws CheckFailure when censoring reaches 0.1% or, without control,
/// the ln(infidelity) slope misses -16 gamma by more than 5%.
void check_run(const RunOutputs& run);

inline constexpr int kSafeSweepMaxQubits = 5;

struct SweepOutputs {
  std::vector<SweepResult> sweeps;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

/// Writes sweep.csv, sweep.json and manifest.json. n above 5 requires
/// allow_large_n.
SweepOutputs cmd_sweep(const ExperimentConfig& config, std::span<const int> n_values,
                       std::span<const PolicyKind> policies, bool allow_large_n);

/// Throws CheckFailure when a speed-up sits outside its analytic band by
/// more than 3 standard errors.
void check_sweep(const SweepOutputs& sweep);

nlohmann::json bounds_report(int n_lo, int n_hi);
void print_bounds(std::ostream& os, const nlohmann::json& report);

nlohmann::json identities_report(std::span<const std::size_t> dims);
void print_identities(std::ostream& os, const nlohmann::json& report);

}  // namespace regreadout
