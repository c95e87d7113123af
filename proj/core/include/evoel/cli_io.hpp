#pragma once

// JSON run configuration, the validate / run / derive / zoo-list commands
// and their CSV and JSON outputs.
//
// Exit codes: 0 ok, 1 validation failed, 2 configuration error,
// 3 solver error.

#include "evoel/evolution.hpp"
#include "evoel/model_zoo.hpp"

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace evoel::cli {

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kConfigError = 2, kSolverError = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForcingConfig {
  std::string kind = "zero";  // gaussian_pulse | constant | zero
  double onset = 0.0;
  double center = 0.5;
  double width = 0.1;
  double amplitude = 1.0;
  double end = std::numeric_limits<double>::infinity();
  std::string target_block;  // default: first kinetic block
};

struct OutputConfig {
  std::string energy_csv;
  Index snapshot_every = 0;
  std::string snapshot_dir;
  std::string report_json;
};

struct EdgeConfig {
  std::string to;
  bool dynamics = false;
};

struct RunConfig {
  ModelSpec model;
  bool has_time = false;
  double dt = 1e-3;
  double horizon = 1.0;
  Scheme scheme = Scheme::midpoint;
  ForcingConfig forcing;
  OutputConfig outputs;
  double rho = 1.0;
  bool force = false;
  std::optional<EdgeConfig> edge;
};

/// Unknown keys, wrong types, missing required fields and violated
/// invariants (dt > 0, T > dt, onset in [0, T)) raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

struct CommandResult {
  int exit_code = kOk;
  std::string report;  // JSON
};

CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_run(const RunConfig& cfg);
CommandResult cmd_derive(const RunConfig& cfg);
std::string cmd_zoo_list();

/// Separable forcing g(t) s(x): s is sin(pi x1/L) sin(pi x2/L) sin(pi x3/L)
/// on every component of the target block, L the box side.
Forcing make_forcing(const ForcingConfig& f, const StateLayout& layout, const Grid& grid);

/// Columns t, E_total, E_M0, E_M2, work_integral, residual with 17
/// significant digits; residual is |E_k - E_0 - work_integral_k|.
void write_energy_csv(const std::string& path, const Trajectory& traj);

}  // namespace evoel::cli
