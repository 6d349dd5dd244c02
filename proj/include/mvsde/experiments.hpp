#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mvsde/analysis.hpp"
#include "mvsde/config.hpp"

namespace mvsde {

/// Process exit codes of the command-line workflows.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 1;
inline constexpr int divergence = 2;
inline constexpr int excessive_divergence = 3;
inline constexpr int validation_failed = 4;
}  // namespace exit_code

/// Shortest round-trip decimal representation ("%.17g").
std::string format_double(double v);

/// Writes `step,t,particle,x_1..x_d` rows for every snapshot.
void write_trajectory_csv(const Trajectory& traj, std::ostream& csv);

/// {"event":"divergence","step":..,"particle":..,"t":..}
std::string divergence_json(const DivergenceEvent& ev);

/// Each workflow validates `cfg` first (ConfigError escapes before anything
/// runs), writes its data to `csv` and diagnostics to `err`.
int run_simulate(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err);

/// `out` receives the slope line(s).
int run_converge(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& out,
                 std::ostream& err);

int run_moments(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err);

int run_chaos(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err);

/// Finite-difference check of all four derivative families at a fixed
/// general-position test point; lists every failing coefficient.
int run_validate(const CoefficientModel& model, double eps, std::ostream& out);

/// Default parameters used by `validate --model <name>`.
std::map<std::string, double> default_model_params(const std::string& name);

}  // namespace mvsde
