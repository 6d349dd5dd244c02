#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/scheme.hpp"

namespace mvsde {

/// Invalid experiment configuration; the message carries the source line
/// when it can be located.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Workflow { simulate, converge, validate, moments, chaos };

enum class ErrorMetric { terminal, sup };

/// Parsed JSON experiment file.
///
/// Keys: model {name, params}, N, n, n_fine, T, scheme ("euler" | "milstein"),
/// taming, seed, initial {kind, params}, output {path, stride}; converge
/// extras levels, n_ref, repetitions, error_metric; moments extra p; chaos
/// extras particle_counts, repetitions; diagnostics lambda1, lambda2.
/// Unknown keys are rejected.
struct ExperimentConfig {
    std::string model_name;
    std::map<std::string, double> model_params;
    SimConfig sim;
    bool has_steps = false;
    std::optional<std::string> output_path;

    std::vector<std::size_t> levels;
    std::size_t reference_level = 0;
    std::size_t repetitions = 1;
    ErrorMetric error_metric = ErrorMetric::terminal;

    double moment_order = 4.0;
    std::vector<std::size_t> particle_counts;

    /// Checks everything the workflow needs, including that the model can be
    /// built, before anything runs. Throws ConfigError.
    void require(Workflow workflow) const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace mvsde
