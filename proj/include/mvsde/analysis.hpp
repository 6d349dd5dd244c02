#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/model.hpp"
#include "mvsde/scheme.hpp"

namespace mvsde {

// --- strong convergence ------------------------------------------------------

struct ConvergenceOptions {
    std::vector<std::size_t> levels;
    std::size_t reference_level = 0;
    std::size_t repetitions = 1;
    /// Repetitions run in parallel across this many workers (0: OpenMP
    /// default). Does not affect results.
    int threads = 0;
    /// A level fails when more than this fraction of repetitions diverge.
    double max_divergence_fraction = 0.01;
    /// Errors at or below this multiple of the reference state's RMS norm are
    /// summation-order round-off and are reported as exactly 0.
    double roundoff_tolerance = 1e-12;
};

struct ConvergenceReport {
    std::vector<std::size_t> levels;
    std::vector<double> step_sizes;
    /// Terminal-time RMSE against the coupled reference, over particles and
    /// repetitions.
    std::vector<double> rmse;
    /// sqrt(max over coarse grid times of the mean-square error).
    std::vector<double> rmse_sup;
    std::vector<std::size_t> diverged;
    std::optional<double> slope;      // nullopt: every level is exact
    std::optional<double> slope_sup;
    std::size_t repetitions = 0;
    std::size_t reference_level = 0;
    bool excessive_divergence = false;
};

/// Runs each level and a reference at `reference_level` on the same Brownian
/// lattice and initial draws (repetition r uses seed base.seed + r) and
/// measures the pathwise error at the shared grid times. base.steps and
/// base.fine_steps are ignored; the lattice is built at the reference level.
ConvergenceReport strong_error(const CoefficientModel& model, const SimConfig& base,
                               const ConvergenceOptions& options);

/// Least-squares slope of log2(rmse) against log2(h) with h proportional to
/// 1 / level. Returns nullopt if any rmse is exactly zero (exact scheme).
std::optional<double> fit_rate(std::span<const std::size_t> levels, std::span<const double> rmse);

// --- derivative validation ---------------------------------------------------

/// |a - b| / max(|a|, |b|), falling back to |a - b| when both are below 1e-8.
double relative_error(double a, double b);

double central_difference(const std::function<double(double)>& f, double at, double eps);

/// Central-difference gradient of f in atom j of mu, rebuilding the
/// empirical measure for each perturbation.
std::vector<double> atom_gradient(const std::function<double(const EmpiricalMeasure&)>& f,
                                  const EmpiricalMeasure& mu, std::size_t j, double eps);

struct DerivativeCheck {
    std::string coefficient;  // dx_b, dx_sigma, dmu_b, dmu_sigma
    std::size_t k = 0;
    std::size_t l = 0;
    std::size_t j = 0;          // atom index (measure checks only)
    std::size_t component = 0;  // gradient component
    double analytic = 0.0;
    double numeric = 0.0;
    double error = 0.0;
    bool passed = true;

    std::string describe() const;
};

struct DerivativeReport {
    std::vector<DerivativeCheck> checks;
    double max_error = 0.0;
    bool passed = true;

    std::vector<DerivativeCheck> failures() const;
};

/// Compares d_x b, d_x sigma with central differences in x, and
/// (1/N) d_mu b, (1/N) d_mu sigma at y = x_j with central differences in
/// atom j of mu. eps must lie in [1e-8, 1e-3].
DerivativeReport validate_derivatives(const CoefficientModel& model, std::span<const double> x,
                                      const EmpiricalMeasure& mu, std::size_t j,
                                      double eps = 1e-5, double tolerance = 1e-4);

/// Same, for every atom of mu.
DerivativeReport validate_derivatives(const CoefficientModel& model, std::span<const double> x,
                                      const EmpiricalMeasure& mu, double eps = 1e-5,
                                      double tolerance = 1e-4);

// --- moments -----------------------------------------------------------------

struct MomentSeries {
    std::vector<std::size_t> steps;
    std::vector<double> times;
    std::vector<double> values;
    double max = 0.0;
    bool diverged = false;
};

/// (1/N) sum_i |X^i|^p per snapshot. Requires p >= 2.
MomentSeries moment_track(const Trajectory& trajectory, double p);

// --- propagation of chaos ----------------------------------------------------

struct ChaosRow {
    std::size_t small = 0;
    std::size_t large = 0;
    double mean_diff = 0.0;
    double second_moment_diff = 0.0;
    /// Exact 1-D W2 between the small run's terminal atoms and the first
    /// `small` atoms of the large run (NaN when d > 1).
    double w2_diff = 0.0;
    /// Pathwise distance between particle i of both runs (same noise).
    double coupling_diff = 0.0;
};

struct ChaosReport {
    std::vector<ChaosRow> rows;
    std::size_t repetitions = 0;
    std::size_t diverged = 0;
    bool mean_decreasing = false;
    bool second_moment_decreasing = false;
    bool w2_decreasing = false;
    bool coupling_decreasing = false;
};

/// Runs nested particle systems (particle i shares noise and X_0 across all
/// counts) and reports RMS over repetitions of terminal-statistic
/// differences between consecutive counts. Qualitative only.
ChaosReport chaos_study(const CoefficientModel& model, const SimConfig& base,
                        std::span<const std::size_t> particle_counts, std::size_t repetitions);

}  // namespace mvsde
