#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"

namespace mvsde {

enum class Scheme { euler, milstein };

struct StepOptions {
    Scheme scheme = Scheme::milstein;
    /// Untamed stepping exists only to demonstrate explicit-Euler blow-up.
    bool taming = true;
    /// Diagnostic switches for the two Milstein corrections.
    bool lambda1 = true;
    bool lambda2 = true;
    /// Worker count for the per-particle loop; 0 uses the OpenMP default.
    /// Results are identical for every value.
    int threads = 0;
};

/// Positions of all particles at grid time t = step * h (row-major N x d).
struct SimState {
    double t = 0.0;
    std::size_t step = 0;
    std::size_t dim = 1;
    std::vector<double> positions;

    std::size_t particles() const { return positions.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {positions.data() + i * dim, dim}; }
    EmpiricalMeasure measure() const { return EmpiricalMeasure(positions, dim); }
};

/// First non-finite particle value; `step` is the index of the state that
/// could not be produced.
struct DivergenceEvent {
    std::size_t step = 0;
    std::size_t particle = 0;
    double t = 0.0;
};

struct StepResult {
    SimState state;
    std::optional<DivergenceEvent> divergence;
};

/// Space-derivative correction for particle i as a row-major d x m matrix:
/// (k, l) = sum_l1 <d_x sigma^{(k,l)}(X^i, mu), sigma^{(l1)}(X^i, mu)> I^{i,i}_{(l1,l)}.
std::vector<double> lambda1(const CoefficientModel& model, const SimState& state,
                            const StepNoise& noise, std::size_t i);
std::vector<double> lambda1(const CoefficientModel& model, const SimState& state,
                            const BrownianLattice& lattice, std::size_t i, std::size_t level,
                            std::size_t k);

/// Measure-derivative correction for particle i:
/// (k, l) = (1/N) sum_j sum_l1 <d_mu sigma^{(k,l)}(X^i, mu, X^j), sigma^{(l1)}(X^j, mu)> I^{j,i}_{(l1,l)}.
std::vector<double> lambda2(const CoefficientModel& model, const SimState& state,
                            const StepNoise& noise, std::size_t i);
std::vector<double> lambda2(const CoefficientModel& model, const SimState& state,
                            const BrownianLattice& lattice, std::size_t i, std::size_t level,
                            std::size_t k);

/// One explicit step on a grid with `level` steps (taming uses the same
/// level). All coefficients are frozen at the step-start snapshot; the
/// scheme field of `opts` selects Euler or Milstein.
StepResult advance(const CoefficientModel& model, const SimState& state, const StepNoise& noise,
                   std::size_t level, const StepOptions& opts);

StepResult milstein_step(const CoefficientModel& model, const SimState& state,
                         const StepNoise& noise, std::size_t level, StepOptions opts = {});
StepResult milstein_step(const CoefficientModel& model, const SimState& state,
                         const BrownianLattice& lattice, std::size_t level, StepOptions opts = {});
StepResult euler_step(const CoefficientModel& model, const SimState& state,
                      const StepNoise& noise, std::size_t level, StepOptions opts = {});
StepResult euler_step(const CoefficientModel& model, const SimState& state,
                      const BrownianLattice& lattice, std::size_t level, StepOptions opts = {});

namespace reference {

/// Serial step written straight from the update formula: no coefficient
/// caching, iterated integrals queried from the lattice one at a time. Kept
/// to cross-check and benchmark the parallel kernel.
StepResult advance(const CoefficientModel& model, const SimState& state,
                   const BrownianLattice& lattice, std::size_t level, const StepOptions& opts);

}  // namespace reference

// --- full runs ---------------------------------------------------------------

enum class InitialKind { constant, gaussian, uniform };

/// i.i.d. law of each component of X_0.
struct InitialLaw {
    InitialKind kind = InitialKind::constant;
    double a = 0.0;  // constant: value; gaussian: mean; uniform: low
    double b = 0.0;  // gaussian: standard deviation; uniform: high

    static InitialLaw constant(double value) { return {InitialKind::constant, value, 0.0}; }
    static InitialLaw gaussian(double mean, double sd) { return {InitialKind::gaussian, mean, sd}; }
    static InitialLaw uniform(double lo, double hi) { return {InitialKind::uniform, lo, hi}; }
};

struct SimConfig {
    std::size_t particles = 1;
    std::size_t steps = 1;
    /// Noise lattice resolution; 0 means 64 * steps.
    std::size_t fine_steps = 0;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    InitialLaw initial;
    /// Keep every stride-th state (the final state is always kept).
    std::size_t stride = 1;
    StepOptions step;

    std::size_t resolved_fine_steps() const { return fine_steps == 0 ? 64 * steps : fine_steps; }
    void validate() const;
};

struct Trajectory {
    std::vector<SimState> snapshots;
    std::optional<DivergenceEvent> divergence;

    const SimState& final_state() const { return snapshots.back(); }
};

/// Initial positions keyed on (seed, particle, component): the first N rows
/// do not depend on the total particle count.
std::vector<double> sample_initial(const InitialLaw& law, std::uint64_t seed,
                                   std::size_t particles, std::size_t dim);

Trajectory simulate(const SimConfig& config, const CoefficientModel& model);

/// Runs `steps` steps of size T / steps on an existing lattice from given
/// positions; stops at the first divergence.
Trajectory simulate(const SimConfig& config, const CoefficientModel& model,
                    const BrownianLattice& lattice, std::vector<double> initial_positions);

}  // namespace mvsde
