#include "mvsde/scheme.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include "mvsde/random.hpp"

namespace mvsde {
namespace {

/// Step-start snapshot shared read-only by every worker.
struct Frame {
    const CoefficientModel& model;
    const SimState& state;
    const StepNoise& noise;
    EmpiricalMeasure mu;
    std::size_t particles;
    std::size_t d;
    std::size_t m;
    std::vector<double> sigma;  // per particle, row-major d x m

    Frame(const CoefficientModel& model_, const SimState& state_, const StepNoise& noise_)
        : model(model_),
          state(state_),
          noise(noise_),
          mu(state_.positions, state_.dim),
          particles(state_.particles()),
          d(state_.dim),
          m(model_.noise_dim()) {}

    std::span<const double> sigma_of(std::size_t j) const {
        return {sigma.data() + j * d * m, d * m};
    }
};

struct Scratch {
    std::vector<double> drift;
    std::vector<double> grad;    // d x m gradients, each of length d
    std::vector<double> lambda;  // d x m
    std::vector<double> coef;    // m x d x m

    explicit Scratch(std::size_t d, std::size_t m)
        : drift(d), grad(d * m * d), lambda(d * m), coef(m * d * m) {}
};

void check_shapes(const CoefficientModel& model, const SimState& state, const StepNoise& noise) {
    if (state.dim != model.state_dim())
        throw std::invalid_argument("state dimension " + std::to_string(state.dim) +
                                    " does not match model d=" +
                                    std::to_string(model.state_dim()));
    if (noise.particles() != state.particles() || noise.noise_dim() != model.noise_dim())
        throw std::invalid_argument("step noise shape does not match state/model");
}

int worker_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

/// Runs body(i, scratch) for every particle; the split across workers never
/// changes any individual result.
template <class Body>
void for_each_particle(std::size_t count, std::size_t d, std::size_t m, int threads, Body body) {
    const int workers = worker_count(threads);
    if (workers == 1) {
        Scratch scratch(d, m);
        for (std::size_t i = 0; i < count; ++i) body(i, scratch);
        return;
    }
    std::exception_ptr failure;
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel num_threads(workers)
    {
        Scratch scratch(d, m);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                body(static_cast<std::size_t>(i), scratch);
            } catch (...) {
#pragma omp critical(mvsde_step_failure)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void fill_sigma(Frame& frame, int threads) {
    frame.sigma.assign(frame.particles * frame.d * frame.m, 0.0);
    for_each_particle(frame.particles, frame.d, frame.m, threads,
                      [&](std::size_t j, Scratch&) {
                          std::span<double> out(frame.sigma.data() + j * frame.d * frame.m,
                                                frame.d * frame.m);
                          frame.model.diffusion(frame.state.row(j), frame.mu, out);
                      });
}

void lambda1_into(const Frame& f, std::size_t i, Scratch& s, std::span<double> out) {
    const std::size_t d = f.d;
    const std::size_t m = f.m;
    const auto x = f.state.row(i);
    const auto sig = f.sigma_of(i);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = 0; l < m; ++l) {
            std::span<double> grad(s.grad.data(), d);
            f.model.diffusion_dx(k, l, x, f.mu, grad);
            double acc = 0.0;
            for (std::size_t l1 = 0; l1 < m; ++l1) {
                double dot = 0.0;
                for (std::size_t q = 0; q < d; ++q) dot += grad[q] * sig[q * m + l1];
                acc += dot * f.noise.iterated(i, i, l1, l);
            }
            out[k * m + l] = acc;
        }
    }
}

void lambda2_into(const Frame& f, std::size_t i, Scratch& s, std::span<double> out) {
    const std::size_t d = f.d;
    const std::size_t m = f.m;
    std::fill(out.begin(), out.end(), 0.0);
    if (!f.model.diffusion_depends_on_measure()) return;

    const auto x = f.state.row(i);
    // With one substep every cross-particle iterated integral is exactly zero.
    const std::size_t j_begin = f.noise.cross_terms_vanish() ? i : 0;
    const std::size_t j_end = f.noise.cross_terms_vanish() ? i + 1 : f.particles;
    for (std::size_t j = j_begin; j < j_end; ++j) {
        const auto y = f.state.row(j);
        const auto sig = f.sigma_of(j);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < m; ++l)
                f.model.diffusion_dmu(k, l, x, f.mu, y,
                                      std::span<double>(s.grad.data() + (k * m + l) * d, d));
        for (std::size_t l = 0; l < m; ++l) {
            for (std::size_t l1 = 0; l1 < m; ++l1) {
                const double integral = f.noise.iterated(j, i, l1, l);
                for (std::size_t k = 0; k < d; ++k) {
                    const double* grad = s.grad.data() + (k * m + l) * d;
                    double dot = 0.0;
                    for (std::size_t q = 0; q < d; ++q) dot += grad[q] * sig[q * m + l1];
                    s.coef[(l1 * d + k) * m + l] = dot * integral;
                }
            }
        }
        // Accumulate in ascending (j, l1) order for every entry.
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < m; ++l)
                for (std::size_t l1 = 0; l1 < m; ++l1) out[k * m + l] += s.coef[(l1 * d + k) * m + l];
    }
    const double count = static_cast<double>(f.particles);
    for (double& v : out) v /= count;
}

void update_particle(const Frame& f, std::size_t level, const StepOptions& opts, std::size_t i,
                     Scratch& s, std::span<double> out) {
    const std::size_t d = f.d;
    const std::size_t m = f.m;
    const double h = f.noise.step_size();
    const auto x = f.state.row(i);
    const auto sig = f.sigma_of(i);

    if (opts.taming)
        tame_drift(f.model, level, x, f.mu, s.drift);
    else
        f.model.drift(x, f.mu, s.drift);

    for (std::size_t k = 0; k < d; ++k) {
        double v = x[k] + s.drift[k] * h;
        for (std::size_t l = 0; l < m; ++l) v += sig[k * m + l] * f.noise.increment(i, l);
        out[k] = v;
    }
    if (opts.scheme != Scheme::milstein) return;

    if (opts.lambda1) {
        lambda1_into(f, i, s, s.lambda);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < m; ++l) out[k] += s.lambda[k * m + l];
    }
    if (opts.lambda2) {
        lambda2_into(f, i, s, s.lambda);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < m; ++l) out[k] += s.lambda[k * m + l];
    }
}

std::optional<DivergenceEvent> first_non_finite(const SimState& s) {
    for (std::size_t i = 0; i < s.particles(); ++i)
        for (double v : s.row(i))
            if (!std::isfinite(v)) return DivergenceEvent{s.step, i, s.t};
    return std::nullopt;
}

}  // namespace

std::vector<double> lambda1(const CoefficientModel& model, const SimState& state,
                            const StepNoise& noise, std::size_t i) {
    check_shapes(model, state, noise);
    Frame frame(model, state, noise);
    fill_sigma(frame, 1);
    Scratch scratch(frame.d, frame.m);
    std::vector<double> out(frame.d * frame.m);
    lambda1_into(frame, i, scratch, out);
    return out;
}

std::vector<double> lambda1(const CoefficientModel& model, const SimState& state,
                            const BrownianLattice& lattice, std::size_t i, std::size_t level,
                            std::size_t k) {
    return lambda1(model, state, lattice.step_noise(level, k), i);
}

std::vector<double> lambda2(const CoefficientModel& model, const SimState& state,
                            const StepNoise& noise, std::size_t i) {
    check_shapes(model, state, noise);
    Frame frame(model, state, noise);
    fill_sigma(frame, 1);
    Scratch scratch(frame.d, frame.m);
    std::vector<double> out(frame.d * frame.m);
    lambda2_into(frame, i, scratch, out);
    return out;
}

std::vector<double> lambda2(const CoefficientModel& model, const SimState& state,
                            const BrownianLattice& lattice, std::size_t i, std::size_t level,
                            std::size_t k) {
    return lambda2(model, state, lattice.step_noise(level, k), i);
}

StepResult advance(const CoefficientModel& model, const SimState& state, const StepNoise& noise,
                   std::size_t level, const StepOptions& opts) {
    check_shapes(model, state, noise);
    if (level == 0) throw std::invalid_argument("advance: level must be >= 1");
    Frame frame(model, state, noise);
    fill_sigma(frame, opts.threads);

    StepResult result;
    result.state.dim = state.dim;
    result.state.step = state.step + 1;
    result.state.t = static_cast<double>(state.step + 1) * noise.step_size();
    result.state.positions.resize(state.positions.size());
    for_each_particle(frame.particles, frame.d, frame.m, opts.threads,
                      [&](std::size_t i, Scratch& scratch) {
                          std::span<double> row(result.state.positions.data() + i * frame.d,
                                                frame.d);
                          update_particle(frame, level, opts, i, scratch, row);
                      });
    result.divergence = first_non_finite(result.state);
    return result;
}

StepResult milstein_step(const CoefficientModel& model, const SimState& state,
                         const StepNoise& noise, std::size_t level, StepOptions opts) {
    opts.scheme = Scheme::milstein;
    return advance(model, state, noise, level, opts);
}

StepResult milstein_step(const CoefficientModel& model, const SimState& state,
                         const BrownianLattice& lattice, std::size_t level, StepOptions opts) {
    return milstein_step(model, state, lattice.step_noise(level, state.step), level, opts);
}

StepResult euler_step(const CoefficientModel& model, const SimState& state,
                      const StepNoise& noise, std::size_t level, StepOptions opts) {
    opts.scheme = Scheme::euler;
    return advance(model, state, noise, level, opts);
}

StepResult euler_step(const CoefficientModel& model, const SimState& state,
                      const BrownianLattice& lattice, std::size_t level, StepOptions opts) {
    return euler_step(model, state, lattice.step_noise(level, state.step), level, opts);
}

// --- full runs ---------------------------------------------------------------

void SimConfig::validate() const {
    if (particles == 0) throw std::invalid_argument("N must be >= 1");
    if (steps == 0) throw std::invalid_argument("n must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("T must be > 0");
    if (resolved_fine_steps() % steps != 0)
        throw std::invalid_argument("n=" + std::to_string(steps) + " does not divide n_fine=" +
                                    std::to_string(resolved_fine_steps()));
    if (stride == 0) throw std::invalid_argument("output stride must be >= 1");
    if (initial.kind == InitialKind::gaussian && !(initial.b >= 0.0))
        throw std::invalid_argument("gaussian initial law needs std >= 0");
    if (initial.kind == InitialKind::uniform && !(initial.b >= initial.a))
        throw std::invalid_argument("uniform initial law needs high >= low");
}

std::vector<double> sample_initial(const InitialLaw& law, std::uint64_t seed,
                                   std::size_t particles, std::size_t dim) {
    std::vector<double> x(particles * dim);
    for (std::size_t i = 0; i < particles; ++i) {
        for (std::size_t q = 0; q < dim; ++q) {
            double v = law.a;
            if (law.kind == InitialKind::gaussian)
                v = law.a + law.b * keyed_normal(seed, streams::initial, i, q, 0);
            else if (law.kind == InitialKind::uniform)
                v = law.a + (law.b - law.a) * keyed_uniform(seed, streams::initial, i, q, 0);
            x[i * dim + q] = v;
        }
    }
    return x;
}

Trajectory simulate(const SimConfig& config, const CoefficientModel& model) {
    config.validate();
    BrownianLattice lattice(config.seed, config.particles, model.noise_dim(),
                            config.resolved_fine_steps(), config.horizon);
    return simulate(config, model, lattice,
                    sample_initial(config.initial, config.seed, config.particles,
                                   model.state_dim()));
}

Trajectory simulate(const SimConfig& config, const CoefficientModel& model,
                    const BrownianLattice& lattice, std::vector<double> initial_positions) {
    if (config.steps == 0 || config.stride == 0)
        throw std::invalid_argument("simulate: steps and stride must be >= 1");
    if (lattice.particles() != config.particles || lattice.noise_dim() != model.noise_dim())
        throw std::invalid_argument("simulate: lattice shape does not match config/model");
    if (initial_positions.size() != config.particles * model.state_dim())
        throw std::invalid_argument("simulate: initial positions have the wrong size");

    Trajectory traj;
    SimState state;
    state.dim = model.state_dim();
    state.positions = std::move(initial_positions);
    if (auto bad = first_non_finite(state)) {
        traj.divergence = bad;
        return traj;
    }
    traj.snapshots.push_back(state);

    for (std::size_t k = 0; k < config.steps; ++k) {
        StepResult next = advance(model, state, lattice.step_noise(config.steps, k), config.steps,
                                  config.step);
        if (next.divergence) {
            traj.divergence = next.divergence;
            if (traj.snapshots.back().step != state.step) traj.snapshots.push_back(state);
            return traj;
        }
        state = std::move(next.state);
        // Keep t exact on the grid rather than accumulating k * h drift.
        state.t = config.horizon * static_cast<double>(state.step) /
                  static_cast<double>(config.steps);
        if (state.step % config.stride == 0 || state.step == config.steps)
            traj.snapshots.push_back(state);
    }
    return traj;
}

}  // namespace mvsde
