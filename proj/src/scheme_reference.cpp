#include <cmath>
#include <stdexcept>

#include "mvsde/scheme.hpp"

namespace mvsde::reference {

StepResult advance(const CoefficientModel& model, const SimState& state,
                   const BrownianLattice& lattice, std::size_t level, const StepOptions& opts) {
    const std::size_t d = model.state_dim();
    const std::size_t m = model.noise_dim();
    const std::size_t count = state.particles();
    const std::size_t k = state.step;
    if (state.dim != d || lattice.particles() != count || lattice.noise_dim() != m)
        throw std::invalid_argument("reference::advance: shape mismatch");

    const EmpiricalMeasure mu = state.measure();
    const double h = lattice.horizon() / static_cast<double>(level);

    StepResult result;
    result.state.dim = d;
    result.state.step = k + 1;
    result.state.t = static_cast<double>(k + 1) * h;
    result.state.positions.resize(state.positions.size());

    std::vector<double> grad(d);
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = state.row(i);
        const std::vector<double> b = opts.taming ? tame_drift(model, level, x, mu)
                                                  : model.drift(x, mu);
        const std::vector<double> sig = model.diffusion(x, mu);

        std::vector<double> next(d);
        for (std::size_t r = 0; r < d; ++r) {
            double v = x[r] + b[r] * h;
            for (std::size_t l = 0; l < m; ++l)
                v += sig[r * m + l] * lattice.coarse_increment(level, i, l, k);
            next[r] = v;
        }

        if (opts.scheme == Scheme::milstein && opts.lambda1) {
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t l = 0; l < m; ++l) {
                    model.diffusion_dx(r, l, x, mu, grad);
                    double acc = 0.0;
                    for (std::size_t l1 = 0; l1 < m; ++l1) {
                        double dot = 0.0;
                        for (std::size_t q = 0; q < d; ++q) dot += grad[q] * sig[q * m + l1];
                        acc += dot * lattice.iterated_integral(level, i, i, l1, l, k);
                    }
                    next[r] += acc;
                }
            }
        }

        if (opts.scheme == Scheme::milstein && opts.lambda2) {
            std::vector<double> lam(d * m, 0.0);
            for (std::size_t j = 0; j < count; ++j) {
                const auto y = state.row(j);
                const std::vector<double> sig_j = model.diffusion(y, mu);
                for (std::size_t r = 0; r < d; ++r) {
                    for (std::size_t l = 0; l < m; ++l) {
                        model.diffusion_dmu(r, l, x, mu, y, grad);
                        for (std::size_t l1 = 0; l1 < m; ++l1) {
                            double dot = 0.0;
                            for (std::size_t q = 0; q < d; ++q) dot += grad[q] * sig_j[q * m + l1];
                            lam[r * m + l] += dot * lattice.iterated_integral(level, i, j, l1, l, k);
                        }
                    }
                }
            }
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t l = 0; l < m; ++l)
                    next[r] += lam[r * m + l] / static_cast<double>(count);
        }

        for (std::size_t r = 0; r < d; ++r) {
            result.state.positions[i * d + r] = next[r];
            if (!std::isfinite(next[r]) && !result.divergence)
                result.divergence = DivergenceEvent{k + 1, i, result.state.t};
        }
    }
    return result;
}

}  // namespace mvsde::reference
