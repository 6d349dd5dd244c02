#include "mvsde/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mvsde/random.hpp"

namespace mvsde {

StepNoise::StepNoise(std::size_t particles, std::size_t noise_dim, std::size_t substeps, double h,
                     std::vector<double> fine)
    : particles_(particles),
      noise_dim_(noise_dim),
      substeps_(substeps),
      h_(h),
      fine_(std::move(fine)),
      lagged_(fine_.size()),
      coarse_(particles * noise_dim) {
    if (particles_ == 0 || noise_dim_ == 0 || substeps_ == 0)
        throw std::invalid_argument("StepNoise: sizes must be positive");
    if (fine_.size() != particles_ * noise_dim_ * substeps_)
        throw std::invalid_argument("StepNoise: fine buffer size mismatch");
    for (std::size_t row = 0; row < particles_ * noise_dim_; ++row) {
        const double* inc = fine_.data() + row * substeps_;
        double* lag = lagged_.data() + row * substeps_;
        double w = 0.0;
        for (std::size_t s = 0; s < substeps_; ++s) {
            lag[s] = w;
            w += inc[s];
        }
        coarse_[row] = w;
    }
}

StepNoise StepNoise::from_increments(std::size_t particles, std::size_t noise_dim, double h,
                                     std::vector<double> increments) {
    return StepNoise(particles, noise_dim, 1, h, std::move(increments));
}

double StepNoise::iterated(std::size_t j, std::size_t i, std::size_t l1, std::size_t l) const {
    if (i == j && l1 == l) {
        const double dw = increment(i, l);
        return 0.5 * (dw * dw - h_);
    }
    const double* lag = lagged_.data() + (j * noise_dim_ + l1) * substeps_;
    const double* inc = fine_.data() + (i * noise_dim_ + l) * substeps_;
    double acc = 0.0;
    for (std::size_t s = 0; s < substeps_; ++s) acc += lag[s] * inc[s];
    return acc;
}

BrownianLattice::BrownianLattice(std::uint64_t seed, std::size_t particles, std::size_t noise_dim,
                                 std::size_t fine_steps, double horizon)
    : seed_(seed),
      particles_(particles),
      noise_dim_(noise_dim),
      fine_steps_(fine_steps),
      horizon_(horizon) {
    if (particles == 0 || noise_dim == 0 || fine_steps == 0)
        throw std::invalid_argument("BrownianLattice: N, m and n_fine must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("BrownianLattice: horizon must be positive and finite");

    increments_.resize(particles * noise_dim * fine_steps);
    const double scale = std::sqrt(horizon / static_cast<double>(fine_steps));
    const auto rows = static_cast<std::int64_t>(particles * noise_dim);
#pragma omp parallel for schedule(static)
    for (std::int64_t row = 0; row < rows; ++row) {
        const auto i = static_cast<std::size_t>(row) / noise_dim;
        const auto l = static_cast<std::size_t>(row) % noise_dim;
        double* out = increments_.data() + static_cast<std::size_t>(row) * fine_steps;
        for (std::size_t k = 0; k < fine_steps; ++k)
            out[k] = scale * keyed_normal(seed, streams::brownian, i, l, k);
    }
}

std::size_t BrownianLattice::substeps(std::size_t level) const {
    if (level == 0 || fine_steps_ % level != 0)
        throw std::invalid_argument("BrownianLattice: level " + std::to_string(level) +
                                    " does not divide n_fine=" + std::to_string(fine_steps_));
    return fine_steps_ / level;
}

double BrownianLattice::coarse_increment(std::size_t level, std::size_t i, std::size_t l,
                                         std::size_t k) const {
    const std::size_t r = substeps(level);
    if (k >= level) throw std::out_of_range("BrownianLattice: step index out of range");
    const auto path = fine_path(i, l);
    double w = 0.0;
    for (std::size_t s = 0; s < r; ++s) w += path[k * r + s];
    return w;
}

double BrownianLattice::iterated_integral(std::size_t level, std::size_t i, std::size_t j,
                                          std::size_t l1, std::size_t l, std::size_t k) const {
    const std::size_t r = substeps(level);
    if (k >= level) throw std::out_of_range("BrownianLattice: step index out of range");
    if (i == j && l1 == l) {
        const double dw = coarse_increment(level, i, l, k);
        const double h = horizon_ / static_cast<double>(level);
        return 0.5 * (dw * dw - h);
    }
    const auto u = fine_path(j, l1).subspan(k * r, r);
    const auto v = fine_path(i, l).subspan(k * r, r);
    double lag = 0.0;
    double acc = 0.0;
    for (std::size_t s = 0; s < r; ++s) {
        acc += lag * v[s];
        lag += u[s];
    }
    return acc;
}

StepNoise BrownianLattice::step_noise(std::size_t level, std::size_t k) const {
    const std::size_t r = substeps(level);
    if (k >= level) throw std::out_of_range("BrownianLattice: step index out of range");
    std::vector<double> fine(particles_ * noise_dim_ * r);
    for (std::size_t row = 0; row < particles_ * noise_dim_; ++row) {
        const double* src = increments_.data() + row * fine_steps_ + k * r;
        std::copy(src, src + r, fine.begin() + static_cast<std::ptrdiff_t>(row * r));
    }
    return StepNoise(particles_, noise_dim_, r, horizon_ / static_cast<double>(level),
                     std::move(fine));
}

BrownianLattice BrownianLattice::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != particles_)
        throw std::invalid_argument("BrownianLattice::permuted: permutation size mismatch");
    BrownianLattice out;
    out.seed_ = seed_;
    out.particles_ = particles_;
    out.noise_dim_ = noise_dim_;
    out.fine_steps_ = fine_steps_;
    out.horizon_ = horizon_;
    out.increments_.resize(increments_.size());
    const std::size_t row_len = noise_dim_ * fine_steps_;
    for (std::size_t p = 0; p < particles_; ++p) {
        if (perm[p] >= particles_)
            throw std::invalid_argument("BrownianLattice::permuted: index out of range");
        std::copy_n(increments_.begin() + static_cast<std::ptrdiff_t>(perm[p] * row_len), row_len,
                    out.increments_.begin() + static_cast<std::ptrdiff_t>(p * row_len));
    }
    return out;
}

}  // namespace mvsde
