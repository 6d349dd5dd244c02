#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvsde {

/// Brownian driving data of one coarse step for every particle: the fine
/// increments inside the step, their left-point partial sums, and the
/// aggregated increment. Iterated integrals are read from here.
///
/// Layout of fine/lagged: ((i * m + l) * substeps + s).
class StepNoise {
public:
    StepNoise(std::size_t particles, std::size_t noise_dim, std::size_t substeps, double h,
              std::vector<double> fine);

    /// Single-substep noise with the given coarse increments (row-major N x m).
    /// Cross iterated integrals vanish for it.
    static StepNoise from_increments(std::size_t particles, std::size_t noise_dim, double h,
                                     std::vector<double> increments);

    std::size_t particles() const { return particles_; }
    std::size_t noise_dim() const { return noise_dim_; }
    std::size_t substeps() const { return substeps_; }
    double step_size() const { return h_; }

    double increment(std::size_t i, std::size_t l) const { return coarse_[i * noise_dim_ + l]; }

    /// I^{j,i}_{(l1,l)} = int int dW^{(l1),j} dW^{(l),i} over the step.
    /// Same particle and component: (dW^2 - h) / 2. Otherwise the left-point
    /// fine-grid sum  sum_s (W^{(l1),j}_s - W^{(l1),j}_t) dW^{(l),i}_s.
    double iterated(std::size_t j, std::size_t i, std::size_t l1, std::size_t l) const;

    /// True when every cross iterated integral is identically zero (one substep).
    bool cross_terms_vanish() const { return substeps_ == 1; }

private:
    std::size_t particles_;
    std::size_t noise_dim_;
    std::size_t substeps_;
    double h_;
    std::vector<double> fine_;
    std::vector<double> lagged_;
    std::vector<double> coarse_;
};

/// Finest-grid Brownian increments for N independent m-dimensional Brownian
/// motions on [0, T]. Entry (i, l, k) is N(0, T / n_fine), keyed on
/// (seed, i, l, k), so a lattice with fewer particles is a prefix of one with
/// more, and generation is independent of the thread count.
class BrownianLattice {
public:
    BrownianLattice(std::uint64_t seed, std::size_t particles, std::size_t noise_dim,
                    std::size_t fine_steps, double horizon);

    std::uint64_t seed() const { return seed_; }
    std::size_t particles() const { return particles_; }
    std::size_t noise_dim() const { return noise_dim_; }
    std::size_t fine_steps() const { return fine_steps_; }
    double horizon() const { return horizon_; }

    double fine_increment(std::size_t i, std::size_t l, std::size_t k) const {
        return increments_[(i * noise_dim_ + l) * fine_steps_ + k];
    }
    std::span<const double> fine_path(std::size_t i, std::size_t l) const {
        return {increments_.data() + (i * noise_dim_ + l) * fine_steps_, fine_steps_};
    }

    /// Increment over coarse step k of a grid with `level` steps.
    double coarse_increment(std::size_t level, std::size_t i, std::size_t l, std::size_t k) const;

    /// I^{j,i}_{(l1,l)} over coarse step k (see StepNoise::iterated).
    double iterated_integral(std::size_t level, std::size_t i, std::size_t j, std::size_t l1,
                             std::size_t l, std::size_t k) const;

    StepNoise step_noise(std::size_t level, std::size_t k) const;

    /// Lattice whose particle p carries the noise of particle perm[p].
    BrownianLattice permuted(std::span<const std::size_t> perm) const;

private:
    BrownianLattice() = default;
    std::size_t substeps(std::size_t level) const;

    std::uint64_t seed_ = 0;
    std::size_t particles_ = 0;
    std::size_t noise_dim_ = 0;
    std::size_t fine_steps_ = 0;
    double horizon_ = 0.0;
    std::vector<double> increments_;
};

}  // namespace mvsde
