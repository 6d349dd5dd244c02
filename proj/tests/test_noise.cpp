#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <random>

#include "mvsde/noise.hpp"

using namespace mvsde;

TEST_CASE("lattice generation is deterministic and seed dependent") {
    const BrownianLattice a(42, 8, 2, 256, 1.0);
    const BrownianLattice b(42, 8, 2, 256, 1.0);
    const BrownianLattice c(43, 8, 2, 256, 1.0);
    double dot = 0.0, na = 0.0, nc = 0.0;
    bool identical = true;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t k = 0; k < 256; ++k) {
                identical = identical && a.fine_increment(i, l, k) == b.fine_increment(i, l, k);
                dot += a.fine_increment(i, l, k) * c.fine_increment(i, l, k);
                na += a.fine_increment(i, l, k) * a.fine_increment(i, l, k);
                nc += c.fine_increment(i, l, k) * c.fine_increment(i, l, k);
            }
    CHECK(identical);
    // 4096 pairs: the correlation of independent draws has sd ~ 1/64.
    CHECK(std::abs(dot / std::sqrt(na * nc)) < 5.0 / 64.0);
}

TEST_CASE("lattice content depends neither on thread count nor on particle count") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const BrownianLattice serial(9, 5, 2, 64, 2.0);
    omp_set_num_threads(4);
    const BrownianLattice parallel(9, 5, 2, 64, 2.0);
    omp_set_num_threads(saved);
    const BrownianLattice small(9, 3, 2, 64, 2.0);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t k = 0; k < 64; ++k) {
                CHECK(serial.fine_increment(i, l, k) == parallel.fine_increment(i, l, k));
                if (i < 3) CHECK(serial.fine_increment(i, l, k) == small.fine_increment(i, l, k));
            }
}

TEST_CASE("fine increments have variance T / n_fine") {
    const BrownianLattice lat(2024, 1000, 1, 1024, 1.0);
    double sum = 0.0, sq = 0.0;
    const double count = 1000.0 * 1024.0;
    for (std::size_t i = 0; i < 1000; ++i)
        for (double v : lat.fine_path(i, 0)) {
            sum += v;
            sq += v * v;
        }
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    const double target = 1.0 / 1024.0;
    CHECK(std::abs(var / target - 1.0) < 0.01);
    CHECK(std::abs(mean) < 5.0 * std::sqrt(target / count));
}

TEST_CASE("coarse increments aggregate fine increments") {
    const BrownianLattice lat(3, 4, 2, 64, 1.0);
    for (std::size_t k = 0; k < 64; ++k)
        CHECK(lat.coarse_increment(64, 2, 1, k) == lat.fine_increment(2, 1, k));
    for (std::size_t k = 0; k < 32; ++k)
        CHECK(lat.coarse_increment(32, 1, 0, k) ==
              doctest::Approx(lat.fine_increment(1, 0, 2 * k) + lat.fine_increment(1, 0, 2 * k + 1))
                  .epsilon(1e-15));

    double w_fine = 0.0;
    for (double v : lat.fine_path(3, 1)) w_fine += v;
    for (std::size_t level : {1u, 2u, 8u, 64u}) {
        double w = 0.0;
        for (std::size_t k = 0; k < level; ++k) w += lat.coarse_increment(level, 3, 1, k);
        CHECK(w == doctest::Approx(w_fine).epsilon(1e-12));
    }
    CHECK_THROWS_AS(lat.coarse_increment(3, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(lat.iterated_integral(5, 0, 0, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(lat.coarse_increment(8, 0, 0, 8), std::out_of_range);
    CHECK_THROWS_AS(BrownianLattice(1, 0, 1, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(BrownianLattice(1, 1, 1, 4, 0.0), std::invalid_argument);
}

TEST_CASE("diagonal iterated integral closed form") {
    const auto noise = StepNoise::from_increments(1, 1, 0.01, {0.3});
    CHECK(noise.iterated(0, 0, 0, 0) == doctest::Approx(0.04).epsilon(1e-14));
    const auto still = StepNoise::from_increments(1, 1, 0.01, {0.0});
    CHECK(still.iterated(0, 0, 0, 0) == doctest::Approx(-0.005).epsilon(1e-15));
    // One substep: every cross term is exactly zero.
    const auto two = StepNoise::from_increments(2, 2, 0.01, {0.1, -0.2, 0.3, 0.05});
    CHECK(two.cross_terms_vanish());
    CHECK(two.iterated(0, 1, 0, 0) == 0.0);
    CHECK(two.iterated(1, 1, 0, 1) == 0.0);
}

TEST_CASE("diagonal closed form equals the refinement of fine-level diagonals") {
    // (dW^2 - h)/2 = sum_s (dW_s^2 - h_f)/2 + sum_s (W_s - W_t) dW_s.
    const BrownianLattice lat(77, 6, 2, 512, 1.5);
    for (std::size_t level : {1u, 4u, 32u}) {
        const std::size_t r = 512 / level;
        for (std::size_t k = 0; k < level; ++k) {
            for (std::size_t i = 0; i < 6; ++i) {
                double refined = 0.0, lag = 0.0;
                for (std::size_t s = 0; s < r; ++s) {
                    refined += lat.iterated_integral(512, i, i, 1, 1, k * r + s) + lag * lat.fine_increment(i, 1, k * r + s);
                    lag += lat.fine_increment(i, 1, k * r + s);
                }
                const double direct = lat.iterated_integral(level, i, i, 1, 1, k);
                CHECK(std::abs(refined - direct) <= 1e-10 * std::max(1.0, std::abs(direct)) * 1.5 / level);
            }
        }
    }
}

TEST_CASE("discrete integration by parts holds for off-diagonal pairs") {
    std::mt19937_64 seeds(1);
    for (int trial = 0; trial < 20; ++trial) {
        const BrownianLattice lat(seeds(), 4, 3, 96, 0.7);
        for (std::size_t level : {3u, 12u, 96u}) {
            const std::size_t r = 96 / level;
            for (std::size_t k = 0; k < level; ++k)
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = 0; j < 4; ++j)
                        for (std::size_t l1 = 0; l1 < 3; ++l1)
                            for (std::size_t l = 0; l < 3; ++l) {
                                if (i == j && l1 == l) continue;
                                double quad = 0.0;
                                for (std::size_t s = 0; s < r; ++s)
                                    quad += lat.fine_increment(j, l1, k * r + s) *
                                            lat.fine_increment(i, l, k * r + s);
                                const double lhs = lat.iterated_integral(level, i, j, l1, l, k) +
                                                   lat.iterated_integral(level, j, i, l, l1, k) + quad;
                                const double rhs = lat.coarse_increment(level, j, l1, k) *
                                                   lat.coarse_increment(level, i, l, k);
                                CHECK(std::abs(lhs - rhs) <= 1e-14);
                            }
        }
    }
}

TEST_CASE("step noise reproduces lattice queries bit for bit") {
    const BrownianLattice lat(5, 3, 2, 128, 1.0);
    const StepNoise noise = lat.step_noise(8, 5);
    CHECK(noise.substeps() == 16);
    CHECK(noise.step_size() == doctest::Approx(0.125));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 2; ++l) {
            CHECK(noise.increment(i, l) == lat.coarse_increment(8, i, l, 5));
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t l1 = 0; l1 < 2; ++l1)
                    CHECK(noise.iterated(j, i, l1, l) == lat.iterated_integral(8, i, j, l1, l, 5));
        }
}

TEST_CASE("cross-particle estimator has mean 0 and variance close to h^2/2") {
    // 2 x 50000 coarse steps with 64 substeps; exact variance h^2 (1 - 1/64) / 2.
    const std::size_t level = 50'000;
    const BrownianLattice lat(31337, 2, 1, level * 64, 1.0);
    const double h = 1.0 / static_cast<double>(level);
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < level; ++k)
        for (auto [i, j] : {std::pair{0u, 1u}, std::pair{1u, 0u}}) {
            const double v = lat.iterated_integral(level, i, j, 0, 0, k);
            sum += v;
            sq += v * v;
            ++count;
        }
    const double n = static_cast<double>(count);
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double target = 0.5 * h * h;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(target / n));
    CHECK(std::abs(var / target - 1.0) < 0.1);
    // The finite-substep value is h^2 (1 - 1/r) / 2; check against it too
    // with the Monte Carlo band (relative sd of a variance ~ sqrt(2/n) at
    // most, inflated for the heavier tails of a product).
    CHECK(std::abs(var / (target * (1.0 - 1.0 / 64.0)) - 1.0) < 3.0 * std::sqrt(8.0 / n));
}

TEST_CASE("permuted lattice moves whole particle rows") {
    const BrownianLattice lat(8, 3, 2, 16, 1.0);
    const std::vector<std::size_t> perm = {2, 0, 1};
    const BrownianLattice p = lat.permuted(perm);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t k = 0; k < 16; ++k)
                CHECK(p.fine_increment(i, l, k) == lat.fine_increment(perm[i], l, k));
    CHECK_THROWS_AS(lat.permuted(std::vector<std::size_t>{0, 1}), std::invalid_argument);
}
