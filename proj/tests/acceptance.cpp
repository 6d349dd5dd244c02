// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Config files are read from MVSDE_CONFIG_DIR so the CLI and this suite run
// the same experiments.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "mvsde/experiments.hpp"
#include "test_models.hpp"

using namespace mvsde;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string config_path(const std::string& name) { return std::string(MVSDE_CONFIG_DIR) + "/" + name; }

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fmt_slope(const std::optional<double>& s) { return s ? fmt(*s) : "exact"; }

bool within(const std::optional<double>& s, double lo, double hi) { return s && *s >= lo && *s <= hi; }

std::unique_ptr<CoefficientModel> model_of(const ExperimentConfig& cfg) {
    return make_model(cfg.model_name, cfg.model_params);
}

ConvergenceReport converge(const ExperimentConfig& cfg, std::uint64_t seed) {
    ConvergenceOptions opt;
    opt.levels = cfg.levels;
    opt.reference_level = cfg.reference_level;
    opt.repetitions = cfg.repetitions;
    SimConfig base = cfg.sim;
    base.seed = seed;
    return strong_error(*model_of(cfg), base, opt);
}

Outcome strong_order_gl() {
    const auto cfg = load_config(config_path("gl_converge.json"));
    const auto r = converge(cfg, cfg.sim.seed);
    return {within(r.slope, 0.85, 1.15),
            "terminal slope " + fmt_slope(r.slope) + " (sup-in-time slope " + fmt_slope(r.slope_sup) +
                "), target [0.85, 1.15]"};
}

Outcome order_separation() {
    const auto mil = load_config(config_path("gl_converge.json"));
    const auto eul = load_config(config_path("gl_converge_euler.json"));
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = converge(mil, seed).slope;
        const auto e = converge(eul, seed).slope;
        const bool euler_ok = within(e, 0.35, 0.65);
        const bool gap_ok = m && e && *m > *e + 0.2;
        ok = ok && euler_ok && gap_ok;
        detail += "seed " + std::to_string(seed) + ": euler " + fmt_slope(e) + (euler_ok ? "" : "*") +
                  " milstein " + fmt_slope(m) + (gap_ok ? "" : "*") + "; ";
    }
    return {ok, detail + "targets euler in [0.35, 0.65], milstein > euler + 0.2"};
}

Outcome lambda2_exercise() {
    const auto with = load_config(config_path("linear_converge.json"));
    const auto without = load_config(config_path("linear_converge_no_lambda2.json"));
    const auto a = converge(with, with.sim.seed).slope;
    const auto b = converge(without, without.sim.seed).slope;
    const bool in_range = within(a, 0.85, 1.15);
    const bool degraded = a && b && *a - *b >= 0.2;
    return {in_range && degraded, "slope " + fmt_slope(a) + " (target [0.85, 1.15]), without lambda2 " +
                                      fmt_slope(b) + " (target degradation >= 0.2)"};
}

Outcome deterministic_limit() {
    const GinzburgLandauModel cubic(0.0, 0.0);
    SimConfig cfg;
    cfg.particles = 1;
    cfg.steps = 1024;
    cfg.fine_steps = 1024;
    cfg.initial = InitialLaw::constant(1.0);
    const double x = simulate(cfg, cubic).final_state().positions[0];
    const double err = std::abs(x - 1.0 / std::sqrt(3.0));
    return {err <= 2e-3, "|X_T - 1/sqrt(3)| = " + fmt(err, 6) + ", bound 2e-3"};
}

Outcome mean_oracle() {
    const LinearMeanFieldModel lin(-1.0, 0.5, 0.2, 0.1);
    SimConfig cfg;
    cfg.particles = 4096;
    cfg.steps = 256;
    cfg.fine_steps = 256;
    cfg.seed = 1;
    cfg.initial = InitialLaw::constant(1.0);
    cfg.stride = 256;
    const auto& x = simulate(cfg, lin).final_state().positions;
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    const double se = std::sqrt(var / (n - 1.0) / n);
    const double target = std::exp(-0.5);
    return {std::abs(m - target) <= 3.0 * se,
            "mean " + fmt(m, 6) + ", exp(-1/2) " + fmt(target, 6) + ", 3 SE " + fmt(3.0 * se, 6)};
}

Outcome moment_bounds() {
    const auto cfg = load_config(config_path("gl_moments.json"));
    const auto model = model_of(cfg);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::string detail = "max moment";
    bool finite = true;
    for (std::size_t n : {16u, 128u, 1024u}) {
        SimConfig sim = cfg.sim;
        sim.steps = n;
        sim.fine_steps = n;
        const auto series = moment_track(simulate(sim, *model), cfg.moment_order);
        finite = finite && !series.diverged;
        lo = std::min(lo, series.max);
        hi = std::max(hi, series.max);
        detail += " n=" + std::to_string(n) + ": " + fmt(series.max);
    }
    const bool bounded = finite && hi < 2.0 * lo;

    const auto wild = load_config(config_path("gl_untamed.json"));
    const auto wild_model = model_of(wild);
    int diverged = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimConfig sim = wild.sim;
        sim.seed = seed;
        if (simulate(sim, *wild_model).divergence) ++diverged;
    }
    return {bounded && diverged >= 9, detail + " (ratio " + fmt(hi / lo, 3) + ", target < 2); untamed euler diverged in " +
                                          std::to_string(diverged) + "/10 seeds (target >= 9)"};
}

Outcome derivative_validator() {
    bool ok = true;
    std::string detail;
    for (const std::string name : {"ginzburg-landau", "linear-mean-field"}) {
        std::ostringstream sink;
        const int rc = run_validate(*make_model(name, default_model_params(name)), 1e-5, sink);
        ok = ok && rc == exit_code::ok;
        detail += name + (rc == exit_code::ok ? " passes; " : " FAILS; ");
    }
    std::ostringstream sink;
    const bool caught = run_validate(testing::FaultyMeasureDerivative(), 1e-5, sink) ==
                        exit_code::validation_failed;
    return {ok && caught, detail + (caught ? "2x fault detected" : "2x fault NOT detected")};
}

Outcome iterated_integrals() {
    // Diagonal closed form against the aggregation of fine-level diagonals.
    const std::size_t fine = 1024;
    const BrownianLattice lat(2718, 8, 2, fine, 1.0);
    double diag_err = 0.0;
    for (std::size_t level : {1u, 8u, 64u}) {
        const std::size_t r = fine / level;
        for (std::size_t k = 0; k < level; ++k)
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t l = 0; l < 2; ++l) {
                    double agg = 0.0, lag = 0.0;
                    for (std::size_t s = 0; s < r; ++s) {
                        const double dw = lat.fine_increment(i, l, k * r + s);
                        agg += lat.iterated_integral(fine, i, i, l, l, k * r + s) + lag * dw;
                        lag += dw;
                    }
                    const double direct = lat.iterated_integral(level, i, i, l, l, k);
                    const double dw = lat.coarse_increment(level, i, l, k);
                    // Relative to the size of the terms that cancel.
                    const double scale = 0.5 * (dw * dw + 1.0 / static_cast<double>(level));
                    diag_err = std::max(diag_err, std::abs(agg - direct) / scale);
                }
    }

    // Integration by parts on random lattices.
    double ibp_err = 0.0;
    std::mt19937_64 seeds(5);
    for (int trial = 0; trial < 50; ++trial) {
        const BrownianLattice l2(seeds(), 3, 2, 128, 1.0);
        for (std::size_t level : {2u, 16u}) {
            const std::size_t r = 128 / level;
            for (std::size_t k = 0; k < level; ++k)
                for (std::size_t i = 0; i < 3; ++i)
                    for (std::size_t j = 0; j < 3; ++j)
                        for (std::size_t a = 0; a < 2; ++a)
                            for (std::size_t b = 0; b < 2; ++b) {
                                if (i == j && a == b) continue;
                                double quad = 0.0;
                                for (std::size_t s = 0; s < r; ++s)
                                    quad += l2.fine_increment(j, a, k * r + s) * l2.fine_increment(i, b, k * r + s);
                                const double lhs = l2.iterated_integral(level, i, j, a, b, k) +
                                                   l2.iterated_integral(level, j, i, b, a, k) + quad;
                                const double rhs = l2.coarse_increment(level, j, a, k) * l2.coarse_increment(level, i, b, k);
                                ibp_err = std::max(ibp_err, std::abs(lhs - rhs));
                            }
        }
    }

    // Off-diagonal variance over 1e5 samples.
    const std::size_t level = 50'000;
    const BrownianLattice l3(161803, 2, 1, level * 64, 1.0);
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < level; ++k)
        for (auto [i, j] : {std::pair{0u, 1u}, std::pair{1u, 0u}}) {
            const double v = l3.iterated_integral(level, i, j, 0, 0, k);
            sum += v;
            sq += v * v;
        }
    const double n = 2.0 * level;
    const double h = 1.0 / static_cast<double>(level);
    const double ratio = (sq / n - (sum / n) * (sum / n)) / (0.5 * h * h);

    const bool ok = diag_err <= 1e-10 && ibp_err <= 1e-14 && std::abs(ratio - 1.0) <= 0.1;
    return {ok, "diagonal rel. error " + sci(diag_err) + " (<= 1e-10), by-parts residual " +
                    sci(ibp_err) + " (<= 1e-14), off-diagonal var / (h^2/2) " + fmt(ratio) +
                    " (within 10%)"};
}

Outcome wasserstein_oracle() {
    // Atoms on a dyadic grid keep every sum exact, so the sorted pairing and
    // the permutation minimum must agree bit for bit.
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> size(1, 6), grid(-32, 32);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(size(rng));
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = grid(rng) / 8.0;
        for (auto& v : y) v = grid(rng) / 8.0;
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += (x[k] - y[perm[k]]) * (x[k] - y[perm[k]]);
            best = std::min(best, acc);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double brute = std::sqrt(best / static_cast<double>(n));
        if (w2_distance_1d(EmpiricalMeasure(x, 1), EmpiricalMeasure(y, 1)) != brute) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 trials"};
}

Outcome determinism() {
    const auto cfg = load_config(config_path("gl_converge.json"));
    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        auto c = cfg;
        c.sim.step.threads = threads;
        std::ostringstream csv, out, err;
        run_converge(c, csv, out, err);
        return csv.str() + out.str();
    };
    const int saved = omp_get_max_threads();
    const std::string one = run(1);
    const std::string eight = run(8);
    omp_set_num_threads(saved);
    return {one == eight && !one.empty(), one == eight ? "converge output identical for 1 and 8 threads"
                                                       : "converge output differs between 1 and 8 threads"};
}

Outcome chaos_trend() {
    const auto cfg = load_config(config_path("linear_chaos.json"));
    const auto rep = chaos_study(*model_of(cfg), cfg.sim, cfg.particle_counts, cfg.repetitions);
    std::string detail;
    for (const auto& row : rep.rows)
        detail += std::to_string(row.small) + "->" + std::to_string(row.large) + ": mean " + fmt(row.mean_diff, 5) +
                  " m2 " + fmt(row.second_moment_diff, 5) + " w2 " + fmt(row.w2_diff, 5) + " coupling " +
                  fmt(row.coupling_diff, 5) + "; ";
    const bool ok = rep.diverged == 0 && rep.mean_decreasing && rep.second_moment_decreasing &&
                    rep.w2_decreasing && rep.coupling_decreasing;
    return {ok, detail + "all strictly decreasing required"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 strong order one (Ginzburg-Landau, Milstein)", strong_order_gl},
        {"2 order separation from tamed Euler, seeds 1..5", order_separation},
        {"3 measure-derivative correction is load-bearing", lambda2_exercise},
        {"4 deterministic limit", deterministic_limit},
        {"5 mean ODE oracle", mean_oracle},
        {"6 moment bounds and untamed blow-up", moment_bounds},
        {"7 derivative validator", derivative_validator},
        {"8 iterated-integral identities", iterated_integrals},
        {"9 Wasserstein brute-force oracle", wasserstein_oracle},
        {"10 thread-count determinism", determinism},
        {"chaos monotone trend 256 -> 1024 -> 4096", chaos_trend},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.passed) ++failed;
        std::printf("%s [%s] %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
