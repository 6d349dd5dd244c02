#include "mvsde/analysis.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>

namespace mvsde {

// --- strong convergence ------------------------------------------------------

std::optional<double> fit_rate(std::span<const std::size_t> levels, std::span<const double> rmse) {
    if (levels.size() != rmse.size()) throw std::invalid_argument("fit_rate: size mismatch");
    if (levels.size() < 2) throw std::invalid_argument("fit_rate: need at least two levels");
    for (double e : rmse) {
        if (!(e >= 0.0)) throw std::invalid_argument("fit_rate: rmse must be >= 0");
        if (e == 0.0) return std::nullopt;
    }
    const double count = static_cast<double>(levels.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        sx += -std::log2(static_cast<double>(levels[i]));
        sy += std::log2(rmse[i]);
    }
    const double mx = sx / count;
    const double my = sy / count;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double dx = -std::log2(static_cast<double>(levels[i])) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log2(rmse[i]) - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: levels must differ");
    return sxy / sxx;
}

namespace {

struct RepetitionErrors {
    bool reference_diverged = false;
    std::vector<bool> diverged;
    std::vector<double> terminal;              // per level: sum_i |err|^2
    std::vector<std::vector<double>> by_time;  // per level, per coarse step
    double reference_square = 0.0;             // max over kept times of sum_i |X_ref|^2
};

RepetitionErrors run_repetition(const CoefficientModel& model, const SimConfig& base,
                                const ConvergenceOptions& opt, std::size_t rep) {
    const std::size_t nref = opt.reference_level;
    const std::size_t finest = *std::max_element(opt.levels.begin(), opt.levels.end());
    const std::uint64_t seed = base.seed + rep;

    BrownianLattice lattice(seed, base.particles, model.noise_dim(), nref, base.horizon);
    const auto x0 = sample_initial(base.initial, seed, base.particles, model.state_dim());

    SimConfig cfg = base;
    cfg.seed = seed;
    cfg.fine_steps = nref;
    cfg.step.threads = 1;

    RepetitionErrors out;
    out.diverged.assign(opt.levels.size(), false);
    out.terminal.assign(opt.levels.size(), 0.0);
    out.by_time.resize(opt.levels.size());

    cfg.steps = nref;
    cfg.stride = nref / finest;
    const Trajectory ref = simulate(cfg, model, lattice, x0);
    if (ref.divergence) {
        out.reference_diverged = true;
        std::fill(out.diverged.begin(), out.diverged.end(), true);
        return out;
    }

    for (const auto& snap : ref.snapshots) {
        double acc = 0.0;
        for (double v : snap.positions) acc += v * v;
        out.reference_square = std::max(out.reference_square, acc);
    }

    for (std::size_t li = 0; li < opt.levels.size(); ++li) {
        const std::size_t level = opt.levels[li];
        cfg.steps = level;
        cfg.stride = 1;
        const Trajectory coarse = simulate(cfg, model, lattice, x0);
        if (coarse.divergence) {
            out.diverged[li] = true;
            continue;
        }
        const std::size_t ref_per_coarse = finest / level;
        out.by_time[li].assign(level + 1, 0.0);
        for (std::size_t k = 0; k <= level; ++k) {
            const auto& a = coarse.snapshots[k].positions;
            const auto& b = ref.snapshots[k * ref_per_coarse].positions;
            double acc = 0.0;
            for (std::size_t q = 0; q < a.size(); ++q) acc += (a[q] - b[q]) * (a[q] - b[q]);
            out.by_time[li][k] = acc;
        }
        out.terminal[li] = out.by_time[li][level];
    }
    return out;
}

}  // namespace

ConvergenceReport strong_error(const CoefficientModel& model, const SimConfig& base,
                               const ConvergenceOptions& options) {
    if (options.levels.empty()) throw std::invalid_argument("strong_error: no levels");
    if (options.repetitions == 0) throw std::invalid_argument("strong_error: repetitions must be >= 1");
    const std::size_t nref = options.reference_level;
    for (std::size_t i = 0; i < options.levels.size(); ++i) {
        const std::size_t level = options.levels[i];
        if (level == 0 || nref % level != 0)
            throw std::invalid_argument("strong_error: level " + std::to_string(level) +
                                        " does not divide n_ref=" + std::to_string(nref));
        if (i > 0 && level <= options.levels[i - 1])
            throw std::invalid_argument("strong_error: levels must be strictly increasing");
    }
    if (nref < 16 * options.levels.back())
        throw std::invalid_argument("strong_error: n_ref must be at least 16x the finest level");
    {
        SimConfig probe = base;
        probe.steps = nref;
        probe.fine_steps = nref;
        probe.validate();
    }

    const std::size_t reps = options.repetitions;
    std::vector<RepetitionErrors> results(reps);
    const int workers = options.threads > 0 ? options.threads : omp_get_max_threads();
    if (workers == 1) {
        for (std::size_t r = 0; r < reps; ++r) results[r] = run_repetition(model, base, options, r);
    } else {
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(reps); ++r) {
            try {
                results[static_cast<std::size_t>(r)] =
                    run_repetition(model, base, options, static_cast<std::size_t>(r));
            } catch (...) {
#pragma omp critical(mvsde_strong_error_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }

    ConvergenceReport report;
    report.levels = options.levels;
    report.repetitions = reps;
    report.reference_level = nref;
    const double count = static_cast<double>(base.particles);
    double reference_square = 0.0;
    std::size_t reference_ok = 0;
    for (const auto& res : results)
        if (!res.reference_diverged) {
            reference_square += res.reference_square;
            ++reference_ok;
        }
    const double floor =
        reference_ok ? options.roundoff_tolerance *
                           std::sqrt(reference_square / (static_cast<double>(reference_ok) * count))
                     : 0.0;
    auto snap = [floor](double e) { return e <= floor ? 0.0 : e; };
    for (std::size_t li = 0; li < options.levels.size(); ++li) {
        const std::size_t level = options.levels[li];
        double terminal = 0.0;
        std::vector<double> by_time(level + 1, 0.0);
        std::size_t ok = 0;
        std::size_t bad = 0;
        for (const auto& res : results) {  // repetition order: deterministic sums
            if (res.diverged[li]) {
                ++bad;
                continue;
            }
            ++ok;
            terminal += res.terminal[li];
            for (std::size_t k = 0; k <= level; ++k) by_time[k] += res.by_time[li][k];
        }
        const double denom = static_cast<double>(ok) * count;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        report.step_sizes.push_back(base.horizon / static_cast<double>(level));
        report.rmse.push_back(ok ? snap(std::sqrt(terminal / denom)) : nan);
        report.rmse_sup.push_back(
            ok ? snap(std::sqrt(*std::max_element(by_time.begin(), by_time.end()) / denom)) : nan);
        report.diverged.push_back(bad);
        if (static_cast<double>(bad) > options.max_divergence_fraction * static_cast<double>(reps))
            report.excessive_divergence = true;
    }
    if (!report.excessive_divergence) {
        report.slope = fit_rate(report.levels, report.rmse);
        report.slope_sup = fit_rate(report.levels, report.rmse_sup);
    }
    return report;
}

// --- derivative validation ---------------------------------------------------

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    const double diff = std::abs(a - b);
    return scale < 1e-8 ? diff : diff / scale;
}

double central_difference(const std::function<double(double)>& f, double at, double eps) {
    return (f(at + eps) - f(at - eps)) / (2.0 * eps);
}

std::vector<double> atom_gradient(const std::function<double(const EmpiricalMeasure&)>& f,
                                  const EmpiricalMeasure& mu, std::size_t j, double eps) {
    if (j >= mu.size()) throw std::out_of_range("atom_gradient: atom index out of range");
    const std::size_t d = mu.dim();
    std::vector<double> grad(d);
    for (std::size_t q = 0; q < d; ++q) {
        grad[q] = central_difference(
            [&](double v) {
                std::vector<double> atoms(mu.atoms().begin(), mu.atoms().end());
                atoms[j * d + q] = v;
                return f(EmpiricalMeasure(std::move(atoms), d));
            },
            mu.atom(j)[q], eps);
    }
    return grad;
}

std::string DerivativeCheck::describe() const {
    std::string s = coefficient + "(k=" + std::to_string(k + 1);
    if (coefficient.find("sigma") != std::string::npos) s += ", l=" + std::to_string(l + 1);
    if (coefficient.rfind("dmu", 0) == 0) s += ", j=" + std::to_string(j + 1);
    s += ")[" + std::to_string(component + 1) + "]: analytic=" + std::to_string(analytic) +
         " finite-difference=" + std::to_string(numeric) + " error=" + std::to_string(error);
    return s;
}

std::vector<DerivativeCheck> DerivativeReport::failures() const {
    std::vector<DerivativeCheck> out;
    for (const auto& c : checks)
        if (!c.passed) out.push_back(c);
    return out;
}

namespace {

void record(DerivativeReport& report, DerivativeCheck check, double tolerance) {
    check.error = relative_error(check.analytic, check.numeric);
    check.passed = check.error <= tolerance;
    report.max_error = std::max(report.max_error, check.error);
    report.passed = report.passed && check.passed;
    report.checks.push_back(std::move(check));
}

void check_space_derivatives(const CoefficientModel& model, std::span<const double> x,
                             const EmpiricalMeasure& mu, double eps, double tolerance,
                             DerivativeReport& report) {
    const std::size_t d = model.state_dim();
    const std::size_t m = model.noise_dim();
    std::vector<double> grad(d);
    auto perturbed = [&](std::size_t q, double v) {
        std::vector<double> xp(x.begin(), x.end());
        xp[q] = v;
        return xp;
    };
    for (std::size_t k = 0; k < d; ++k) {
        model.drift_dx(k, x, mu, grad);
        for (std::size_t q = 0; q < d; ++q) {
            const double fd = central_difference(
                [&](double v) { return model.drift(perturbed(q, v), mu)[k]; }, x[q], eps);
            record(report, {"dx_b", k, 0, 0, q, grad[q], fd}, tolerance);
        }
        for (std::size_t l = 0; l < m; ++l) {
            model.diffusion_dx(k, l, x, mu, grad);
            for (std::size_t q = 0; q < d; ++q) {
                const double fd = central_difference(
                    [&](double v) { return model.diffusion(perturbed(q, v), mu)[k * m + l]; },
                    x[q], eps);
                record(report, {"dx_sigma", k, l, 0, q, grad[q], fd}, tolerance);
            }
        }
    }
}

void check_measure_derivatives(const CoefficientModel& model, std::span<const double> x,
                               const EmpiricalMeasure& mu, std::size_t j, double eps,
                               double tolerance, DerivativeReport& report) {
    const std::size_t d = model.state_dim();
    const std::size_t m = model.noise_dim();
    const double count = static_cast<double>(mu.size());
    const auto y = mu.atom(j);
    std::vector<double> grad(d);
    for (std::size_t k = 0; k < d; ++k) {
        model.drift_dmu(k, x, mu, y, grad);
        const auto fd = atom_gradient(
            [&](const EmpiricalMeasure& nu) { return model.drift(x, nu)[k]; }, mu, j, eps);
        for (std::size_t q = 0; q < d; ++q)
            record(report, {"dmu_b", k, 0, j, q, grad[q] / count, fd[q]}, tolerance);
        for (std::size_t l = 0; l < m; ++l) {
            model.diffusion_dmu(k, l, x, mu, y, grad);
            const auto fds = atom_gradient(
                [&](const EmpiricalMeasure& nu) { return model.diffusion(x, nu)[k * m + l]; }, mu,
                j, eps);
            for (std::size_t q = 0; q < d; ++q)
                record(report, {"dmu_sigma", k, l, j, q, grad[q] / count, fds[q]}, tolerance);
        }
    }
}

void check_inputs(const CoefficientModel& model, std::span<const double> x,
                  const EmpiricalMeasure& mu, double eps) {
    if (!(eps >= 1e-8 && eps <= 1e-3))
        throw std::invalid_argument("validate_derivatives: eps must lie in [1e-8, 1e-3]");
    if (x.size() != model.state_dim() || mu.dim() != model.state_dim())
        throw std::invalid_argument("validate_derivatives: dimension mismatch");
}

}  // namespace

DerivativeReport validate_derivatives(const CoefficientModel& model, std::span<const double> x,
                                      const EmpiricalMeasure& mu, std::size_t j, double eps,
                                      double tolerance) {
    check_inputs(model, x, mu, eps);
    if (j >= mu.size()) throw std::out_of_range("validate_derivatives: atom index out of range");
    DerivativeReport report;
    check_space_derivatives(model, x, mu, eps, tolerance, report);
    check_measure_derivatives(model, x, mu, j, eps, tolerance, report);
    return report;
}

DerivativeReport validate_derivatives(const CoefficientModel& model, std::span<const double> x,
                                      const EmpiricalMeasure& mu, double eps, double tolerance) {
    check_inputs(model, x, mu, eps);
    DerivativeReport report;
    check_space_derivatives(model, x, mu, eps, tolerance, report);
    for (std::size_t j = 0; j < mu.size(); ++j)
        check_measure_derivatives(model, x, mu, j, eps, tolerance, report);
    return report;
}

// --- moments -----------------------------------------------------------------

MomentSeries moment_track(const Trajectory& trajectory, double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("moment_track: p must be >= 2");
    MomentSeries series;
    series.diverged = trajectory.divergence.has_value();
    for (const auto& snap : trajectory.snapshots) {
        series.steps.push_back(snap.step);
        series.times.push_back(snap.t);
        const double v = moment(snap.measure(), p);
        series.values.push_back(v);
        series.max = std::max(series.max, v);
    }
    if (series.diverged) {
        const auto& ev = *trajectory.divergence;
        series.steps.push_back(ev.step);
        series.times.push_back(ev.t);
        series.values.push_back(std::numeric_limits<double>::infinity());
        series.max = std::numeric_limits<double>::infinity();
    }
    return series;
}

// --- propagation of chaos ----------------------------------------------------

namespace {

bool strictly_decreasing(const std::vector<ChaosRow>& rows, double ChaosRow::*field) {
    if (rows.size() < 2) return false;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].*field < rows[i - 1].*field)) return false;
    return true;
}

}  // namespace

ChaosReport chaos_study(const CoefficientModel& model, const SimConfig& base,
                        std::span<const std::size_t> particle_counts, std::size_t repetitions) {
    if (particle_counts.size() < 2) throw std::invalid_argument("chaos_study: need >= 2 counts");
    if (repetitions == 0) throw std::invalid_argument("chaos_study: repetitions must be >= 1");
    for (std::size_t i = 1; i < particle_counts.size(); ++i)
        if (particle_counts[i] < particle_counts[i - 1])
            throw std::invalid_argument("chaos_study: particle counts must be non-decreasing");
    {
        SimConfig probe = base;
        probe.particles = particle_counts.front();
        probe.validate();
    }

    const std::size_t d = model.state_dim();
    const std::size_t pairs = particle_counts.size() - 1;
    ChaosReport report;
    report.repetitions = repetitions;
    report.rows.resize(pairs);
    std::size_t used = 0;

    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        std::vector<SimState> terminal;
        bool diverged = false;
        for (std::size_t count : particle_counts) {
            SimConfig cfg = base;
            cfg.particles = count;
            cfg.seed = base.seed + rep;
            cfg.stride = cfg.steps;
            const Trajectory traj = simulate(cfg, model);
            if (traj.divergence) {
                diverged = true;
                break;
            }
            terminal.push_back(traj.final_state());
        }
        if (diverged) {
            ++report.diverged;
            continue;
        }
        ++used;
        for (std::size_t p = 0; p < pairs; ++p) {
            const SimState& a = terminal[p];
            const SimState& b = terminal[p + 1];
            const EmpiricalMeasure mu_a = a.measure();
            const EmpiricalMeasure mu_b = b.measure();
            std::vector<double> prefix(b.positions.begin(),
                                       b.positions.begin() +
                                           static_cast<std::ptrdiff_t>(a.positions.size()));
            const EmpiricalMeasure mu_prefix(std::move(prefix), d);

            double mean_gap = 0.0;
            for (std::size_t q = 0; q < d; ++q) {
                const double g = mu_a.mean()[q] - mu_b.mean()[q];
                mean_gap += g * g;
            }
            const double m2_gap = moment(mu_a, 2.0) - moment(mu_b, 2.0);
            const double w2 = d == 1 ? w2_distance_1d(mu_a, mu_prefix)
                                     : std::numeric_limits<double>::quiet_NaN();
            const double coupling = w2_coupling_bound(mu_a, mu_prefix);

            ChaosRow& row = report.rows[p];
            row.mean_diff += mean_gap;
            row.second_moment_diff += m2_gap * m2_gap;
            row.w2_diff += w2 * w2;
            row.coupling_diff += coupling * coupling;
        }
    }

    for (std::size_t p = 0; p < pairs; ++p) {
        ChaosRow& row = report.rows[p];
        row.small = particle_counts[p];
        row.large = particle_counts[p + 1];
        const double denom = static_cast<double>(used);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.mean_diff = used ? std::sqrt(row.mean_diff / denom) : nan;
        row.second_moment_diff = used ? std::sqrt(row.second_moment_diff / denom) : nan;
        row.w2_diff = used ? std::sqrt(row.w2_diff / denom) : nan;
        row.coupling_diff = used ? std::sqrt(row.coupling_diff / denom) : nan;
    }
    report.mean_decreasing = strictly_decreasing(report.rows, &ChaosRow::mean_diff);
    report.second_moment_decreasing = strictly_decreasing(report.rows, &ChaosRow::second_moment_diff);
    report.w2_decreasing = strictly_decreasing(report.rows, &ChaosRow::w2_diff);
    report.coupling_decreasing = strictly_decreasing(report.rows, &ChaosRow::coupling_diff);
    return report;
}

}  // namespace mvsde
