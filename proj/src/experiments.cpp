#include "mvsde/experiments.hpp"

#include <cstdio>
#include <ostream>

namespace mvsde {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& csv) {
    const std::size_t d = traj.snapshots.empty() ? 1 : traj.snapshots.front().dim;
    csv << "step,t,particle";
    for (std::size_t q = 0; q < d; ++q) csv << ",x_" << q + 1;
    csv << '\n';
    for (const auto& s : traj.snapshots) {
        const std::string t = format_double(s.t);
        for (std::size_t i = 0; i < s.particles(); ++i) {
            csv << s.step << ',' << t << ',' << i;
            for (double v : s.row(i)) csv << ',' << format_double(v);
            csv << '\n';
        }
    }
}

std::string divergence_json(const DivergenceEvent& ev) {
    return "{\"event\":\"divergence\",\"step\":" + std::to_string(ev.step) +
           ",\"particle\":" + std::to_string(ev.particle) + ",\"t\":" + format_double(ev.t) + "}";
}

namespace {

std::unique_ptr<CoefficientModel> build_model(const ExperimentConfig& cfg) {
    try {
        return make_model(cfg.model_name, cfg.model_params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

int run_simulate(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err) {
    cfg.require(Workflow::simulate);
    const auto model = build_model(cfg);
    const Trajectory traj = simulate(cfg.sim, *model);
    write_trajectory_csv(traj, csv);
    if (traj.divergence) {
        err << divergence_json(*traj.divergence) << '\n';
        return exit_code::divergence;
    }
    return exit_code::ok;
}

int run_converge(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& out,
                 std::ostream& err) {
    cfg.require(Workflow::converge);
    const auto model = build_model(cfg);
    ConvergenceOptions opt;
    opt.levels = cfg.levels;
    opt.reference_level = cfg.reference_level;
    opt.repetitions = cfg.repetitions;
    opt.threads = cfg.sim.step.threads;
    const ConvergenceReport rep = strong_error(*model, cfg.sim, opt);

    const bool sup = cfg.error_metric == ErrorMetric::sup;
    const auto& errors = sup ? rep.rmse_sup : rep.rmse;
    csv << "n,h,rmse,diverged_count\n";
    for (std::size_t i = 0; i < rep.levels.size(); ++i)
        csv << rep.levels[i] << ',' << format_double(rep.step_sizes[i]) << ','
            << format_double(errors[i]) << ',' << rep.diverged[i] << '\n';

    if (rep.excessive_divergence) {
        csv << "# slope=unavailable (excessive divergence)\n";
        err << "more than 1% of repetitions diverged at some level\n";
        return exit_code::excessive_divergence;
    }
    const auto& slope = sup ? rep.slope_sup : rep.slope;
    const std::string text = slope ? format_double(*slope) : std::string("exact");
    csv << "# slope=" << text << '\n';
    out << "slope=" << text << '\n';
    const auto& other = sup ? rep.slope : rep.slope_sup;
    out << (sup ? "slope_terminal=" : "slope_sup=")
        << (other ? format_double(*other) : std::string("exact")) << '\n';
    return exit_code::ok;
}

int run_moments(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err) {
    cfg.require(Workflow::moments);
    const auto model = build_model(cfg);
    const Trajectory traj = simulate(cfg.sim, *model);
    const MomentSeries series = moment_track(traj, cfg.moment_order);
    csv << "step,t,moment\n";
    for (std::size_t i = 0; i < series.values.size(); ++i)
        csv << series.steps[i] << ',' << format_double(series.times[i]) << ','
            << format_double(series.values[i]) << '\n';
    csv << "# max=" << format_double(series.max) << '\n';
    if (traj.divergence) {
        err << divergence_json(*traj.divergence) << '\n';
        return exit_code::divergence;
    }
    return exit_code::ok;
}

int run_chaos(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& err) {
    cfg.require(Workflow::chaos);
    const auto model = build_model(cfg);
    const ChaosReport rep = chaos_study(*model, cfg.sim, cfg.particle_counts, cfg.repetitions);
    csv << "N_small,N_large,mean_diff,second_moment_diff,w2_diff,coupling_diff\n";
    for (const auto& r : rep.rows)
        csv << r.small << ',' << r.large << ',' << format_double(r.mean_diff) << ','
            << format_double(r.second_moment_diff) << ',' << format_double(r.w2_diff) << ','
            << format_double(r.coupling_diff) << '\n';
    auto flag = [](bool b) { return b ? "true" : "false"; };
    csv << "# decreasing mean=" << flag(rep.mean_decreasing)
        << " second_moment=" << flag(rep.second_moment_decreasing)
        << " w2=" << flag(rep.w2_decreasing) << " coupling=" << flag(rep.coupling_decreasing)
        << '\n';
    if (rep.diverged > 0) {
        err << rep.diverged << " of " << rep.repetitions << " repetitions diverged\n";
        if (static_cast<double>(rep.diverged) > 0.01 * static_cast<double>(rep.repetitions))
            return exit_code::excessive_divergence;
    }
    return exit_code::ok;
}

std::map<std::string, double> default_model_params(const std::string& name) {
    if (name == "ginzburg-landau") return {{"alpha", 1.0}, {"c", 0.5}};
    if (name == "linear-mean-field")
        return {{"a", -1.0}, {"abar", 0.5}, {"bcoef", 0.2}, {"bbar", 0.1}};
    if (name == "additive-noise") return {{"sigma", 1.0}};
    return {};
}

int run_validate(const CoefficientModel& model, double eps, std::ostream& out) {
    const std::size_t d = model.state_dim();
    const std::vector<double> offsets = {-1.3, -0.4, 0.25, 0.9, 1.6};
    std::vector<double> atoms;
    for (std::size_t j = 0; j < offsets.size(); ++j)
        for (std::size_t q = 0; q < d; ++q)
            atoms.push_back(offsets[j] + 0.17 * static_cast<double>(q));
    std::vector<double> x(d);
    for (std::size_t q = 0; q < d; ++q) x[q] = 0.7 - 0.31 * static_cast<double>(q);

    const EmpiricalMeasure mu(std::move(atoms), d);
    const DerivativeReport rep = validate_derivatives(model, x, mu, eps);
    out << "model=" << model.name() << " eps=" << format_double(eps)
        << " checks=" << rep.checks.size() << " max_error=" << format_double(rep.max_error)
        << '\n';
    for (const auto& f : rep.failures()) out << "FAIL " << f.describe() << '\n';
    out << (rep.passed ? "PASS" : "FAIL") << '\n';
    return rep.passed ? exit_code::ok : exit_code::validation_failed;
}

}  // namespace mvsde
