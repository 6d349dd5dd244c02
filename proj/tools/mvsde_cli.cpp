// Command-line front end: simulate / converge / validate / moments / chaos.

#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mvsde/experiments.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "Experiment JSON file");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "Output CSV path (overrides output.path; default stdout)");
    cmd->add_option("--seed", c.seed, "Seed override");
    cmd->add_option("--threads", c.threads, "Worker threads (does not change results)")
        ->check(CLI::NonNegativeNumber);
}

mvsde::ExperimentConfig load(const Common& c) {
    auto cfg = mvsde::load_config(c.config);
    if (c.seed) cfg.sim.seed = *c.seed;
    cfg.sim.step.threads = c.threads;
    if (!c.out.empty()) cfg.output_path = c.out;
    return cfg;
}

int emit(const mvsde::ExperimentConfig& cfg, const std::string& data) {
    if (!cfg.output_path) {
        std::cout << data;
        return 0;
    }
    std::ofstream file(*cfg.output_path, std::ios::binary);
    if (!file) {
        std::cerr << "cannot write '" << *cfg.output_path << "'\n";
        return 1;
    }
    file << data;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle simulation of McKean-Vlasov SDEs with a tamed Milstein scheme"};
    app.require_subcommand(1);

    Common sim_opts, conv_opts, mom_opts, chaos_opts, val_opts;
    auto* sim = app.add_subcommand("simulate", "Run the particle system and write the trajectory");
    add_common(sim, sim_opts, true);
    auto* conv = app.add_subcommand("converge", "Estimate the strong convergence rate");
    add_common(conv, conv_opts, true);
    auto* mom = app.add_subcommand("moments", "Track the empirical p-th moment over time");
    add_common(mom, mom_opts, true);
    auto* chaos = app.add_subcommand("chaos", "Compare terminal statistics across particle counts");
    add_common(chaos, chaos_opts, true);
    auto* val = app.add_subcommand("validate", "Check model derivatives against finite differences");
    add_common(val, val_opts, false);
    std::string model_name;
    double eps = 1e-5;
    val->add_option("--model", model_name, "Built-in model name (default parameters)");
    val->add_option("--eps", eps, "Finite-difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : mvsde::exit_code::config_error;
    }

    try {
        if (val->parsed()) {
            std::unique_ptr<mvsde::CoefficientModel> model;
            if (!val_opts.config.empty()) {
                const auto cfg = mvsde::load_config(val_opts.config);
                model = mvsde::make_model(cfg.model_name, cfg.model_params);
            } else if (!model_name.empty()) {
                model = mvsde::make_model(model_name, mvsde::default_model_params(model_name));
            } else {
                std::cerr << "validate needs --model or --config\n";
                return mvsde::exit_code::config_error;
            }
            return mvsde::run_validate(*model, eps, std::cout);
        }

        const Common& c = sim->parsed()    ? sim_opts
                          : conv->parsed() ? conv_opts
                          : mom->parsed()  ? mom_opts
                                           : chaos_opts;
        if (c.threads > 0) omp_set_num_threads(c.threads);
        const auto cfg = load(c);
        std::ostringstream data;
        std::ostringstream summary;
        int rc = 0;
        if (sim->parsed())
            rc = mvsde::run_simulate(cfg, data, std::cerr);
        else if (conv->parsed())
            rc = mvsde::run_converge(cfg, data, summary, std::cerr);
        else if (mom->parsed())
            rc = mvsde::run_moments(cfg, data, std::cerr);
        else
            rc = mvsde::run_chaos(cfg, data, std::cerr);
        if (emit(cfg, data.str()) != 0) return mvsde::exit_code::config_error;
        std::cout << summary.str();
        return rc;
    } catch (const mvsde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return mvsde::exit_code::config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return mvsde::exit_code::config_error;
    }
}
