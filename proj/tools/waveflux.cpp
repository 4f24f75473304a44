#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "waveflux/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity detection from wave-driven heat flux data"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 1;
    double tau_min = 0.0, tau_max = 0.0;
    std::vector<double> T_values = {0.5, 1.0};

    app.add_option("--config", config_path, "config file path");
    app.add_option("--jobs", jobs, "worker threads for modal solves");
    app.add_option("--tau-min", tau_min, "override the lower end of the tau grid");
    app.add_option("--tau-max", tau_max, "override the upper end of the tau grid");

    auto* sweep = app.add_subcommand("sweep", "run a tau sweep and emit CSV");
    auto* verify = app.add_subcommand("verify", "check the energy identities");
    auto* fit = app.add_subcommand("fit", "sweep, fit rates, estimate the distance");
    auto* thresholds =
        app.add_subcommand("thresholds", "classify e^{xT}|I| across horizons T");
    thresholds->add_option("--T", T_values, "observation horizons to scan");

    CLI11_PARSE(app, argc, argv);

    try {
        waveflux::ExperimentConfig cfg =
            waveflux::parse_config(config_path.empty() ? "" : read_file(config_path));
        if (tau_min > 0.0) cfg.tau_min = tau_min;
        if (tau_max > 0.0) cfg.tau_max = tau_max;
        if (cfg.tau_min > 0.0 || cfg.tau_max > 0.0) {
            auto [lo, hi] = cfg.tau_range();
            if (cfg.tau_min > 0.0) lo = cfg.tau_min;
            if (cfg.tau_max > 0.0) hi = cfg.tau_max;
            if (!(lo > 0.0 && hi > lo))
                throw std::runtime_error("need 0 < tau-min < tau-max");
            cfg.tau_min = lo;
            cfg.tau_max = hi;
        }
        cfg.numerics.jobs = std::max(1, jobs);

        waveflux::Command cmd = waveflux::Command::Sweep;
        if (verify->parsed()) cmd = waveflux::Command::VerifyIdentities;
        if (fit->parsed()) cmd = waveflux::Command::FitReport;
        if (thresholds->parsed()) cmd = waveflux::Command::ThresholdScan;
        (void)sweep;
        return waveflux::run_experiment(cfg, cmd, T_values, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
