#include "mqnmr/errors.hpp"
#include "mqnmr/parallel.hpp"
#include "mqnmr/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Flag {
    const char* key;
    const char* help;
};

constexpr Flag kFlags[] = {
    {"experiment", "A, B, verify or conservation"},
    {"n", "spin count(s), comma separated"},
    {"coupling", "dipolar coupling D"},
    {"p", "perturbation strength(s) for experiment B, comma separated"},
    {"tau-grid", "preparation-time grid start:stop:step (experiment B)"},
    {"t-grid", "evolution-time grid start:stop:step (experiment A)"},
    {"tau", "preparation time for verify / conservation"},
    {"j-min", "intensity threshold for cluster counting"},
    {"tau0", "start of the averaging window"},
    {"periods", "averaging window length in periods"},
    {"avg-steps", "trapezoid intervals in the averaging window"},
    {"mixing", "ideal_mq or matched_heff"},
    {"out", "output directory"},
    {"workers", "worker threads (default from MQNMR_WORKERS)"},
    {"sector-cutoff", "dropped share of Tr{Iz^2} allowed when truncating sectors"},
    {"t-ev", "evolution span for the Fourier-area check"},
    {"samples", "time samples for the Fourier-area check"},
    {"verify-tolerance", "largest accepted oracle mismatch"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple-quantum coherence simulator for equivalent dipolar spins"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    std::string config_file;
    app.add_option("--config", config_file, "flat key = value configuration file");
    std::map<std::string, std::string> given;
    for (const auto& flag : kFlags) {
        app.add_option(std::string("--") + flag.key, given[flag.key], flag.help);
    }
    bool no_spectrum = false;
    app.add_flag("--no-spectrum", no_spectrum, "skip the spectrum CSV");

    auto* simulate = app.add_subcommand("simulate", "intensity spectra only");
    auto* decay = app.add_subcommand("decay-times", "decay times and fits");
    auto* clusters = app.add_subcommand("clusters", "effective cluster sizes");
    auto* perturbed = app.add_subcommand("perturbed", "experiment B, all tables");
    auto* verify = app.add_subcommand("verify", "block pipeline against the full-space oracle");
    auto* conservation = app.add_subcommand("conservation", "Fourier-area sum check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? mqnmr::kExitOk : mqnmr::kExitConfig;
    }

    mqnmr::RunConfig config;
    try {
        config.workers = mqnmr::default_worker_count();
        if (!config_file.empty()) {
            mqnmr::apply_config_file(config, config_file);
        }
        if (simulate->parsed()) {
            config.stage = mqnmr::Stage::simulate;
        } else if (decay->parsed()) {
            config.stage = mqnmr::Stage::decay_times;
        } else if (clusters->parsed()) {
            config.stage = mqnmr::Stage::clusters;
        } else if (perturbed->parsed()) {
            config.experiment = mqnmr::Experiment::perturbed;
        } else if (verify->parsed()) {
            config.experiment = mqnmr::Experiment::verify;
        } else if (conservation->parsed()) {
            config.experiment = mqnmr::Experiment::conservation;
        }
        for (const auto& flag : kFlags) {
            if (app.count(std::string("--") + flag.key) > 0) {
                mqnmr::apply_setting(config, flag.key, given[flag.key]);
            }
        }
        if (no_spectrum) {
            config.emit_spectrum = false;
        }
    } catch (const mqnmr::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return mqnmr::kExitConfig;
    }
    return mqnmr::run(config, std::cout, std::cerr);
}
