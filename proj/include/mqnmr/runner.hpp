#pragma once

// Experiment orchestration behind the command-line tool: resolves a run
// configuration, executes the requested experiment and writes CSV tables
// plus run_meta.json into the output directory.

#include "mqnmr/coherence.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mqnmr {

// start:stop:step, both ends inclusive when stop lies on the grid.
struct Grid {
    double start = 0.0;
    double stop = 1.0;
    double step = 0.1;

    std::vector<double> points() const;
    std::string to_string() const;
    // Throws ConfigError naming `field` on malformed text or an invalid grid.
    static Grid parse(std::string_view text, std::string_view field);
    void validate(std::string_view field) const;
};

enum class Experiment { standard, perturbed, verify, conservation };

std::string_view to_string(Experiment e);
// Accepts A, B, verify, conservation.
Experiment parse_experiment(std::string_view text);

// Which tables to produce. `all` emits everything the experiment supports.
enum class Stage { all, simulate, decay_times, clusters };

struct RunConfig {
    Experiment experiment = Experiment::standard;
    Stage stage = Stage::all;
    std::vector<int> n_spins{201};
    double coupling = 1.0;
    std::vector<double> p{0.001};
    Grid tau_grid{0.0, 60.0, 0.01};
    Grid t_grid{0.0, 0.2, 0.001};
    double tau = 1.0;  // single preparation time for verify / conservation
    double j_min = 0.005;
    AveragingWindow window;
    Mixing mixing = Mixing::ideal_mq;
    std::string output_dir = "mqnmr_out";
    int workers = 1;
    double sector_cutoff = 1e-15;
    double t_ev = 1.0;
    int samples = 4096;
    bool emit_spectrum = true;
    double verify_tolerance = 1e-10;

    // Throws ConfigError naming the offending field.
    void validate() const;
    std::string to_json() const;
};

// Sets one field from its textual form. Keys are the long flag names of the
// command-line tool without the leading dashes (n, p, tau-grid, ...). Lists
// (n, p) are comma separated. Throws ConfigError naming the key.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Flat `key = value` file, one setting per line; '#' starts a comment.
void apply_config_file(RunConfig& config, const std::string& path);

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

// Runs the configured experiment. Output files are staged and only moved
// into output_dir when the whole run succeeds. Progress and reports go to
// `log`. Returns an exit code; ConfigError / NumericalError are mapped to
// kExitConfig / kExitNumerical with a message on `err`.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace mqnmr
