#include "mqnmr/runner.hpp"

#include "mqnmr/analysis.hpp"
#include "mqnmr/csv.hpp"
#include "mqnmr/errors.hpp"
#include "mqnmr/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <unistd.h>

namespace mqnmr {

namespace fs = std::filesystem;

namespace {

double parse_double(std::string_view text, std::string_view field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(std::string(field) + ": cannot parse '" + std::string(text) + "' as a number");
    }
    return value;
}

std::string short_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string tag(int n) { return "n" + std::to_string(n); }

std::string tag(int n, double p, Mixing mixing) {
    return "n" + std::to_string(n) + "_p" + short_number(p) + "_" + std::string(to_string(mixing));
}

// Files are written here and renamed into place once the run succeeds.
class Staging {
public:
    explicit Staging(const fs::path& out) : out_(out) {
        fs::create_directories(out_);
        dir_ = out_ / (".staging-" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;
    ~Staging() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }

    fs::path file(const std::string& name) {
        names_.push_back(name);
        return dir_ / name;
    }

    std::vector<std::string> commit() {
        for (const auto& name : names_) {
            fs::rename(dir_ / name, out_ / name);
        }
        return names_;
    }

private:
    fs::path out_;
    fs::path dir_;
    std::vector<std::string> names_;
};

void write_spectrum(const fs::path& path, std::string_view experiment, int n, double p,
                    const IntensitySeries& series, double fixed_tau, bool abscissa_is_tau) {
    CsvWriter csv(path, {"experiment", "n_spins", "p", "tau_bar", "t_bar", "k", "intensity"});
    for (std::size_t i = 0; i < series.abscissa.size(); ++i) {
        const double tau = abscissa_is_tau ? series.abscissa[i] : fixed_tau;
        const double t = abscissa_is_tau ? 0.0 : series.abscissa[i];
        for (int k = -n; k <= n; ++k) {
            csv.field(experiment).field(n).field(p).field(tau).field(t).field(k).field(series.at(i, k));
            csv.end_row();
        }
    }
}

void write_clusters(const fs::path& path, const ClusterTrace& trace) {
    CsvWriter csv(path, {"abscissa", "n_c_all", "n_c_nonneg", "j_min"});
    for (std::size_t i = 0; i < trace.abscissa.size(); ++i) {
        csv.field(trace.abscissa[i]).field(trace.counts[i].all).field(trace.counts[i].nonneg)
            .field(trace.j_min);
        csv.end_row();
    }
}

struct DecayRow {
    int k;
    DecayTime time;
};

void write_decay_times(const fs::path& path, int n, double p, std::string_view method,
                       const std::vector<DecayRow>& rows) {
    CsvWriter csv(path, {"n_spins", "p", "k", "decay_time", "method", "status"});
    for (const auto& row : rows) {
        const double value = row.time.status == DecayStatus::ok
                                 ? row.time.value
                                 : std::numeric_limits<double>::quiet_NaN();
        csv.field(n).field(p).field(row.k).field(value).field(method).field(to_string(row.time.status));
        csv.end_row();
    }
}

void write_fit(const fs::path& path, int n, double p, FitModel model,
               const std::optional<FitResult>& fit, std::size_t n_points) {
    CsvWriter csv(path, {"model", "n_spins", "p", "param_0", "param_1", "param_2", "param_3",
                         "residual", "converged", "n_points"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    csv.field(to_string(model)).field(n).field(p);
    for (std::size_t i = 0; i < 4; ++i) {
        csv.field(fit && i < fit->parameters.size() ? fit->parameters[i] : nan);
    }
    csv.field(fit ? fit->residual : nan).field(fit && fit->converged ? "true" : "false")
        .field(static_cast<int>(n_points));
    csv.end_row();
}

SimulationOptions simulation_options(const RunConfig& config) {
    return {config.sector_cutoff, config.workers};
}

bool wants(Stage stage, Stage what) { return stage == Stage::all || stage == what; }

void run_standard(const RunConfig& config, Staging& staging, std::ostream& log) {
    const auto t_grid = config.t_grid.points();
    for (int n : config.n_spins) {
        const SpinSystem system(n, config.coupling);
        log << "standard experiment: N = " << n << ", averaging over " << config.window.steps + 1
            << " tau points" << std::endl;
        const StandardExperiment experiment(system, simulation_options(config));
        const AveragedSpectrum averaged = experiment.averaged(t_grid, config.window);
        const auto& series = averaged.series;

        if (config.emit_spectrum && wants(config.stage, Stage::simulate)) {
            write_spectrum(staging.file("spectrum_A_" + tag(n) + ".csv"), "A", n, 0.0, series,
                           config.window.tau0, false);
        }
        if (wants(config.stage, Stage::decay_times)) {
            std::vector<DecayRow> rows;
            std::vector<FitPoint> points;
            for (int k = 0; k <= n; ++k) {
                const auto curve = make_curve(series, k, n, 0.0, ExperimentKind::standard);
                if (!(curve.values.front() > 0.0)) {
                    continue;
                }
                const DecayTime te = decay_time_e(curve);
                rows.push_back({k, te});
                if (k >= 2 && k % 2 == 0 && te.status == DecayStatus::ok &&
                    curve.values.front() >= config.j_min) {
                    points.push_back({static_cast<double>(k), te.value});
                }
            }
            write_decay_times(staging.file("decay_times_A_" + tag(n) + ".csv"), n, 0.0, "e_fold",
                              rows);
            std::optional<FitResult> fit;
            if (points.size() >= 4) {
                fit = fit_coth(points);
            }
            write_fit(staging.file("fits_A_" + tag(n) + ".csv"), n, 0.0, FitModel::coth, fit,
                      points.size());
        }
        if (wants(config.stage, Stage::clusters)) {
            write_clusters(staging.file("clusters_A_" + tag(n) + ".csv"),
                           cluster_trace_standard(series, config.j_min));
        }
    }
}

void run_perturbed(const RunConfig& config, Staging& staging, std::ostream& log) {
    const auto tau_grid = config.tau_grid.points();
    for (int n : config.n_spins) {
        const SpinSystem system(n, config.coupling);
        for (double p : config.p) {
            log << "perturbed experiment: N = " << n << ", p = " << short_number(p) << ", "
                << to_string(config.mixing) << ", " << tau_grid.size() << " tau points" << std::endl;
            const PerturbedExperiment experiment(system, p, config.mixing, simulation_options(config));
            const IntensitySeries series = experiment.series(tau_grid);
            const std::string suffix = tag(n, p, config.mixing);

            if (config.emit_spectrum && wants(config.stage, Stage::simulate)) {
                write_spectrum(staging.file("spectrum_B_" + suffix + ".csv"), "B", n, p, series,
                               0.0, true);
            }
            if (wants(config.stage, Stage::decay_times)) {
                std::vector<DecayRow> rows;
                std::vector<FitPoint> points;
                for (int k = 0; k <= n; ++k) {
                    const auto curve = make_curve(series, k, n, p, ExperimentKind::perturbed);
                    const double peak = *std::max_element(curve.values.begin(), curve.values.end());
                    if (!(peak > 0.0)) {
                        continue;
                    }
                    const DecayTime tp = decay_time_perturbed(curve);
                    rows.push_back({k, tp});
                    if (k >= 2 && k % 2 == 0 && tp.status == DecayStatus::ok && peak >= config.j_min) {
                        points.push_back({static_cast<double>(k), tp.value});
                    }
                }
                write_decay_times(staging.file("decay_times_B_" + suffix + ".csv"), n, p,
                                  "envelope_zero", rows);
                std::optional<FitResult> fit;
                if (points.size() >= 4) {
                    fit = fit_tanh(points);
                }
                write_fit(staging.file("fits_B_" + suffix + ".csv"), n, p, FitModel::tanh, fit,
                          points.size());
            }
            if (wants(config.stage, Stage::clusters)) {
                write_clusters(staging.file("clusters_B_" + suffix + ".csv"),
                               cluster_trace_perturbed(series, config.j_min));
            }
        }
    }
}

double max_difference(const CoherenceSpectrum& a, const CoherenceSpectrum& b) {
    double worst = 0.0;
    for (int k = -a.max_order; k <= a.max_order; ++k) {
        worst = std::max(worst, std::abs(a.at(k) - b.at(k)));
    }
    return worst;
}

// Returns true when every comparison is within tolerance.
bool run_verify(const RunConfig& config, Staging& staging, std::ostream& log) {
    const std::vector<double> taus{0.2, 0.5, 0.8, 1.1, 1.4};
    const std::vector<double> ts{0.0, 0.1, 0.2, 0.3, 0.4};
    const std::vector<double> ps{0.0, 0.1, 0.3, 0.6, 1.0};
    // The oracle has no sector truncation, so compare against the exact pipeline.
    SimulationOptions exact{0.0, config.workers};
    bool ok = true;
    for (int n : config.n_spins) {
        const SpinSystem system(n, config.coupling);
        CsvWriter csv(staging.file("verify_" + tag(n) + ".csv"),
                      {"experiment", "n_spins", "p", "tau_bar", "t_bar", "mixing", "max_abs_diff"});
        double worst_a = 0.0;
        const StandardExperiment standard(system, exact);
        for (double tau : taus) {
            for (double t : ts) {
                const double diff =
                    max_difference(standard.spectrum(tau, t), oracle::intensities_standard(system, tau, t));
                worst_a = std::max(worst_a, diff);
                csv.field("A").field(n).field(0.0).field(tau).field(t).field("none").field(diff);
                csv.end_row();
            }
        }
        double worst_b = 0.0;
        for (Mixing mixing : {Mixing::ideal_mq, Mixing::matched_heff}) {
            for (double p : ps) {
                const PerturbedExperiment perturbed(system, p, mixing, exact);
                for (double tau : taus) {
                    const double diff = max_difference(
                        perturbed.spectrum(tau), oracle::intensities_perturbed(system, p, tau, mixing));
                    worst_b = std::max(worst_b, diff);
                    csv.field("B").field(n).field(p).field(tau).field(0.0).field(to_string(mixing))
                        .field(diff);
                    csv.end_row();
                }
            }
        }
        const bool pass = worst_a <= config.verify_tolerance && worst_b <= config.verify_tolerance;
        ok = ok && pass;
        log << "verify N = " << n << ": experiment A max |delta| = " << format_number(worst_a)
            << ", experiment B max |delta| = " << format_number(worst_b) << " -> "
            << (pass ? "max |delta| <= " : "max |delta| > ") << format_number(config.verify_tolerance)
            << std::endl;
    }
    return ok;
}

void run_conservation(const RunConfig& config, Staging& staging, std::ostream& log) {
    for (int n : config.n_spins) {
        const SpinSystem system(n, config.coupling);
        const FourierAreas areas =
            fourier_area_check(system, config.tau, config.t_ev, config.samples, simulation_options(config));
        CsvWriter csv(staging.file("conservation_" + tag(n) + ".csv"),
                      {"n_spins", "tau_bar", "k", "area_analytic", "area_numeric"});
        for (std::size_t i = 0; i < areas.orders.size(); ++i) {
            csv.field(n).field(config.tau).field(areas.orders[i]).field(areas.analytic[i])
                .field(areas.numeric[i]);
            csv.end_row();
        }
        log << "conservation N = " << n << ", tau = " << format_number(config.tau)
            << ": sum A_k analytic = " << format_number(areas.analytic_sum)
            << ", numeric (DFT) = " << format_number(areas.numeric_sum) << std::endl;
    }
}

}  // namespace

std::vector<double> Grid::points() const {
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = start + step * static_cast<double>(i);
    }
    return out;
}

std::string Grid::to_string() const {
    return short_number(start) + ":" + short_number(stop) + ":" + short_number(step);
}

void Grid::validate(std::string_view field) const {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
        throw ConfigError(std::string(field) + ": grid values must be finite");
    }
    if (!(start < stop)) {
        throw ConfigError(std::string(field) + ": grid start must be < stop");
    }
    if (!(step > 0.0)) {
        throw ConfigError(std::string(field) + ": grid step must be > 0");
    }
    if (start < 0.0) {
        throw ConfigError(std::string(field) + ": times must be >= 0");
    }
    if ((stop - start) / step > 1e8) {
        throw ConfigError(std::string(field) + ": grid has too many points");
    }
}

Grid Grid::parse(std::string_view text, std::string_view field) {
    std::vector<std::string_view> parts;
    std::size_t from = 0;
    for (;;) {
        const auto colon = text.find(':', from);
        parts.push_back(text.substr(from, colon == std::string_view::npos ? text.npos : colon - from));
        if (colon == std::string_view::npos) {
            break;
        }
        from = colon + 1;
    }
    if (parts.size() != 3) {
        throw ConfigError(std::string(field) + ": expected start:stop:step, got '" + std::string(text) + "'");
    }
    Grid g{parse_double(parts[0], field), parse_double(parts[1], field), parse_double(parts[2], field)};
    g.validate(field);
    return g;
}

std::string_view to_string(Experiment e) {
    switch (e) {
        case Experiment::standard:
            return "A";
        case Experiment::perturbed:
            return "B";
        case Experiment::verify:
            return "verify";
        case Experiment::conservation:
            return "conservation";
    }
    return "unknown";
}

Experiment parse_experiment(std::string_view text) {
    if (text == "A") {
        return Experiment::standard;
    }
    if (text == "B") {
        return Experiment::perturbed;
    }
    if (text == "verify") {
        return Experiment::verify;
    }
    if (text == "conservation") {
        return Experiment::conservation;
    }
    throw ConfigError("experiment: expected A, B, verify or conservation, got '" + std::string(text) + "'");
}

void RunConfig::validate() const {
    if (n_spins.empty()) {
        throw ConfigError("n: at least one spin count is required");
    }
    for (int n : n_spins) {
        if (n < 1) {
            throw ConfigError("n: spin counts must be >= 1, got " + std::to_string(n));
        }
        if (experiment == Experiment::verify && n > oracle::kMaxSpins) {
            throw ConfigError("n: verify supports at most " + std::to_string(oracle::kMaxSpins) +
                              " spins, got " + std::to_string(n));
        }
    }
    if (!(coupling > 0.0) || !std::isfinite(coupling)) {
        throw ConfigError("coupling: must be > 0");
    }
    if (experiment == Experiment::perturbed) {
        if (p.empty()) {
            throw ConfigError("p: at least one perturbation strength is required");
        }
        for (double v : p) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ConfigError("p: values must lie in [0, 1], got " + short_number(v));
            }
        }
    }
    tau_grid.validate("tau-grid");
    t_grid.validate("t-grid");
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw ConfigError("tau: must be >= 0");
    }
    if (!(j_min > 0.0)) {
        throw ConfigError("j-min: must be > 0");
    }
    try {
        window.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("tau0/periods/avg-steps: ") + e.what());
    }
    if (workers < 1) {
        throw ConfigError("workers: must be >= 1");
    }
    if (!(sector_cutoff >= 0.0 && sector_cutoff < 1e-3)) {
        throw ConfigError("sector-cutoff: must lie in [0, 1e-3)");
    }
    if (!(t_ev > 0.0)) {
        throw ConfigError("t-ev: must be > 0");
    }
    if (samples < 2) {
        throw ConfigError("samples: must be >= 2");
    }
    if (!(verify_tolerance > 0.0)) {
        throw ConfigError("verify-tolerance: must be > 0");
    }
    if (output_dir.empty()) {
        throw ConfigError("out: output directory must not be empty");
    }
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = std::string(mqnmr::to_string(experiment));
    j["n_spins"] = n_spins;
    j["coupling"] = coupling;
    j["p"] = p;
    j["tau_grid"] = tau_grid.to_string();
    j["t_grid"] = t_grid.to_string();
    j["tau"] = tau;
    j["j_min"] = j_min;
    j["tau0"] = window.tau0;
    j["periods"] = window.periods;
    j["avg_steps"] = window.steps;
    j["mixing"] = std::string(mqnmr::to_string(mixing));
    j["output_dir"] = output_dir;
    j["workers"] = workers;
    j["sector_cutoff"] = sector_cutoff;
    j["t_ev"] = t_ev;
    j["samples"] = samples;
    j["emit_spectrum"] = emit_spectrum;
    j["verify_tolerance"] = verify_tolerance;
    return j.dump(2);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t from = 0;
    for (;;) {
        const auto comma = text.find(',', from);
        out.push_back(trim(text.substr(from, comma == std::string_view::npos ? text.npos : comma - from)));
        if (comma == std::string_view::npos) {
            return out;
        }
        from = comma + 1;
    }
}

int parse_int(std::string_view text, std::string_view field) {
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(std::string(field) + ": cannot parse '" + std::string(text) + "' as an integer");
    }
    return value;
}

bool parse_bool(std::string_view text, std::string_view field) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ConfigError(std::string(field) + ": expected true or false, got '" + std::string(text) + "'");
}

Stage parse_stage(std::string_view text) {
    if (text == "all") {
        return Stage::all;
    }
    if (text == "simulate") {
        return Stage::simulate;
    }
    if (text == "decay-times") {
        return Stage::decay_times;
    }
    if (text == "clusters") {
        return Stage::clusters;
    }
    throw ConfigError("stage: expected all, simulate, decay-times or clusters, got '" + std::string(text) + "'");
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "experiment") {
        config.experiment = parse_experiment(value);
    } else if (key == "stage") {
        config.stage = parse_stage(value);
    } else if (key == "n") {
        config.n_spins.clear();
        for (auto item : split_list(value)) {
            config.n_spins.push_back(parse_int(item, key));
        }
    } else if (key == "coupling") {
        config.coupling = parse_double(value, key);
    } else if (key == "p") {
        config.p.clear();
        for (auto item : split_list(value)) {
            config.p.push_back(parse_double(item, key));
        }
    } else if (key == "tau-grid") {
        config.tau_grid = Grid::parse(value, key);
    } else if (key == "t-grid") {
        config.t_grid = Grid::parse(value, key);
    } else if (key == "tau") {
        config.tau = parse_double(value, key);
    } else if (key == "j-min") {
        config.j_min = parse_double(value, key);
    } else if (key == "tau0") {
        config.window.tau0 = parse_double(value, key);
    } else if (key == "periods") {
        config.window.periods = parse_double(value, key);
    } else if (key == "avg-steps") {
        config.window.steps = parse_int(value, key);
    } else if (key == "mixing") {
        try {
            config.mixing = parse_mixing(value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("mixing: ") + e.what());
        }
    } else if (key == "out") {
        config.output_dir = std::string(value);
    } else if (key == "workers") {
        config.workers = parse_int(value, key);
    } else if (key == "sector-cutoff") {
        config.sector_cutoff = parse_double(value, key);
    } else if (key == "t-ev") {
        config.t_ev = parse_double(value, key);
    } else if (key == "samples") {
        config.samples = parse_int(value, key);
    } else if (key == "spectrum") {
        config.emit_spectrum = parse_bool(value, key);
    } else if (key == "verify-tolerance") {
        config.verify_tolerance = parse_double(value, key);
    } else {
        throw ConfigError("unknown setting '" + std::string(key) + "'");
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) {
            text = text.substr(0, hash);
        }
        text = trim(text);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config: line " + std::to_string(number) + " of '" + path +
                              "' is not of the form key = value");
        }
        apply_setting(config, trim(text.substr(0, eq)), text.substr(eq + 1));
    }
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    try {
        config.validate();
        Staging staging{fs::path(config.output_dir)};
        bool numerical_ok = true;
        switch (config.experiment) {
            case Experiment::standard:
                run_standard(config, staging, log);
                break;
            case Experiment::perturbed:
                run_perturbed(config, staging, log);
                break;
            case Experiment::verify:
                numerical_ok = run_verify(config, staging, log);
                break;
            case Experiment::conservation:
                run_conservation(config, staging, log);
                break;
        }
        if (!numerical_ok) {
            err << "error: block pipeline disagrees with the full-space oracle" << std::endl;
            return kExitNumerical;
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        {
            nlohmann::ordered_json meta;
            meta["tool"] = "mqnmr";
            meta["version"] = MQNMR_VERSION;
            meta["config"] = nlohmann::ordered_json::parse(config.to_json());
            meta["wall_time_seconds"] = wall;
            std::ofstream out(staging.file("run_meta.json"), std::ios::binary);
            out << meta.dump(2) << '\n';
        }
        for (const auto& name : staging.commit()) {
            log << "wrote " << (fs::path(config.output_dir) / name).string() << std::endl;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << std::endl;
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: out: " << e.what() << std::endl;
        return kExitConfig;
    }
}

}  // namespace mqnmr
