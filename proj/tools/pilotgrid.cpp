// Command-line workbench: pattern metrics tables, single-point link
// simulations, full sweeps, and noise-free error floors.

#include "pilotgrid/pilotgrid.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace pilotgrid;

std::vector<PatternKind> parse_kind_list(const std::string& csv) {
    std::vector<PatternKind> kinds;
    for (const std::string& item : detail::split(csv, ',')) {
        kinds.push_back(parse_pattern_kind(item));
    }
    return kinds;
}

std::vector<double> parse_snr_list(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& item : detail::split(csv, ',')) {
        out.push_back(parse_double(item));
    }
    return out;
}

const std::vector<PatternKind> all_kinds = {
    PatternKind::Block,         PatternKind::Comb,
    PatternKind::Rectangular,   PatternKind::Hexagonal,
    PatternKind::Parallelogram, PatternKind::Diamond,
    PatternKind::Cell,
};

int cmd_metrics(const std::string& kinds_csv, double density, int resolution,
                const std::string& out_dir) {
    const std::vector<PatternKind> kinds =
        kinds_csv.empty() ? all_kinds : parse_kind_list(kinds_csv);
    const auto rows = metrics_table(kinds, density, {}, resolution);

    std::printf("%-14s %10s %10s %10s %10s\n", "kind", "D_M", "D_E", "d_t",
                "d_f");
    for (const auto& [kind, m] : rows) {
        std::printf("%-14s %10.5f %10.5f %10.5f %10.5f\n", to_string(kind),
                    m.d_max, m.d_avg, m.d_t, m.d_f);
    }
    std::printf("density %.6g (regularized units), resolution %d\n", density,
                resolution);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / "metrics.csv";
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        write_metrics_csv(f, rows, density);
        std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
}

void export_patterns(const SweepContext& ctx, const std::string& dir) {
    for (const auto& [kind, pattern] : ctx.patterns) {
        const auto path = std::filesystem::path(dir) /
                          (std::string("pattern_") + to_string(kind) + ".txt");
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        write_pattern(f, pattern);
    }
}

void print_rows(const ExperimentResult& result) {
    std::printf("%-14s %-17s %7s %12s %12s %12s %12s\n", "pattern", "method",
                "snr_db", "ber_total", "ber_floor", "ber_noise", "mse");
    for (const PointResult& r : result.rows) {
        std::printf("%-14s %-17s %7.4g %12.5g %12.5g %12.5g %12.5g%s\n",
                    r.pattern.c_str(), r.method.c_str(), r.snr_db, r.ber_total,
                    r.ber_floor, r.ber_noise, r.mse,
                    r.low_confidence ? "  (low confidence)" : "");
    }
}

int run_and_write(ExperimentConfig cfg, const std::string& out_override) {
    if (!out_override.empty()) cfg.out_dir = out_override;
    for (const std::string& w : cfg.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    const SweepContext ctx = SweepContext::prepare(cfg);
    for (const std::string& n : ctx.notices) {
        std::fprintf(stderr, "notice: %s\n", n.c_str());
    }
    const ExperimentResult result = run_experiment(cfg);
    print_rows(result);
    write_results(result, cfg.out_dir);
    export_patterns(ctx, cfg.out_dir);
    std::printf("wrote results to %s\n", cfg.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pilot pattern and channel estimation workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir, pattern_name, method_name, snr_csv,
        kinds_csv;
    int seeds = 0;
    int jobs = 0;
    int resolution = 256;
    double density = 4.0 / (3.0 * std::sqrt(3.0));

    auto* metrics = app.add_subcommand(
        "metrics", "distance criteria table for the pattern family");
    metrics->add_option("--kinds", kinds_csv, "comma-separated pattern kinds");
    metrics->add_option("--density", density,
                        "pilots per unit regularized area");
    metrics->add_option("--resolution", resolution,
                        "samples per lattice spacing");
    metrics->add_option("--out", out_dir, "directory for metrics.csv");

    auto* simulate = app.add_subcommand(
        "simulate", "one pattern/method pair over an SNR list");
    simulate->add_option("--config", config_path, "experiment config file")
        ->required();
    simulate->add_option("--pattern", pattern_name, "pattern kind");
    simulate->add_option("--method", method_name, "interpolation method");
    simulate->add_option("--snr", snr_csv, "comma-separated SNR list in dB");
    simulate->add_option("--seeds", seeds, "repetitions per point");
    simulate->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand(
        "sweep", "full pattern x method x SNR experiment");
    sweep->add_option("--config", config_path, "experiment config file")
        ->required();
    sweep->add_option("--seeds", seeds, "repetitions per point");
    sweep->add_option("--jobs", jobs, "worker threads");
    sweep->add_option("--out", out_dir, "output directory");

    auto* floor = app.add_subcommand(
        "floor", "noise-free BER floor per pattern/method pair");
    floor->add_option("--config", config_path, "experiment config file")
        ->required();
    floor->add_option("--pattern", pattern_name, "pattern kind");
    floor->add_option("--method", method_name, "interpolation method");
    floor->add_option("--seeds", seeds, "repetitions");
    floor->add_option("--out", out_dir, "directory for floors.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (metrics->parsed()) {
            return cmd_metrics(kinds_csv, density, resolution, out_dir);
        }

        pilotgrid::ExperimentConfig cfg = pilotgrid::load_config(config_path);
        if (seeds > 0) cfg.seeds = seeds;
        if (jobs > 0) cfg.jobs = jobs;

        if (simulate->parsed()) {
            if (!pattern_name.empty()) {
                cfg.patterns = {pilotgrid::parse_pattern_kind(pattern_name)};
            }
            if (!method_name.empty()) {
                cfg.methods = {pilotgrid::parse_method(method_name)};
            }
            if (!pattern_name.empty() && !method_name.empty() &&
                !pilotgrid::method_compatible(cfg.patterns[0], cfg.methods[0])) {
                throw pilotgrid::ConfigError(
                    std::string("method '") + method_name +
                    "' is incompatible with pattern '" + pattern_name + "'");
            }
            if (!snr_csv.empty()) cfg.snr_db = parse_snr_list(snr_csv);
            cfg.validate();
            return run_and_write(cfg, out_dir);
        }
        if (sweep->parsed()) {
            return run_and_write(cfg, out_dir);
        }
        if (floor->parsed()) {
            std::vector<pilotgrid::PatternKind> kinds =
                pattern_name.empty()
                    ? cfg.patterns
                    : std::vector<pilotgrid::PatternKind>{
                          pilotgrid::parse_pattern_kind(pattern_name)};
            std::vector<pilotgrid::InterpMethod> methods =
                method_name.empty()
                    ? cfg.methods
                    : std::vector<pilotgrid::InterpMethod>{
                          pilotgrid::parse_method(method_name)};
            if (kinds.size() == 1 && methods.size() == 1 &&
                !pilotgrid::method_compatible(kinds[0], methods[0])) {
                throw pilotgrid::ConfigError(
                    std::string("method '") + pilotgrid::to_string(methods[0]) +
                    "' is incompatible with pattern '" +
                    pilotgrid::to_string(kinds[0]) + "'");
            }
            std::printf("%-14s %-17s %12s\n", "pattern", "method", "ber_floor");
            std::ostringstream csv;
            csv << "pattern,method,ber_floor\n";
            for (pilotgrid::PatternKind kind : kinds) {
                for (pilotgrid::InterpMethod method : methods) {
                    if (!pilotgrid::method_compatible(kind, method)) continue;
                    const double f = pilotgrid::ber_floor(cfg, kind, method);
                    std::printf("%-14s %-17s %12.5g\n",
                                pilotgrid::to_string(kind),
                                pilotgrid::to_string(method), f);
                    csv << pilotgrid::to_string(kind) << ","
                        << pilotgrid::to_string(method) << ","
                        << pilotgrid::format_double(f) << "\n";
                }
            }
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                const auto path =
                    std::filesystem::path(out_dir) / "floors.csv";
                std::ofstream f(path);
                if (!f) {
                    throw std::runtime_error("cannot write " + path.string());
                }
                f << csv.str();
                std::printf("wrote %s\n", path.string().c_str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
