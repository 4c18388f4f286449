#pragma once

#include "pilotgrid/channel.hpp"
#include "pilotgrid/modem.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace pilotgrid {

namespace seeds {

constexpr std::uint64_t tag_channel = 0x6368616eull; // "chan"
constexpr std::uint64_t tag_bits = 0x62697473ull;    // "bits"
constexpr std::uint64_t tag_noise = 0x6e6f6973ull;   // "nois"
constexpr std::uint64_t tag_pilot = 0x70696c74ull;   // "pilt"

inline std::uint64_t channel(std::uint64_t master, int rep) {
    return derive_seed(master, tag_channel, static_cast<std::uint64_t>(rep));
}
inline std::uint64_t bits(std::uint64_t master, int rep) {
    return derive_seed(master, tag_bits, static_cast<std::uint64_t>(rep));
}
inline std::uint64_t noise(std::uint64_t master, int rep) {
    return derive_seed(master, tag_noise, static_cast<std::uint64_t>(rep));
}
inline std::uint64_t pilot(std::uint64_t master) {
    return derive_seed(master, tag_pilot, 0);
}

} // namespace seeds

/// Everything one sweep needs. The channel, payload and noise streams
/// are derived per repetition from master_seed, so results depend only
/// on the configuration, never on scheduling.
struct ExperimentConfig {
    OfdmGridSpec frame;

    FadingModel fading = FadingModel::Jakes;
    double doppler_norm = 0.02455;
    int n_taps = 16;
    double decay_samples = 0.8776;
    std::vector<ChannelTap> custom_taps; // overrides the exponential profile

    std::string modulation = "qpsk";
    double density = 0.057; // fraction of frame cells carrying pilots
    std::vector<PatternKind> patterns;
    std::vector<InterpMethod> methods;
    std::vector<double> snr_db;
    int seeds = 50;
    std::uint64_t master_seed = 1;
    std::string out_dir = "results";
    int jobs = 1;

    bool scale_auto = true;
    RegularizedScale scale_explicit;

    std::vector<std::string> warnings;

    ChannelSpec channel() const {
        ChannelSpec s;
        s.fading = fading;
        s.doppler_norm = fading == FadingModel::Jakes ? doppler_norm : 0.0;
        if (!custom_taps.empty()) {
            s.taps = custom_taps;
            double total = 0.0;
            for (const auto& t : s.taps) total += t.power;
            if (!(total > 0.0)) {
                throw ConfigError("channel: tap powers must have positive sum");
            }
            for (auto& t : s.taps) t.power /= total;
        } else if (n_taps == 1) {
            s.taps = {{0.0, 1.0}};
        } else {
            s = ChannelSpec::exponential_pdp(n_taps, decay_samples, s.fading,
                                             s.doppler_norm);
        }
        return s;
    }

    /// Regularization from the channel moments; a vanishing moment
    /// (no variation along that axis) leaves the axis unscaled.
    RegularizedScale regularized_scale() const {
        if (!scale_auto) return scale_explicit;
        const ChannelSpec ch = channel();
        const double wt = doppler_fourth_moment(ch);
        const double wf = delay_fourth_moment(ch, frame);
        RegularizedScale s;
        s.alpha_t = wt > 0.0 ? std::pow(wt, 0.25) : 1.0;
        s.alpha_f = wf > 0.0 ? std::pow(wf, 0.25) : 1.0;
        return s;
    }

    void validate() const {
        frame.validate();
        channel().validate(frame);
        Constellation::by_name(modulation);
        if (!(density > 0.0) || density > 0.5) {
            throw ConfigError("density must lie in (0, 0.5]");
        }
        if (patterns.empty()) throw ConfigError("no patterns configured");
        if (methods.empty()) throw ConfigError("no methods configured");
        if (snr_db.empty()) throw ConfigError("no snr points configured");
        for (double s : snr_db) {
            if (!(s >= -10.0 && s <= 60.0)) {
                throw ConfigError("snr_db entries must lie in [-10, 60]");
            }
        }
        if (seeds < 1) throw ConfigError("seeds must be >= 1");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        if (!scale_auto &&
            (!(scale_explicit.alpha_t > 0.0) || !(scale_explicit.alpha_f > 0.0))) {
            throw ConfigError("explicit scale factors must be positive");
        }
    }
};

/// The stock configuration: 128 subcarriers at 125 kHz, FFT 128, CP 16,
/// 64 symbols per frame, QPSK at 5.7% pilot density, 16-tap exponential
/// Rayleigh channel with classical Doppler 0.02455, SNR 0..25 dB.
inline ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.patterns = {PatternKind::Cell, PatternKind::Comb,
                    PatternKind::Rectangular, PatternKind::Parallelogram};
    cfg.methods = {InterpMethod::Distance, InterpMethod::LinearFrequency,
                   InterpMethod::Bilinear, InterpMethod::AxisLinear};
    cfg.snr_db = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    return cfg;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(s.substr(start)));
            break;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

} // namespace detail

/// Key = value configuration text. '#' starts a comment; list values
/// are comma-separated. Unknown keys are errors so typos cannot
/// silently fall back to defaults.
inline ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg = default_config();
    cfg.patterns.clear();
    cfg.methods.clear();
    cfg.snr_db.clear();

    bool saw_modulation = false, saw_density = false, saw_patterns = false,
         saw_methods = false, saw_snr = false;

    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (value.empty()) {
            throw ConfigError("config: empty value for '" + key + "'");
        }

        try {
            if (key == "frame.n_subcarriers") {
                cfg.frame.n_subcarriers = static_cast<int>(parse_int(value));
            } else if (key == "frame.n_symbols") {
                cfg.frame.n_symbols = static_cast<int>(parse_int(value));
            } else if (key == "frame.delta_f_hz") {
                cfg.frame.delta_f_hz = parse_double(value);
            } else if (key == "frame.n_fft") {
                cfg.frame.n_fft = static_cast<int>(parse_int(value));
            } else if (key == "frame.n_cp") {
                cfg.frame.n_cp = static_cast<int>(parse_int(value));
            } else if (key == "frame.n_tx") {
                cfg.frame.n_tx = static_cast<int>(parse_int(value));
            } else if (key == "frame.t_spl_s") {
                cfg.frame.t_spl_s = parse_double(value);
            } else if (key == "channel.fading") {
                cfg.fading = parse_fading(value);
            } else if (key == "channel.doppler_norm") {
                cfg.doppler_norm = parse_double(value);
            } else if (key == "channel.n_taps") {
                cfg.n_taps = static_cast<int>(parse_int(value));
            } else if (key == "channel.decay_samples") {
                cfg.decay_samples = parse_double(value);
            } else if (key == "channel.taps") {
                cfg.custom_taps.clear();
                for (const std::string& item : detail::split(value, ',')) {
                    const auto colon = item.find(':');
                    if (colon == std::string::npos) {
                        throw ConfigError(
                            "channel.taps entries must be delay:power");
                    }
                    cfg.custom_taps.push_back(
                        {parse_double(item.substr(0, colon)),
                         parse_double(item.substr(colon + 1))});
                }
            } else if (key == "modulation") {
                cfg.modulation = value;
                saw_modulation = true;
            } else if (key == "density") {
                cfg.density = parse_double(value);
                saw_density = true;
            } else if (key == "patterns") {
                for (const std::string& item : detail::split(value, ',')) {
                    cfg.patterns.push_back(parse_pattern_kind(item));
                }
                saw_patterns = true;
            } else if (key == "methods") {
                for (const std::string& item : detail::split(value, ',')) {
                    cfg.methods.push_back(parse_method(item));
                }
                saw_methods = true;
            } else if (key == "snr_db") {
                for (const std::string& item : detail::split(value, ',')) {
                    cfg.snr_db.push_back(parse_double(item));
                }
                saw_snr = true;
            } else if (key == "seeds") {
                cfg.seeds = static_cast<int>(parse_int(value));
            } else if (key == "master_seed") {
                cfg.master_seed = static_cast<std::uint64_t>(parse_int(value));
            } else if (key == "out") {
                cfg.out_dir = value;
            } else if (key == "jobs") {
                cfg.jobs = static_cast<int>(parse_int(value));
            } else if (key == "scale") {
                if (value == "auto") {
                    cfg.scale_auto = true;
                } else {
                    const auto parts = detail::split(value, ',');
                    if (parts.size() != 2) {
                        throw ConfigError(
                            "scale must be 'auto' or 'alpha_t,alpha_f'");
                    }
                    cfg.scale_auto = false;
                    cfg.scale_explicit.alpha_t = parse_double(parts[0]);
                    cfg.scale_explicit.alpha_f = parse_double(parts[1]);
                }
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " +
                              e.what());
        }
    }

    if (!saw_modulation) throw ConfigError("config: missing field 'modulation'");
    if (!saw_density) throw ConfigError("config: missing field 'density'");
    if (!saw_patterns) throw ConfigError("config: missing field 'patterns'");
    if (!saw_methods) throw ConfigError("config: missing field 'methods'");
    if (!saw_snr) throw ConfigError("config: missing field 'snr_db'");

    std::sort(cfg.snr_db.begin(), cfg.snr_db.end());
    cfg.snr_db.erase(std::unique(cfg.snr_db.begin(), cfg.snr_db.end()),
                     cfg.snr_db.end());

    cfg.validate();

    // placement-limit check per pattern: a violation is worth a warning
    // but the experiment still runs (the whole point may be to show the
    // resulting floor)
    const RegularizedScale sc = cfg.regularized_scale();
    const ChannelSpec ch = cfg.channel();
    for (PatternKind kind : cfg.patterns) {
        const double reg_density =
            density_for_cell_fraction(kind, cfg.density, sc);
        const PilotPattern proto = make_pattern(kind, reg_density, sc);
        const PatternMetrics pm = pattern_metrics(proto, 128);
        const double d_t_sym = pm.d_t > 0.0 ? pm.d_t / sc.alpha_t : 1.0;
        const double d_f_sub = pm.d_f > 0.0 ? pm.d_f / sc.alpha_f : 1.0;
        const Eq2Report rep = eq2_validate(ch, cfg.frame, d_t_sym, d_f_sub);
        if (!rep.all_ok()) {
            std::ostringstream os;
            os << "pattern '" << to_string(kind)
               << "' violates the placement limits:";
            if (!rep.doppler_ok) {
                os << " doppler product " << format_double(rep.doppler_lhs)
                   << " > 0.5";
            }
            if (!rep.delay_ok) {
                os << " delay product " << format_double(rep.delay_lhs)
                   << " > 1";
            }
            cfg.warnings.push_back(os.str());
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(f);
}

/// Precomputed state shared by every operating point of a sweep:
/// rasterized patterns, interpolation plans, and the per-repetition
/// channel realizations. Read-only during the run, so points can be
/// processed by any number of workers.
struct SweepContext {
    ExperimentConfig cfg;
    Constellation constellation;
    RegularizedScale scale;
    ChannelSpec channel;
    std::vector<ChannelRealization> channels;
    std::map<PatternKind, PilotPattern> patterns;
    std::map<std::pair<PatternKind, InterpMethod>, InterpolationPlan> plans;
    std::vector<std::string> notices;

    static SweepContext prepare(const ExperimentConfig& cfg) {
        cfg.validate();
        SweepContext ctx;
        ctx.cfg = cfg;
        ctx.constellation = Constellation::by_name(cfg.modulation);
        ctx.scale = cfg.regularized_scale();
        ctx.channel = cfg.channel();

        for (PatternKind kind : cfg.patterns) {
            if (ctx.patterns.count(kind)) continue;
            const double reg_density =
                density_for_cell_fraction(kind, cfg.density, ctx.scale);
            ctx.patterns.emplace(
                kind, rasterize(make_pattern(kind, reg_density, ctx.scale),
                                cfg.frame));
        }
        for (PatternKind kind : cfg.patterns) {
            for (InterpMethod method : cfg.methods) {
                if (!method_compatible(kind, method)) {
                    ctx.notices.push_back(
                        std::string("skipped incompatible pair ") +
                        to_string(kind) + " + " + to_string(method));
                    continue;
                }
                const auto key = std::make_pair(kind, method);
                if (ctx.plans.count(key)) continue;
                ctx.plans.emplace(
                    key, InterpolationPlan::build(ctx.patterns.at(kind), method));
            }
        }
        ctx.channels.reserve(static_cast<std::size_t>(cfg.seeds));
        for (int rep = 0; rep < cfg.seeds; ++rep) {
            ctx.channels.push_back(synthesize_channel(
                ctx.channel, cfg.frame,
                seeds::channel(cfg.master_seed, rep)));
        }
        return ctx;
    }
};

/// Per-repetition outcomes of one operating point.
struct RepSeries {
    std::vector<double> ber;
    std::vector<double> mse;
    std::size_t bits_per_rep = 0;

    double total_errors() const {
        double e = 0.0;
        for (double b : ber) e += b * static_cast<double>(bits_per_rep);
        return e;
    }
    double mean_ber() const {
        double s = 0.0;
        for (double b : ber) s += b;
        return ber.empty() ? 0.0 : s / static_cast<double>(ber.size());
    }
    double mean_mse() const {
        double s = 0.0;
        for (double m : mse) s += m;
        return mse.empty() ? 0.0 : s / static_cast<double>(mse.size());
    }
};

/// Runs every repetition of one (pattern, method, snr) point. plan may
/// be null for the perfect-CSI genie. snr_db may be +infinity (the
/// noise-free floor). Noise and payload streams depend only on the
/// repetition index, so points at different SNR share their randomness
/// (paired comparisons).
inline RepSeries run_point(const SweepContext& ctx, PatternKind kind,
                           const InterpolationPlan* plan, double snr_db) {
    const PilotPattern& pattern = ctx.patterns.at(kind);
    const Constellation& c = ctx.constellation;
    const ExperimentConfig& cfg = ctx.cfg;

    const std::size_t cells =
        static_cast<std::size_t>(pattern.n_symbols) * pattern.n_subcarriers;
    const std::size_t n_data = cells - pattern.pilot_cells.size();
    const std::size_t need =
        n_data * static_cast<std::size_t>(c.bits_per_symbol);

    RepSeries series;
    series.bits_per_rep = need;
    series.ber.reserve(static_cast<std::size_t>(cfg.seeds));
    series.mse.reserve(static_cast<std::size_t>(cfg.seeds));

    const bool noiseless = std::isinf(snr_db) && snr_db > 0.0;
    const double sigma =
        noiseless ? 0.0 : std::sqrt(std::pow(10.0, -snr_db / 10.0));

    ComplexGrid y(pattern.n_symbols, pattern.n_subcarriers);
    CirEstimate est(pattern.n_symbols, pattern.n_subcarriers);
    std::vector<cplx> pilot_ls(pattern.pilot_cells.size());

    for (int rep = 0; rep < cfg.seeds; ++rep) {
        const ComplexGrid& h = ctx.channels[static_cast<std::size_t>(rep)].h;
        const std::vector<std::uint8_t> bits =
            random_bits(need, seeds::bits(cfg.master_seed, rep));
        const OfdmFrame frame =
            build_frame(bits, pattern, c, seeds::pilot(cfg.master_seed));

        for (std::size_t i = 0; i < y.v.size(); ++i) {
            y.v[i] = h.v[i] * frame.grid.v[i];
        }
        if (!noiseless) {
            Rng noise(seeds::noise(cfg.master_seed, rep));
            for (auto& v : y.v) v += sigma * noise.cgauss_unit();
        }

        double mse = 0.0;
        if (plan != nullptr) {
            for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
                const PilotCell pc = pattern.pilot_cells[i];
                pilot_ls[i] = y.at(pc.symbol, pc.subcarrier) / frame.pilot_values[i];
            }
            plan->apply(pilot_ls, est);
            for (int n = 0; n < pattern.n_symbols; ++n) {
                for (int k = 0; k < pattern.n_subcarriers; ++k) {
                    if (pattern.find_pilot(n, k) >= 0) continue;
                    mse += std::norm(est.h_hat.at(n, k) - h.at(n, k));
                }
            }
            mse /= static_cast<double>(n_data);
        } else {
            est.h_hat = h;
            std::fill(est.provenance.begin(), est.provenance.end(),
                      Provenance::PilotLs);
        }

        const DemapResult d = equalize_demap(y, est, frame, pattern, c);
        series.ber.push_back(d.ber);
        series.mse.push_back(mse);
    }
    return series;
}

/// Noise-free BER: pure interpolation error.
inline double ber_floor(const ExperimentConfig& cfg, PatternKind kind,
                        InterpMethod method, int seeds_override = 0) {
    ExperimentConfig local = cfg;
    if (seeds_override > 0) local.seeds = seeds_override;
    local.patterns = {kind};
    local.methods = {method};
    const SweepContext ctx = SweepContext::prepare(local);
    const auto& plan = ctx.plans.at({kind, method});
    const RepSeries s = run_point(ctx, kind, &plan,
                                  std::numeric_limits<double>::infinity());
    return s.mean_ber();
}

struct PointResult {
    std::string pattern;
    std::string method; // interpolation method or "perfect-csi"
    double snr_db = 0.0;
    double ber_total = 0.0;
    double ber_floor = 0.0;
    double ber_noise = 0.0;
    double mse = 0.0;
    double ci_halfwidth = 0.0;
    int seeds = 0;
    std::size_t n_bits = 0;
    double n_errors = 0.0;
    bool low_confidence = false;
};

struct ExperimentResult {
    std::vector<PointResult> rows;
    std::vector<std::string> notices;
};

namespace detail {

inline double ci_halfwidth_95(double p, double n_bits) {
    if (n_bits <= 0.0) return 0.0;
    const double v = std::max(p * (1.0 - p), 0.0);
    return 1.96 * std::sqrt(v / n_bits);
}

} // namespace detail

/// Full sweep: every compatible (pattern, method) pair at every SNR,
/// with its noise-free floor and a perfect-CSI genie per pattern.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const SweepContext ctx = SweepContext::prepare(cfg);

    struct Task {
        PatternKind kind;
        std::optional<InterpMethod> method; // nullopt = perfect CSI
        double snr_db; // +inf = floor
    };
    std::vector<Task> tasks;
    std::vector<PatternKind> kinds_in_order;
    for (PatternKind kind : cfg.patterns) {
        if (std::find(kinds_in_order.begin(), kinds_in_order.end(), kind) !=
            kinds_in_order.end()) {
            continue;
        }
        kinds_in_order.push_back(kind);
        for (InterpMethod method : cfg.methods) {
            if (!method_compatible(kind, method)) continue;
            tasks.push_back(
                {kind, method, std::numeric_limits<double>::infinity()});
            for (double snr : cfg.snr_db) tasks.push_back({kind, method, snr});
        }
        for (double snr : cfg.snr_db) tasks.push_back({kind, std::nullopt, snr});
    }

    std::vector<RepSeries> outcomes(tasks.size());
    const int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const Task& t = tasks[i];
            const InterpolationPlan* plan =
                t.method ? &ctx.plans.at({t.kind, *t.method}) : nullptr;
            outcomes[i] = run_point(ctx, t.kind, plan, t.snr_db);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) break;
                const Task& t = tasks[i];
                const InterpolationPlan* plan =
                    t.method ? &ctx.plans.at({t.kind, *t.method}) : nullptr;
                outcomes[i] = run_point(ctx, t.kind, plan, t.snr_db);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // floors indexed by (kind, method) for the subtraction
    std::map<std::pair<PatternKind, InterpMethod>, double> floors;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        if (t.method && std::isinf(t.snr_db)) {
            floors[{t.kind, *t.method}] = outcomes[i].mean_ber();
        }
    }

    ExperimentResult result;
    result.notices = ctx.notices;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Task& t = tasks[i];
        if (std::isinf(t.snr_db)) continue; // floors fold into the rows
        const RepSeries& s = outcomes[i];
        PointResult row;
        row.pattern = to_string(t.kind);
        row.method = t.method ? to_string(*t.method) : "perfect-csi";
        row.snr_db = t.snr_db;
        row.seeds = cfg.seeds;
        row.n_bits = s.bits_per_rep * static_cast<std::size_t>(cfg.seeds);
        row.n_errors = s.total_errors();
        row.ber_total = s.mean_ber();
        row.ber_floor = t.method ? floors.at({t.kind, *t.method}) : 0.0;
        row.ber_noise = std::max(row.ber_total - row.ber_floor, 0.0);
        row.mse = s.mean_mse();
        row.ci_halfwidth = detail::ci_halfwidth_95(
            row.ber_total, static_cast<double>(row.n_bits));
        row.low_confidence = row.n_errors < 100.0;
        result.rows.push_back(std::move(row));
    }
    return result;
}

/// results.csv (exact schema), results_stats.csv (bit counts and
/// low-confidence flags), and per-figure gnuplot column files.
inline void write_results(const ExperimentResult& result,
                          const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "'");

    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(dir) / name);
        if (!f) {
            throw std::runtime_error("cannot write '" + name + "' in '" + dir + "'");
        }
        return f;
    };

    {
        auto f = open("results.csv");
        f << "pattern,method,snr_db,ber_total,ber_floor,ber_noise,mse,"
             "ci_halfwidth,seeds\n";
        for (const PointResult& r : result.rows) {
            f << r.pattern << "," << r.method << "," << format_double(r.snr_db)
              << "," << format_double(r.ber_total) << ","
              << format_double(r.ber_floor) << "," << format_double(r.ber_noise)
              << "," << format_double(r.mse) << ","
              << format_double(r.ci_halfwidth) << "," << r.seeds << "\n";
        }
    }
    {
        auto f = open("results_stats.csv");
        f << "pattern,method,snr_db,n_bits,n_errors,low_confidence\n";
        for (const PointResult& r : result.rows) {
            f << r.pattern << "," << r.method << "," << format_double(r.snr_db)
              << "," << r.n_bits << "," << format_double(r.n_errors) << ","
              << (r.low_confidence ? 1 : 0) << "\n";
        }
    }

    // column files: one block per curve layout, snr ascending
    struct Curve {
        std::string name;
        std::map<double, double> by_snr;
    };
    auto collect = [&](bool use_noise_ber, bool include_perfect,
                       const std::string& only_pattern) {
        std::vector<Curve> curves;
        for (const PointResult& r : result.rows) {
            if (!include_perfect && r.method == "perfect-csi") continue;
            if (!only_pattern.empty() && r.pattern != only_pattern) continue;
            const std::string name = r.pattern + "+" + r.method;
            auto it = std::find_if(curves.begin(), curves.end(),
                                   [&](const Curve& c) { return c.name == name; });
            if (it == curves.end()) {
                curves.push_back({name, {}});
                it = curves.end() - 1;
            }
            it->by_snr[r.snr_db] = use_noise_ber ? r.ber_noise : r.ber_total;
        }
        return curves;
    };
    auto write_curves = [&](const std::string& file, const std::string& what,
                            const std::vector<Curve>& curves) {
        if (curves.empty()) return;
        auto f = open(file);
        f << "# " << what << "\n";
        f << "# column 1: snr_db\n";
        for (std::size_t i = 0; i < curves.size(); ++i) {
            f << "# column " << (i + 2) << ": " << curves[i].name << "\n";
        }
        std::vector<double> snrs;
        for (const auto& [snr, v] : curves.front().by_snr) snrs.push_back(snr);
        for (double snr : snrs) {
            f << format_double(snr);
            for (const Curve& c : curves) {
                const auto it = c.by_snr.find(snr);
                f << " " << format_double(it == c.by_snr.end() ? 0.0 : it->second);
            }
            f << "\n";
        }
    };

    write_curves("ber_noise.dat", "noise-attributable BER (floor subtracted)",
                 collect(true, false, ""));
    write_curves("ber_total.dat", "total BER with perfect-CSI genie",
                 collect(false, true, ""));
    write_curves("rectangular_methods.dat",
                 "method comparison on the rectangular pattern",
                 collect(false, true, "rectangular"));
}

} // namespace pilotgrid
