#pragma once

#include "pilotgrid/grid.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pilotgrid {

struct ChannelTap {
    double delay_samples = 0.0;
    double power = 1.0;
};

/// Awgn keeps every tap at its deterministic amplitude, Static draws one
/// complex normal gain per tap and realization, Jakes adds classical
/// Doppler time variation via a sum of sinusoids.
enum class FadingModel { Awgn, Static, Jakes };

inline const char* to_string(FadingModel f) {
    switch (f) {
        case FadingModel::Awgn: return "awgn";
        case FadingModel::Static: return "static";
        case FadingModel::Jakes: return "jakes";
    }
    return "?";
}

inline FadingModel parse_fading(const std::string& name) {
    if (name == "awgn") return FadingModel::Awgn;
    if (name == "static") return FadingModel::Static;
    if (name == "jakes") return FadingModel::Jakes;
    throw ConfigError("unknown fading model: '" + name + "'");
}

/// Wide-sense stationary tapped delay line. doppler_norm is the maximum
/// Doppler shift normalized by the OFDM symbol time, f_max * T_sym.
struct ChannelSpec {
    double doppler_norm = 0.0;
    FadingModel fading = FadingModel::Static;
    std::vector<ChannelTap> taps{{0.0, 1.0}};

    double tau_max() const {
        double m = 0.0;
        for (const auto& t : taps) m = std::max(m, t.delay_samples);
        return m;
    }

    double total_power() const {
        double s = 0.0;
        for (const auto& t : taps) s += t.power;
        return s;
    }

    /// Expected across-frequency variance of the response of one
    /// realization: the power carried by nonzero-delay taps.
    double freq_response_variance() const {
        double s = 0.0;
        for (const auto& t : taps) {
            if (t.delay_samples > 0.0) s += t.power;
        }
        return s;
    }

    void validate() const {
        if (taps.empty()) throw ConfigError("channel: needs at least one tap");
        for (const auto& t : taps) {
            if (t.power < 0.0 || !std::isfinite(t.power)) {
                throw ConfigError("channel: tap powers must be finite and >= 0");
            }
            if (t.delay_samples < 0.0 || !std::isfinite(t.delay_samples)) {
                throw ConfigError("channel: tap delays must be finite and >= 0");
            }
        }
        if (std::abs(total_power() - 1.0) > 1e-9) {
            throw ConfigError("channel: tap powers must sum to 1");
        }
        if (doppler_norm < 0.0 || !std::isfinite(doppler_norm)) {
            throw ConfigError("channel: doppler_norm must be finite and >= 0");
        }
        if (fading == FadingModel::Jakes && doppler_norm == 0.0) {
            throw ConfigError("channel: jakes fading needs doppler_norm > 0");
        }
    }

    /// Validation against a frame: delays must stay inside the cyclic
    /// prefix so the per-subcarrier multiplicative model holds.
    void validate(const OfdmGridSpec& frame) const {
        validate();
        if (tau_max() >= frame.n_cp) {
            throw ConfigError("channel: maximum delay must stay below the cyclic prefix");
        }
    }

    static ChannelSpec single_tap(FadingModel fading = FadingModel::Static,
                                  double doppler_norm = 0.0) {
        ChannelSpec s;
        s.fading = fading;
        s.doppler_norm = doppler_norm;
        s.taps = {{0.0, 1.0}};
        return s;
    }

    /// Exponential power delay profile over integer delays
    /// 0..n_taps-1 with decay constant `decay_samples`, normalized to
    /// unit total power.
    static ChannelSpec exponential_pdp(int n_taps, double decay_samples,
                                       FadingModel fading, double doppler_norm) {
        if (n_taps < 1) throw ConfigError("channel: n_taps must be >= 1");
        if (!(decay_samples > 0.0)) {
            throw ConfigError("channel: decay constant must be positive");
        }
        ChannelSpec s;
        s.fading = fading;
        s.doppler_norm = doppler_norm;
        s.taps.clear();
        double total = 0.0;
        for (int l = 0; l < n_taps; ++l) {
            const double p = std::exp(-l / decay_samples);
            s.taps.push_back({static_cast<double>(l), p});
            total += p;
        }
        for (auto& t : s.taps) t.power /= total;
        return s;
    }
};

/// Weighted fourth moment sum(w x^4) / sum(w) of a discrete profile.
inline double fourth_moment(std::span<const double> coords,
                            std::span<const double> weights) {
    if (coords.size() != weights.size() || coords.empty()) {
        throw std::invalid_argument(
            "fourth_moment: coords and weights must be equal-length and nonempty");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (weights[i] < 0.0 || !std::isfinite(weights[i]) ||
            !std::isfinite(coords[i])) {
            throw std::invalid_argument(
                "fourth_moment: weights must be finite and >= 0");
        }
        const double x2 = coords[i] * coords[i];
        num += weights[i] * x2 * x2;
        den += weights[i];
    }
    if (den <= 0.0) {
        throw std::invalid_argument("fourth_moment: total weight must be positive");
    }
    return num / den;
}

/// Fourth moment of the channel variation per symbol: the classical
/// Doppler spectrum on [-f, f] has E[nu^4] = 3 f^4 / 8.
inline double doppler_fourth_moment(const ChannelSpec& spec) {
    if (spec.fading != FadingModel::Jakes) return 0.0;
    const double f = spec.doppler_norm;
    return 0.375 * f * f * f * f;
}

/// Fourth moment of the variation per subcarrier: tap delay tau maps to
/// the normalized frequency tau / n_fft cycles per subcarrier.
inline double delay_fourth_moment(const ChannelSpec& spec,
                                  const OfdmGridSpec& frame) {
    std::vector<double> coords, weights;
    coords.reserve(spec.taps.size());
    weights.reserve(spec.taps.size());
    for (const auto& t : spec.taps) {
        coords.push_back(t.delay_samples / frame.n_fft);
        weights.push_back(t.power);
    }
    return fourth_moment(coords, weights);
}

inline Eq2Report eq2_validate(const ChannelSpec& channel,
                              const OfdmGridSpec& frame, double d_t_symbols,
                              double d_f_subcarriers) {
    return eq2_validate_raw(channel.doppler_norm, channel.tau_max(), frame,
                            d_t_symbols, d_f_subcarriers);
}

struct ChannelRealization {
    ComplexGrid h;
    std::uint64_t seed = 0;
};

namespace detail {

constexpr std::uint64_t seed_tag_tap = 0x7461700000000000ull; // "tap"
constexpr int jakes_oscillators = 64;

// One tap's complex gain trajectory over the frame's symbols.
inline void tap_gains(const ChannelSpec& spec, std::size_t tap_index,
                      int n_symbols, std::uint64_t seed,
                      std::vector<cplx>& out) {
    const ChannelTap& tap = spec.taps[tap_index];
    out.assign(static_cast<std::size_t>(n_symbols), cplx{0.0, 0.0});
    const double amp = std::sqrt(tap.power);
    switch (spec.fading) {
        case FadingModel::Awgn: {
            for (auto& g : out) g = amp;
            break;
        }
        case FadingModel::Static: {
            Rng rng(derive_seed(seed, seed_tag_tap, tap_index));
            const cplx g = amp * rng.cgauss_unit();
            for (auto& v : out) v = g;
            break;
        }
        case FadingModel::Jakes: {
            Rng rng(derive_seed(seed, seed_tag_tap, tap_index));
            constexpr int n_osc = jakes_oscillators;
            const double scale = amp / std::sqrt(static_cast<double>(n_osc));
            constexpr double two_pi = 6.283185307179586476925286766559;
            // each ray: phasor rotating at 2 pi f cos(alpha) per symbol
            std::vector<cplx> phasor(n_osc);
            std::vector<cplx> step(n_osc);
            for (int o = 0; o < n_osc; ++o) {
                const double alpha = two_pi * rng.uniform();
                const double psi = two_pi * rng.uniform();
                const double w = two_pi * spec.doppler_norm * std::cos(alpha);
                phasor[o] = std::polar(1.0, psi);
                step[o] = std::polar(1.0, w);
            }
            for (int n = 0; n < n_symbols; ++n) {
                cplx acc{0.0, 0.0};
                for (int o = 0; o < n_osc; ++o) {
                    acc += phasor[o];
                    phasor[o] *= step[o];
                }
                out[static_cast<std::size_t>(n)] = scale * acc;
            }
            break;
        }
    }
}

} // namespace detail

/// Frequency response over the whole frame,
/// h[n][k] = sum_l h_l[n] exp(-j 2 pi k tau_l / n_fft).
inline ChannelRealization synthesize_channel(const ChannelSpec& spec,
                                             const OfdmGridSpec& frame,
                                             std::uint64_t seed) {
    spec.validate(frame);
    frame.validate();

    ChannelRealization real;
    real.seed = seed;
    real.h = ComplexGrid(frame.n_symbols, frame.n_subcarriers);

    constexpr double two_pi = 6.283185307179586476925286766559;
    std::vector<cplx> gains;
    std::vector<cplx> phase(static_cast<std::size_t>(frame.n_subcarriers));
    for (std::size_t l = 0; l < spec.taps.size(); ++l) {
        detail::tap_gains(spec, l, frame.n_symbols, seed, gains);
        const double nu = spec.taps[l].delay_samples / frame.n_fft;
        for (int k = 0; k < frame.n_subcarriers; ++k) {
            phase[static_cast<std::size_t>(k)] = std::polar(1.0, -two_pi * nu * k);
        }
        for (int n = 0; n < frame.n_symbols; ++n) {
            const cplx g = gains[static_cast<std::size_t>(n)];
            cplx* row = &real.h.at(n, 0);
            for (int k = 0; k < frame.n_subcarriers; ++k) {
                row[k] += g * phase[static_cast<std::size_t>(k)];
            }
        }
    }
    return real;
}

/// Unit-variance complex noise grid (E|w|^2 = 1 per cell).
inline ComplexGrid make_unit_noise(const OfdmGridSpec& frame,
                                   std::uint64_t seed) {
    ComplexGrid w(frame.n_symbols, frame.n_subcarriers);
    Rng rng(seed);
    for (auto& v : w.v) v = rng.cgauss_unit();
    return w;
}

struct AwgnResult {
    ComplexGrid y;
    double noise_variance = 0.0;
};

/// Adds complex white noise at the requested SNR. es is the average
/// transmitted symbol energy; snr_db may be +infinity for the noiseless
/// case, in which case the grid is returned unchanged.
inline AwgnResult apply_awgn(const ComplexGrid& grid, double snr_db, double es,
                             std::uint64_t seed) {
    if (!(es > 0.0) || !std::isfinite(es)) {
        throw std::invalid_argument("apply_awgn: es must be finite and positive");
    }
    AwgnResult r;
    r.y = grid;
    if (std::isinf(snr_db) && snr_db > 0.0) {
        r.noise_variance = 0.0;
        return r;
    }
    if (!std::isfinite(snr_db)) {
        throw std::invalid_argument("apply_awgn: snr_db must be finite or +inf");
    }
    r.noise_variance = es * std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(r.noise_variance);
    Rng rng(seed);
    for (auto& v : r.y.v) v += sigma * rng.cgauss_unit();
    return r;
}

/// Channel grid text export: "n_symbols,n_subcarriers,seed" then one
/// "re im" line per cell in row-major order.
inline void write_grid(std::ostream& os, const ChannelRealization& real) {
    os << real.h.n_symbols << "," << real.h.n_subcarriers << "," << real.seed
       << "\n";
    for (const cplx& v : real.h.v) {
        os << format_double(v.real()) << " " << format_double(v.imag()) << "\n";
    }
}

inline ChannelRealization read_grid(std::istream& is) {
    ChannelRealization real;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("grid file: missing header");
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ConfigError("grid file: bad header '" + line + "'");
    }
    const int ns = static_cast<int>(parse_int(line.substr(0, c1)));
    const int nk = static_cast<int>(parse_int(line.substr(c1 + 1, c2 - c1 - 1)));
    real.seed = static_cast<std::uint64_t>(parse_int(line.substr(c2 + 1)));
    if (ns < 1 || nk < 1) throw ConfigError("grid file: bad dimensions");
    real.h = ComplexGrid(ns, nk);
    for (auto& v : real.h.v) {
        if (!std::getline(is, line)) {
            throw ConfigError("grid file: truncated cell data");
        }
        const auto sp = line.find(' ');
        if (sp == std::string::npos) {
            throw ConfigError("grid file: bad cell line '" + line + "'");
        }
        v = {parse_double(line.substr(0, sp)), parse_double(line.substr(sp + 1))};
    }
    return real;
}

} // namespace pilotgrid
