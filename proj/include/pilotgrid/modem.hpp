#pragma once

#include "pilotgrid/estimator.hpp"

#include <span>
#include <string>
#include <vector>

namespace pilotgrid {

/// Memoryless constellation with Gray (QPSK, 16QAM) or quasi-Gray
/// (rectangular 8QAM) labeling, normalized to unit average energy.
/// labels[i] is the bit group of points[i], MSB first.
struct Constellation {
    std::string name;
    int bits_per_symbol = 0;
    std::vector<cplx> points;
    std::vector<std::uint32_t> labels;
    std::vector<cplx> point_for_label; // indexed by bit group

    double es() const {
        double s = 0.0;
        for (const cplx& p : points) s += std::norm(p);
        return s / static_cast<double>(points.size());
    }

    cplx map_group(std::uint32_t group) const { return point_for_label[group]; }

    std::uint32_t demap_nearest(cplx y) const {
        double best = std::numeric_limits<double>::max();
        std::uint32_t label = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double d = std::norm(y - points[i]);
            if (d < best) {
                best = d;
                label = labels[i];
            }
        }
        return label;
    }

    static Constellation qpsk();
    static Constellation qam8();
    static Constellation qam16();
    static Constellation by_name(const std::string& name);

  private:
    void finalize() {
        point_for_label.assign(std::size_t{1} << bits_per_symbol, cplx{});
        for (std::size_t i = 0; i < points.size(); ++i) {
            point_for_label[labels[i]] = points[i];
        }
    }
    friend Constellation make_constellation(std::string, int,
                                            std::vector<cplx>,
                                            std::vector<std::uint32_t>);
};

inline Constellation make_constellation(std::string name, int bps,
                                        std::vector<cplx> points,
                                        std::vector<std::uint32_t> labels) {
    Constellation c;
    c.name = std::move(name);
    c.bits_per_symbol = bps;
    c.points = std::move(points);
    c.labels = std::move(labels);
    c.finalize();
    return c;
}

namespace detail {

// Gray-labeled 4-PAM axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
inline double pam4_gray(std::uint32_t two_bits) {
    switch (two_bits) {
        case 0b00: return -3.0;
        case 0b01: return -1.0;
        case 0b11: return 1.0;
        default: return 3.0;
    }
}

} // namespace detail

inline Constellation Constellation::qpsk() {
    std::vector<cplx> pts;
    std::vector<std::uint32_t> labs;
    const double a = 1.0 / std::sqrt(2.0);
    for (std::uint32_t g = 0; g < 4; ++g) {
        const double i = 1.0 - 2.0 * ((g >> 1) & 1u);
        const double q = 1.0 - 2.0 * (g & 1u);
        pts.push_back({a * i, a * q});
        labs.push_back(g);
    }
    return make_constellation("qpsk", 2, std::move(pts), std::move(labs));
}

inline Constellation Constellation::qam16() {
    std::vector<cplx> pts;
    std::vector<std::uint32_t> labs;
    const double d = 1.0 / std::sqrt(10.0);
    for (std::uint32_t g = 0; g < 16; ++g) {
        const double i = detail::pam4_gray((g >> 2) & 3u);
        const double q = detail::pam4_gray(g & 3u);
        pts.push_back({d * i, d * q});
        labs.push_back(g);
    }
    return make_constellation("16qam", 4, std::move(pts), std::move(labs));
}

/// Rectangular 4x2 grid: two Gray bits on the in-phase axis, one on the
/// quadrature axis. Gray within each axis, quasi-Gray overall.
inline Constellation Constellation::qam8() {
    std::vector<cplx> pts;
    std::vector<std::uint32_t> labs;
    const double d = 1.0 / std::sqrt(6.0);
    for (std::uint32_t g = 0; g < 8; ++g) {
        const double i = detail::pam4_gray((g >> 1) & 3u);
        const double q = 1.0 - 2.0 * (g & 1u);
        pts.push_back({d * i, d * q});
        labs.push_back(g);
    }
    return make_constellation("8qam", 3, std::move(pts), std::move(labs));
}

inline Constellation Constellation::by_name(const std::string& name) {
    if (name == "qpsk") return qpsk();
    if (name == "8qam") return qam8();
    if (name == "16qam") return qam16();
    throw ConfigError("unknown modulation: '" + name + "'");
}

/// Maps bits (values 0/1, MSB of each group first) onto symbols.
inline std::vector<cplx> modulate(std::span<const std::uint8_t> bits,
                                  const Constellation& c) {
    if (bits.size() % c.bits_per_symbol != 0) {
        throw std::invalid_argument(
            "modulate: bit count must be a multiple of bits per symbol");
    }
    std::vector<cplx> out;
    out.reserve(bits.size() / c.bits_per_symbol);
    for (std::size_t i = 0; i < bits.size(); i += c.bits_per_symbol) {
        std::uint32_t g = 0;
        for (int b = 0; b < c.bits_per_symbol; ++b) {
            g = (g << 1) | (bits[i + b] & 1u);
        }
        out.push_back(c.map_group(g));
    }
    return out;
}

/// Writes the demapped bit group of one symbol, MSB first.
inline void demap_symbol(cplx y, const Constellation& c, std::uint8_t* out) {
    const std::uint32_t g = c.demap_nearest(y);
    for (int b = 0; b < c.bits_per_symbol; ++b) {
        out[b] = static_cast<std::uint8_t>((g >> (c.bits_per_symbol - 1 - b)) & 1u);
    }
}

inline std::vector<std::uint8_t> random_bits(std::size_t count,
                                             std::uint64_t seed) {
    std::vector<std::uint8_t> bits(count);
    Rng rng(seed);
    std::uint64_t word = 0;
    int avail = 0;
    for (auto& b : bits) {
        if (avail == 0) {
            word = rng.next_u64();
            avail = 64;
        }
        b = static_cast<std::uint8_t>(word & 1u);
        word >>= 1;
        --avail;
    }
    return bits;
}

/// Transmitted frame: pilots at their cells (unit-magnitude QPSK drawn
/// from pilot_seed), payload symbols row-major over the data cells.
struct OfdmFrame {
    ComplexGrid grid;
    std::vector<std::uint8_t> bits;  // payload bits actually carried
    std::vector<cplx> pilot_values;  // parallel to pattern.pilot_cells
    std::size_t n_data_cells = 0;
    double es = 1.0;
};

inline OfdmFrame build_frame(std::span<const std::uint8_t> bits,
                             const PilotPattern& pattern,
                             const Constellation& c, std::uint64_t pilot_seed) {
    if (!pattern.rasterized()) {
        throw std::invalid_argument("build_frame: pattern is not rasterized");
    }
    const std::size_t cells =
        static_cast<std::size_t>(pattern.n_symbols) * pattern.n_subcarriers;
    const std::size_t n_data = cells - pattern.pilot_cells.size();
    const std::size_t need = n_data * static_cast<std::size_t>(c.bits_per_symbol);
    if (bits.size() < need) {
        throw std::invalid_argument("build_frame: not enough payload bits");
    }

    OfdmFrame f;
    f.grid = ComplexGrid(pattern.n_symbols, pattern.n_subcarriers);
    f.bits.assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(need));
    f.n_data_cells = n_data;

    Rng prng(pilot_seed);
    f.pilot_values.resize(pattern.pilot_cells.size());
    const double a = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
        const std::uint64_t q = prng.next_u64() & 3u;
        const double re = (q & 1u) ? -a : a;
        const double im = (q & 2u) ? -a : a;
        f.pilot_values[i] = {re, im};
        const PilotCell cell = pattern.pilot_cells[i];
        f.grid.at(cell.symbol, cell.subcarrier) = f.pilot_values[i];
    }

    std::size_t bit_pos = 0;
    for (int n = 0; n < pattern.n_symbols; ++n) {
        for (int k = 0; k < pattern.n_subcarriers; ++k) {
            if (pattern.find_pilot(n, k) >= 0) continue;
            std::uint32_t g = 0;
            for (int b = 0; b < c.bits_per_symbol; ++b) {
                g = (g << 1) | (f.bits[bit_pos + b] & 1u);
            }
            bit_pos += static_cast<std::size_t>(c.bits_per_symbol);
            f.grid.at(n, k) = c.map_group(g);
        }
    }
    return f;
}

/// Zero-forcing equalization and nearest-point demapping over the data
/// cells. Cells whose channel estimate is exactly zero cannot be
/// equalized; they are counted as erased with half their bits wrong.
struct DemapResult {
    double error_count = 0.0;
    std::size_t n_bits = 0;
    double ber = 0.0;
    std::size_t erased_cells = 0;
};

inline DemapResult equalize_demap(const ComplexGrid& received,
                                  const CirEstimate& estimate,
                                  const OfdmFrame& frame,
                                  const PilotPattern& pattern,
                                  const Constellation& c) {
    if (received.n_symbols != pattern.n_symbols ||
        received.n_subcarriers != pattern.n_subcarriers) {
        throw std::invalid_argument("equalize_demap: grid does not match pattern");
    }
    DemapResult r;
    r.n_bits = frame.n_data_cells * static_cast<std::size_t>(c.bits_per_symbol);
    std::size_t bit_pos = 0;
    std::uint8_t group[8];
    for (int n = 0; n < pattern.n_symbols; ++n) {
        for (int k = 0; k < pattern.n_subcarriers; ++k) {
            if (pattern.find_pilot(n, k) >= 0) continue;
            const cplx h = estimate.h_hat.at(n, k);
            if (std::abs(h) == 0.0) {
                ++r.erased_cells;
                r.error_count += 0.5 * c.bits_per_symbol;
                bit_pos += static_cast<std::size_t>(c.bits_per_symbol);
                continue;
            }
            demap_symbol(received.at(n, k) / h, c, group);
            for (int b = 0; b < c.bits_per_symbol; ++b) {
                r.error_count += (group[b] != frame.bits[bit_pos + b]) ? 1.0 : 0.0;
            }
            bit_pos += static_cast<std::size_t>(c.bits_per_symbol);
        }
    }
    r.ber = r.n_bits ? r.error_count / static_cast<double>(r.n_bits) : 0.0;
    return r;
}

} // namespace pilotgrid
