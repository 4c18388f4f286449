#pragma once

#include "pilotgrid/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace pilotgrid {

enum class PatternKind {
    Block,
    Comb,
    Rectangular,
    Hexagonal,
    Parallelogram,
    Diamond,
    Cell,
};

inline const char* to_string(PatternKind k) {
    switch (k) {
        case PatternKind::Block: return "block";
        case PatternKind::Comb: return "comb";
        case PatternKind::Rectangular: return "rectangular";
        case PatternKind::Hexagonal: return "hexagonal";
        case PatternKind::Parallelogram: return "parallelogram";
        case PatternKind::Diamond: return "diamond";
        case PatternKind::Cell: return "cell";
    }
    return "?";
}

inline PatternKind parse_pattern_kind(const std::string& name) {
    for (PatternKind k : {PatternKind::Block, PatternKind::Comb,
                          PatternKind::Rectangular, PatternKind::Hexagonal,
                          PatternKind::Parallelogram, PatternKind::Diamond,
                          PatternKind::Cell}) {
        if (name == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown pattern kind: '" + name + "'");
}

/// Comb and Block are line lattices: pilots fill entire subcarriers
/// (comb) or entire symbols (block) rather than isolated cells.
inline bool is_line_kind(PatternKind k) {
    return k == PatternKind::Block || k == PatternKind::Comb;
}

/// Multiplicative map from grid indices to the regularized plane where
/// the channel varies isotropically: t = alpha_t * symbol_index,
/// f = alpha_f * subcarrier_index.
struct RegularizedScale {
    double alpha_t = 1.0;
    double alpha_f = 1.0;

    /// Scale factors from the fourth moments of the channel variation
    /// per symbol (w1_4) and per subcarrier (w2_4). Normalizing each
    /// axis to unit fourth moment stretches the faster-varying axis:
    /// alpha = moment^(1/4).
    static RegularizedScale from_moments(double w1_4, double w2_4) {
        if (!(w1_4 > 0.0) || !(w2_4 > 0.0) || !std::isfinite(w1_4) ||
            !std::isfinite(w2_4)) {
            throw std::invalid_argument(
                "from_moments: fourth moments must be finite and positive");
        }
        return {std::pow(w1_4, 0.25), std::pow(w2_4, 0.25)};
    }
};

/// Optimal pilot spacing ratio d_t/d_f = (w2_4 / w1_4)^(1/4).
inline double eq1_scale_ratio(double w1_4, double w2_4) {
    if (!(w1_4 > 0.0) || !(w2_4 > 0.0) || !std::isfinite(w1_4) ||
        !std::isfinite(w2_4)) {
        throw std::invalid_argument(
            "eq1_scale_ratio: fourth moments must be finite and positive");
    }
    return std::pow(w2_4 / w1_4, 0.25);
}

/// OFDM frame geometry and timing.
struct OfdmGridSpec {
    int n_subcarriers = 128;
    int n_symbols = 64;
    double delta_f_hz = 125e3;
    int n_fft = 128;
    int n_cp = 16;
    int n_tx = 1;
    double t_spl_s = 0.0; // 0 means derive from delta_f and n_fft

    double t_spl() const {
        return t_spl_s > 0.0 ? t_spl_s : 1.0 / (delta_f_hz * n_fft);
    }
    double t_useful() const { return n_fft * t_spl(); }
    double t_sym() const { return (n_fft + n_cp) * t_spl(); }
    std::size_t n_cells() const {
        return static_cast<std::size_t>(n_symbols) * n_subcarriers;
    }

    void validate() const {
        if (n_subcarriers < 1 || n_symbols < 1 || n_fft < 1 || n_tx < 1) {
            throw ConfigError("frame dimensions must be positive");
        }
        if (n_cp < 0) throw ConfigError("cyclic prefix length must be >= 0");
        if (!(delta_f_hz > 0.0)) {
            throw ConfigError("subcarrier spacing must be positive");
        }
    }
};

/// Two-dimensional lattice in the regularized plane. Pilots sit at
/// offset + m*e1 + n*e2 + motif[i] for integer m, n. The motif has a
/// single zero entry except for Hexagonal, whose honeycomb needs a
/// two-point basis. For line kinds e1 is a unit vector marking the
/// spanned axis and e2 is the line spacing vector.
struct LatticeBasis {
    Vec2 e1;
    Vec2 e2;
    Vec2 offset;
    PatternKind kind = PatternKind::Rectangular;
    std::vector<Vec2> motif{Vec2{0.0, 0.0}};
    std::string provenance;

    double det() const { return std::abs(e1.cross(e2)); }

    /// Pilots per unit regularized area (point kinds only).
    double point_density() const {
        return static_cast<double>(motif.size()) / det();
    }
};

/// Basis of the rotated "cell" lattice with tilt theta = acos(3/5) and
/// rotation phi = atan(1/3). Both projections onto the time and the
/// frequency axis are then uniform with spacing side/sqrt(10).
inline LatticeBasis cell_basis(double side) {
    if (!(side > 0.0) || !std::isfinite(side)) {
        throw std::invalid_argument("cell_basis: side must be finite and positive");
    }
    const double theta = std::acos(3.0 / 5.0);
    const double phi = std::atan(1.0 / 3.0);
    LatticeBasis b;
    b.e1 = {side * std::cos(phi), side * std::sin(phi)};
    b.e2 = {side * std::cos(theta + phi), side * std::sin(theta + phi)};
    b.offset = {0.0, 0.0};
    b.kind = PatternKind::Cell;
    b.provenance = "rotated lattice, theta=acos(3/5), phi=atan(1/3)";
    return b;
}

struct PilotCell {
    int symbol = 0;
    int subcarrier = 0;

    friend bool operator==(PilotCell a, PilotCell b) {
        return a.symbol == b.symbol && a.subcarrier == b.subcarrier;
    }
    friend bool operator<(PilotCell a, PilotCell b) {
        if (a.symbol != b.symbol) return a.symbol < b.symbol;
        return a.subcarrier < b.subcarrier;
    }
};

/// A pilot arrangement: a continuous lattice plus, once rasterized onto
/// a frame, the snapped pilot cells. pilot cell i keeps its originating
/// continuous lattice point in lattice_points[i] so neighbor lookups can
/// walk the lattice after snapping.
struct PilotPattern {
    LatticeBasis basis;
    RegularizedScale scale;
    double target_density = 0.0; // pilots per unit regularized area
                                 // (line kinds: lines per unit length)

    // Filled by rasterize():
    int n_symbols = 0;
    int n_subcarriers = 0;
    std::vector<PilotCell> pilot_cells;   // sorted by (symbol, subcarrier)
    std::vector<Vec2> lattice_points;     // parallel to pilot_cells
    double achieved_density = 0.0;        // pilot cells / frame cells
    int collisions = 0;                   // lattice points merged by snapping

    std::vector<std::int32_t> cell_to_pilot; // dense (symbol, subcarrier) map

    PatternKind kind() const { return basis.kind; }
    bool rasterized() const { return n_symbols > 0; }

    Vec2 cell_position(int symbol, int subcarrier) const {
        return {symbol * scale.alpha_t, subcarrier * scale.alpha_f};
    }

    /// Index into pilot_cells, or -1 when (symbol, subcarrier) holds data.
    std::int32_t find_pilot(int symbol, int subcarrier) const {
        if (symbol < 0 || symbol >= n_symbols || subcarrier < 0 ||
            subcarrier >= n_subcarriers) {
            return -1;
        }
        return cell_to_pilot[static_cast<std::size_t>(symbol) * n_subcarriers +
                             subcarrier];
    }
};

/// Density-matched pattern construction. density is the pilot count per
/// unit regularized area; for the line kinds it is the line count per
/// unit length across the spanned axis (spacing = 1/density), which
/// matches the point kinds when each line carries unit linear density.
inline PilotPattern make_pattern(PatternKind kind, double density,
                                 RegularizedScale scale = {}) {
    if (!(density > 0.0) || !std::isfinite(density)) {
        throw std::invalid_argument("make_pattern: density must be finite and positive");
    }
    if (!(scale.alpha_t > 0.0) || !(scale.alpha_f > 0.0)) {
        throw std::invalid_argument("make_pattern: scale factors must be positive");
    }

    PilotPattern p;
    p.scale = scale;
    p.target_density = density;

    const double sqrt3 = std::sqrt(3.0);
    switch (kind) {
        case PatternKind::Cell: {
            // |e1 x e2| = side^2 * sin(theta) = 0.8 side^2
            const double side = 1.0 / std::sqrt(0.8 * density);
            p.basis = cell_basis(side);
            break;
        }
        case PatternKind::Rectangular: {
            const double s = 1.0 / std::sqrt(density);
            p.basis.e1 = {s, 0.0};
            p.basis.e2 = {0.0, s};
            p.basis.kind = kind;
            p.basis.provenance = "axis-aligned square lattice";
            break;
        }
        case PatternKind::Diamond: {
            // equilateral triangular lattice, cell area s^2 sqrt(3)/2
            const double s = std::sqrt(2.0 / (sqrt3 * density));
            p.basis.e1 = {s, 0.0};
            p.basis.e2 = {0.5 * s, 0.5 * sqrt3 * s};
            p.basis.kind = kind;
            p.basis.provenance = "equilateral triangular lattice, axis-aligned";
            break;
        }
        case PatternKind::Parallelogram: {
            // triangular lattice sheared along frequency; projections on
            // both axes stay uniform (0.5 s in time, s*sqrt(3)/5 in
            // frequency) while the density matches Diamond exactly
            const double s = std::sqrt(2.0 / (sqrt3 * density));
            const double mu = sqrt3 / 5.0;
            p.basis.e1 = {s, s * mu};
            p.basis.e2 = {0.5 * s, 3.0 * s * mu};
            p.basis.kind = kind;
            p.basis.provenance = "triangular lattice sheared in frequency, mu=sqrt(3)/5";
            break;
        }
        case PatternKind::Hexagonal: {
            // honeycomb with edge length l, density 4 / (3 sqrt(3) l^2)
            const double l = std::sqrt(4.0 / (3.0 * sqrt3 * density));
            p.basis.e1 = {sqrt3 * l, 0.0};
            p.basis.e2 = {0.5 * sqrt3 * l, 1.5 * l};
            p.basis.kind = kind;
            p.basis.motif = {Vec2{0.0, 0.0}, Vec2{0.5 * sqrt3 * l, 0.5 * l}};
            p.basis.provenance = "honeycomb, two-point motif";
            break;
        }
        case PatternKind::Comb: {
            const double spacing = 1.0 / density;
            p.basis.e1 = {1.0, 0.0};
            p.basis.e2 = {0.0, spacing};
            p.basis.kind = kind;
            p.basis.provenance = "pilot subcarriers, full time axis";
            break;
        }
        case PatternKind::Block: {
            const double spacing = 1.0 / density;
            p.basis.e1 = {0.0, 1.0};
            p.basis.e2 = {spacing, 0.0};
            p.basis.kind = kind;
            p.basis.provenance = "pilot symbols, full frequency axis";
            break;
        }
        default:
            throw std::invalid_argument("make_pattern: unknown pattern kind");
    }
    return p;
}

/// Regularized-plane density that puts the requested fraction of frame
/// cells on pilots for the given kind and scale.
inline double density_for_cell_fraction(PatternKind kind, double fraction,
                                        RegularizedScale scale) {
    if (!(fraction > 0.0) || !std::isfinite(fraction)) {
        throw std::invalid_argument("cell fraction must be finite and positive");
    }
    switch (kind) {
        case PatternKind::Comb: return fraction / scale.alpha_f;
        case PatternKind::Block: return fraction / scale.alpha_t;
        default: return fraction / (scale.alpha_t * scale.alpha_f);
    }
}

namespace detail {

// Half-away-from-zero snap of a regularized coordinate to a grid index.
inline long long snap_index(double coord, double alpha) {
    return std::llround(coord / alpha);
}

struct RawPilot {
    int symbol;
    int subcarrier;
    Vec2 point;
};

} // namespace detail

/// Snaps the continuous lattice onto the frame. Lattice points round
/// half-away-from-zero to the nearest cell; points snapping onto an
/// occupied cell are merged (first point in ascending lattice-index
/// order wins) and counted in `collisions`.
inline PilotPattern rasterize(const PilotPattern& pattern,
                              const OfdmGridSpec& frame) {
    frame.validate();
    PilotPattern out = pattern;
    const double at = pattern.scale.alpha_t;
    const double af = pattern.scale.alpha_f;
    const int ns = frame.n_symbols;
    const int nk = frame.n_subcarriers;

    std::vector<detail::RawPilot> raw;

    if (is_line_kind(pattern.kind())) {
        const bool comb = pattern.kind() == PatternKind::Comb;
        const Vec2 step = pattern.basis.e2;
        const double spacing = comb ? step.f : step.t;
        const double start = comb ? pattern.basis.offset.f : pattern.basis.offset.t;
        const double alpha = comb ? af : at;
        const int count = comb ? nk : ns;
        const long long j_lo =
            (long long)std::floor((-0.5 * alpha - start) / spacing) - 1;
        const long long j_hi =
            (long long)std::ceil(((count - 0.5) * alpha - start) / spacing) + 1;
        std::vector<char> used(static_cast<std::size_t>(comb ? nk : ns), 0);
        for (long long j = j_lo; j <= j_hi; ++j) {
            const double c = start + static_cast<double>(j) * spacing;
            const long long idx = detail::snap_index(c, alpha);
            if (idx < 0 || idx >= count) continue;
            if (used[static_cast<std::size_t>(idx)]) {
                out.collisions += comb ? ns : nk;
                continue;
            }
            used[static_cast<std::size_t>(idx)] = 1;
            if (comb) {
                for (int n = 0; n < ns; ++n) {
                    raw.push_back({n, static_cast<int>(idx), Vec2{n * at, c}});
                }
            } else {
                for (int k = 0; k < nk; ++k) {
                    raw.push_back({static_cast<int>(idx), k, Vec2{c, k * af}});
                }
            }
        }
    } else {
        // Index bounds from mapping the frame corners through the
        // inverse basis, padded for the motif extent.
        const Vec2 e1 = pattern.basis.e1;
        const Vec2 e2 = pattern.basis.e2;
        const double det = e1.cross(e2);
        if (std::abs(det) < 1e-12 * e1.norm() * e2.norm()) {
            throw std::invalid_argument("rasterize: degenerate lattice basis");
        }
        double m_lo = std::numeric_limits<double>::max(), m_hi = -m_lo;
        double n_lo = m_lo, n_hi = -m_lo;
        const double tmin = -0.5 * at, tmax = (ns - 0.5) * at;
        const double fmin = -0.5 * af, fmax = (nk - 0.5) * af;
        for (double tc : {tmin, tmax}) {
            for (double fc : {fmin, fmax}) {
                const Vec2 q = Vec2{tc, fc} - pattern.basis.offset;
                const double mm = (q.t * e2.f - q.f * e2.t) / det;
                const double nn = (e1.t * q.f - e1.f * q.t) / det;
                m_lo = std::min(m_lo, mm);
                m_hi = std::max(m_hi, mm);
                n_lo = std::min(n_lo, nn);
                n_hi = std::max(n_hi, nn);
            }
        }
        double motif_pad = 0.0;
        for (const Vec2& mo : pattern.basis.motif) {
            motif_pad = std::max(motif_pad, mo.norm());
        }
        const double pad = 2.0 + motif_pad / std::sqrt(std::abs(det));
        const long long mi_lo = (long long)std::floor(m_lo - pad);
        const long long mi_hi = (long long)std::ceil(m_hi + pad);
        const long long ni_lo = (long long)std::floor(n_lo - pad);
        const long long ni_hi = (long long)std::ceil(n_hi + pad);

        std::vector<std::int32_t> occupied(frame.n_cells(), -1);
        for (long long m = mi_lo; m <= mi_hi; ++m) {
            for (long long n = ni_lo; n <= ni_hi; ++n) {
                const Vec2 base = pattern.basis.offset +
                                  e1 * static_cast<double>(m) +
                                  e2 * static_cast<double>(n);
                for (const Vec2& mo : pattern.basis.motif) {
                    const Vec2 pt = base + mo;
                    const long long sym = detail::snap_index(pt.t, at);
                    const long long sub = detail::snap_index(pt.f, af);
                    if (sym < 0 || sym >= ns || sub < 0 || sub >= nk) continue;
                    const std::size_t cell =
                        static_cast<std::size_t>(sym) * nk + sub;
                    if (occupied[cell] >= 0) {
                        ++out.collisions;
                        continue;
                    }
                    occupied[cell] = static_cast<std::int32_t>(raw.size());
                    raw.push_back({static_cast<int>(sym), static_cast<int>(sub), pt});
                }
            }
        }
    }

    if (raw.empty()) {
        throw ConfigError("rasterize: no pilot falls inside the frame");
    }
    std::sort(raw.begin(), raw.end(),
              [](const detail::RawPilot& a, const detail::RawPilot& b) {
                  if (a.symbol != b.symbol) return a.symbol < b.symbol;
                  return a.subcarrier < b.subcarrier;
              });

    out.n_symbols = ns;
    out.n_subcarriers = nk;
    out.pilot_cells.clear();
    out.lattice_points.clear();
    out.pilot_cells.reserve(raw.size());
    out.lattice_points.reserve(raw.size());
    out.cell_to_pilot.assign(frame.n_cells(), -1);
    for (const auto& r : raw) {
        const auto idx = static_cast<std::int32_t>(out.pilot_cells.size());
        out.cell_to_pilot[static_cast<std::size_t>(r.symbol) * nk +
                          r.subcarrier] = idx;
        out.pilot_cells.push_back({r.symbol, r.subcarrier});
        out.lattice_points.push_back(r.point);
    }
    out.achieved_density =
        static_cast<double>(raw.size()) / static_cast<double>(frame.n_cells());
    if (out.achieved_density > 0.5) {
        throw ConfigError("rasterize: pilot overhead above 50% of the frame");
    }
    return out;
}

/// Sampling-theorem style placement limits. d_t_symbols and
/// d_f_subcarriers are pilot spacings in grid indices; f_max_hz and
/// tau_max_s describe the channel spread.
struct Eq2Report {
    double doppler_lhs = 0.0;
    double doppler_margin = 0.0; // 1/2 - lhs
    double delay_lhs = 0.0;
    double delay_margin = 0.0;   // 1 - lhs
    bool doppler_ok = true;
    bool delay_ok = true;

    bool all_ok() const { return doppler_ok && delay_ok; }
};

inline Eq2Report eq2_validate_raw(double f_max_normalized,
                                  double tau_max_samples,
                                  const OfdmGridSpec& frame, double d_t_symbols,
                                  double d_f_subcarriers) {
    if (f_max_normalized < 0.0 || tau_max_samples < 0.0 ||
        !std::isfinite(f_max_normalized) || !std::isfinite(tau_max_samples)) {
        throw std::invalid_argument("eq2: channel spreads must be finite and >= 0");
    }
    if (!(d_t_symbols > 0.0) || !(d_f_subcarriers > 0.0)) {
        throw std::invalid_argument("eq2: pilot spacings must be positive");
    }
    Eq2Report r;
    r.doppler_lhs = f_max_normalized * d_t_symbols;
    r.doppler_margin = 0.5 - r.doppler_lhs;
    r.doppler_ok = r.doppler_lhs <= 0.5;
    r.delay_lhs = d_f_subcarriers * frame.n_tx * tau_max_samples / frame.n_fft;
    r.delay_margin = 1.0 - r.delay_lhs;
    r.delay_ok = r.delay_lhs <= 1.0;
    return r;
}

/// Pattern text export: '#'-prefixed metadata, a column header, then one
/// "symbol_index,subcarrier_index" line per pilot.
inline void write_pattern(std::ostream& os, const PilotPattern& p) {
    os << "# pilot pattern\n";
    os << "# kind = " << to_string(p.kind()) << "\n";
    os << "# density = " << format_double(p.target_density) << "\n";
    os << "# basis_e1 = " << format_double(p.basis.e1.t) << " "
       << format_double(p.basis.e1.f) << "\n";
    os << "# basis_e2 = " << format_double(p.basis.e2.t) << " "
       << format_double(p.basis.e2.f) << "\n";
    os << "# offset = " << format_double(p.basis.offset.t) << " "
       << format_double(p.basis.offset.f) << "\n";
    os << "# alpha_t = " << format_double(p.scale.alpha_t) << "\n";
    os << "# alpha_f = " << format_double(p.scale.alpha_f) << "\n";
    if (p.rasterized()) {
        os << "# frame = " << p.n_symbols << " " << p.n_subcarriers << "\n";
        os << "# achieved_density = " << format_double(p.achieved_density)
           << "\n";
    }
    os << "symbol_index,subcarrier_index\n";
    for (const PilotCell& c : p.pilot_cells) {
        os << c.symbol << "," << c.subcarrier << "\n";
    }
}

/// Parses the write_pattern format. Only metadata present in the header
/// is restored; the motif of Hexagonal patterns is reconstructed from
/// the kind and basis.
inline PilotPattern read_pattern(std::istream& is) {
    PilotPattern p;
    std::string line;
    bool have_kind = false;
    bool in_cells = false;
    int frame_syms = 0, frame_subs = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key, eq;
            ls >> key >> eq;
            if (eq != "=") continue;
            if (key == "kind") {
                std::string v;
                ls >> v;
                const double dens = p.target_density;
                const RegularizedScale sc = p.scale;
                PilotPattern proto = make_pattern(parse_pattern_kind(v),
                                                  dens > 0 ? dens : 1.0, sc);
                p.basis = proto.basis;
                have_kind = true;
            } else if (key == "density") {
                ls >> p.target_density;
            } else if (key == "basis_e1") {
                ls >> p.basis.e1.t >> p.basis.e1.f;
            } else if (key == "basis_e2") {
                ls >> p.basis.e2.t >> p.basis.e2.f;
            } else if (key == "offset") {
                ls >> p.basis.offset.t >> p.basis.offset.f;
            } else if (key == "alpha_t") {
                ls >> p.scale.alpha_t;
            } else if (key == "alpha_f") {
                ls >> p.scale.alpha_f;
            } else if (key == "frame") {
                ls >> frame_syms >> frame_subs;
            }
            continue;
        }
        if (!in_cells) {
            if (line.rfind("symbol_index", 0) == 0) {
                in_cells = true;
                continue;
            }
            throw ConfigError("pattern file: unexpected line '" + line + "'");
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("pattern file: bad cell line '" + line + "'");
        }
        PilotCell c;
        c.symbol = static_cast<int>(parse_int(line.substr(0, comma)));
        c.subcarrier = static_cast<int>(parse_int(line.substr(comma + 1)));
        p.pilot_cells.push_back(c);
        p.lattice_points.push_back(
            {c.symbol * p.scale.alpha_t, c.subcarrier * p.scale.alpha_f});
    }
    if (!have_kind) throw ConfigError("pattern file: missing kind header");
    if (frame_syms > 0 && frame_subs > 0 && !p.pilot_cells.empty()) {
        p.n_symbols = frame_syms;
        p.n_subcarriers = frame_subs;
        p.cell_to_pilot.assign(
            static_cast<std::size_t>(frame_syms) * frame_subs, -1);
        for (std::size_t i = 0; i < p.pilot_cells.size(); ++i) {
            const PilotCell c = p.pilot_cells[i];
            p.cell_to_pilot[static_cast<std::size_t>(c.symbol) * frame_subs +
                            c.subcarrier] = static_cast<std::int32_t>(i);
        }
        p.achieved_density = static_cast<double>(p.pilot_cells.size()) /
                             (static_cast<double>(frame_syms) * frame_subs);
    }
    return p;
}

} // namespace pilotgrid
