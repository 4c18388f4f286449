#pragma once

#include "pilotgrid/grid.hpp"

#include <algorithm>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace pilotgrid {

/// Coverage criteria of a pattern, all in regularized units. d_max is
/// the largest distance any point of the plane has to its nearest pilot
/// (covering radius), d_avg the mean such distance. d_t / d_f are the
/// lattice projection spacings onto the axes; a zero means the
/// projection is dense (line kinds along their spanned axis). The
/// uniform flags report whether consecutive projections are equispaced.
struct PatternMetrics {
    double d_max = 0.0;
    double d_avg = 0.0;
    double d_t = 0.0;
    double d_f = 0.0;
    bool t_uniform = true;
    bool f_uniform = true;
    int resolution = 0;
};

namespace detail {

inline double min_dist(Vec2 p, const std::vector<Vec2>& pts) {
    double best = std::numeric_limits<double>::max();
    for (const Vec2& q : pts) {
        const double dt = p.t - q.t;
        const double df = p.f - q.f;
        const double d2 = dt * dt + df * df;
        if (d2 < best) best = d2;
    }
    return std::sqrt(best);
}

// Lattice points (with motif) in a window of indices around the origin.
inline std::vector<Vec2> lattice_window(const LatticeBasis& b, int radius) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1) *
                b.motif.size());
    for (int m = -radius; m <= radius; ++m) {
        for (int n = -radius; n <= radius; ++n) {
            const Vec2 base = b.offset + b.e1 * m + b.e2 * n;
            for (const Vec2& mo : b.motif) pts.push_back(base + mo);
        }
    }
    return pts;
}

struct ProjectionInfo {
    double spacing = 0.0;
    bool uniform = true;
};

// Projection spacing of the lattice onto one axis, measured over the
// interior of a generous index window so edge fibers cannot distort
// the gap statistics.
inline ProjectionInfo projection_spacing(const LatticeBasis& b, bool time_axis) {
    const int w = 24;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(2 * w + 1) * (2 * w + 1) *
                 b.motif.size());
    for (const Vec2& p : lattice_window(b, w)) {
        vals.push_back(time_axis ? p.t : p.f);
    }
    std::sort(vals.begin(), vals.end());
    const double span = vals.back() - vals.front();
    const double tol = std::max(span, 1.0e-300) * 1e-9;
    std::vector<double> uniq;
    for (double v : vals) {
        if (uniq.empty() || v - uniq.back() > tol) uniq.push_back(v);
    }
    ProjectionInfo info;
    if (uniq.size() < 3) {
        info.spacing = 0.0;
        return info;
    }
    // interior third only: fibers there are complete
    const std::size_t lo = uniq.size() / 3;
    const std::size_t hi = 2 * uniq.size() / 3;
    double gmin = std::numeric_limits<double>::max();
    double gmax = 0.0;
    double gsum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double g = uniq[i] - uniq[i - 1];
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
        gsum += g;
        ++count;
    }
    if (count == 0) {
        info.spacing = 0.0;
        return info;
    }
    const double gmean = gsum / static_cast<double>(count);
    info.uniform = (gmax - gmin) <= 0.01 * gmean;
    info.spacing = info.uniform ? gmean : gmax;
    return info;
}

} // namespace detail

/// Dense-sampling evaluation of the distance criteria over one
/// fundamental domain of the lattice. resolution is the sample count
/// per lattice spacing and axis (>= 100); the covering radius estimate
/// is sharpened by a local search around the sampled maximum.
inline PatternMetrics pattern_metrics(const PilotPattern& pattern,
                                      int resolution = 256) {
    if (resolution < 100) {
        throw std::invalid_argument(
            "pattern_metrics: resolution must be at least 100 samples per spacing");
    }
    PatternMetrics m;
    m.resolution = resolution;

    if (is_line_kind(pattern.kind())) {
        const bool comb = pattern.kind() == PatternKind::Comb;
        const double spacing =
            comb ? pattern.basis.e2.f : pattern.basis.e2.t;
        // distance to the nearest line is one-dimensional
        double sum = 0.0;
        for (int i = 0; i < resolution; ++i) {
            const double u = (i + 0.5) / resolution - 0.5;
            sum += std::abs(u) * spacing;
        }
        m.d_avg = sum / resolution;
        m.d_max = 0.5 * spacing;
        if (comb) {
            m.d_t = 0.0;
            m.d_f = spacing;
        } else {
            m.d_t = spacing;
            m.d_f = 0.0;
        }
        return m;
    }

    const LatticeBasis& b = pattern.basis;
    const double det = b.e1.cross(b.e2);
    if (std::abs(det) < 1e-12 * b.e1.norm() * b.e2.norm()) {
        throw std::invalid_argument("pattern_metrics: degenerate lattice basis");
    }

    const std::vector<Vec2> pts = detail::lattice_window(b, 3);
    const int nr = resolution;
    double sum = 0.0;
    double best = -1.0;
    double bu = 0.0, bv = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double u = (i + 0.5) / nr;
        for (int j = 0; j < nr; ++j) {
            const double v = (j + 0.5) / nr;
            const Vec2 p = b.offset + b.e1 * u + b.e2 * v;
            const double d = detail::min_dist(p, pts);
            sum += d;
            if (d > best) {
                best = d;
                bu = u;
                bv = v;
            }
        }
    }
    m.d_avg = sum / (static_cast<double>(nr) * nr);

    // local refinement of the covering radius around the sampled argmax
    double h = 1.0 / nr;
    for (int iter = 0; iter < 24; ++iter) {
        double nbu = bu, nbv = bv;
        for (int a = -2; a <= 2; ++a) {
            for (int c = -2; c <= 2; ++c) {
                const double u = bu + h * a / 2.0;
                const double v = bv + h * c / 2.0;
                const Vec2 p = b.offset + b.e1 * u + b.e2 * v;
                const double d = detail::min_dist(p, pts);
                if (d > best) {
                    best = d;
                    nbu = u;
                    nbv = v;
                }
            }
        }
        bu = nbu;
        bv = nbv;
        h *= 0.5;
    }
    m.d_max = best;

    const auto pt = detail::projection_spacing(b, true);
    const auto pf = detail::projection_spacing(b, false);
    m.d_t = pt.spacing;
    m.t_uniform = pt.uniform;
    m.d_f = pf.spacing;
    m.f_uniform = pf.uniform;
    return m;
}

/// Nearest-pilot ownership of every frame cell. Cells equidistant from
/// several pilots (to numerical tolerance) are flagged as boundary and
/// assigned to the pilot with the larger symbol index, then the larger
/// subcarrier index.
struct AbsorptionMap {
    int n_symbols = 0;
    int n_subcarriers = 0;
    int n_pilots = 0;
    std::vector<std::int32_t> owner;
    std::vector<std::uint8_t> boundary;

    std::int32_t owner_at(int n, int k) const {
        return owner[static_cast<std::size_t>(n) * n_subcarriers + k];
    }
    bool boundary_at(int n, int k) const {
        return boundary[static_cast<std::size_t>(n) * n_subcarriers + k] != 0;
    }
};

inline AbsorptionMap absorption_map(const PilotPattern& pattern,
                                    const OfdmGridSpec& frame) {
    if (!pattern.rasterized()) {
        throw std::invalid_argument("absorption_map: pattern is not rasterized");
    }
    if (pattern.n_symbols != frame.n_symbols ||
        pattern.n_subcarriers != frame.n_subcarriers) {
        throw std::invalid_argument("absorption_map: frame does not match pattern");
    }
    if (pattern.pilot_cells.empty()) {
        throw std::invalid_argument("absorption_map: pattern has no pilots");
    }

    AbsorptionMap map;
    map.n_symbols = frame.n_symbols;
    map.n_subcarriers = frame.n_subcarriers;
    map.n_pilots = static_cast<int>(pattern.pilot_cells.size());
    map.owner.assign(frame.n_cells(), -1);
    map.boundary.assign(frame.n_cells(), 0);

    const double at = pattern.scale.alpha_t;
    const double af = pattern.scale.alpha_f;
    const double tol = 1e-9 * (at * at + af * af);

    std::vector<Vec2> ppos(pattern.pilot_cells.size());
    for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
        const PilotCell c = pattern.pilot_cells[i];
        ppos[i] = {c.symbol * at, c.subcarrier * af};
    }

    for (int n = 0; n < frame.n_symbols; ++n) {
        for (int k = 0; k < frame.n_subcarriers; ++k) {
            const Vec2 p{n * at, k * af};
            double best = std::numeric_limits<double>::max();
            std::int32_t who = -1;
            bool tied = false;
            for (std::size_t i = 0; i < ppos.size(); ++i) {
                const double dt = p.t - ppos[i].t;
                const double df = p.f - ppos[i].f;
                const double d2 = dt * dt + df * df;
                if (d2 < best - tol) {
                    best = d2;
                    who = static_cast<std::int32_t>(i);
                    tied = false;
                } else if (d2 <= best + tol) {
                    tied = true;
                    best = std::min(best, d2);
                    const PilotCell cur = pattern.pilot_cells[who];
                    const PilotCell cand = pattern.pilot_cells[i];
                    if (cand.symbol > cur.symbol ||
                        (cand.symbol == cur.symbol &&
                         cand.subcarrier > cur.subcarrier)) {
                        who = static_cast<std::int32_t>(i);
                    }
                }
            }
            const std::size_t cell =
                static_cast<std::size_t>(n) * frame.n_subcarriers + k;
            map.owner[cell] = who;
            map.boundary[cell] = tied ? 1 : 0;
        }
    }
    return map;
}

/// Criteria table for several kinds at one common density.
inline std::vector<std::pair<PatternKind, PatternMetrics>>
metrics_table(std::span<const PatternKind> kinds, double density,
              RegularizedScale scale = {}, int resolution = 256) {
    std::vector<std::pair<PatternKind, PatternMetrics>> rows;
    rows.reserve(kinds.size());
    for (PatternKind k : kinds) {
        const PilotPattern p = make_pattern(k, density, scale);
        rows.emplace_back(k, pattern_metrics(p, resolution));
    }
    return rows;
}

inline void write_metrics_csv(
    std::ostream& os,
    const std::vector<std::pair<PatternKind, PatternMetrics>>& rows,
    double density) {
    os << "kind,D_M,D_E,d_t,d_f,density,resolution\n";
    for (const auto& [kind, m] : rows) {
        os << to_string(kind) << "," << format_double(m.d_max) << ","
           << format_double(m.d_avg) << "," << format_double(m.d_t) << ","
           << format_double(m.d_f) << "," << format_double(density) << ","
           << m.resolution << "\n";
    }
}

} // namespace pilotgrid
