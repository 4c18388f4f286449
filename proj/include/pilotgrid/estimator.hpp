#pragma once

#include "pilotgrid/metrics.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pilotgrid {

/// One pilot cell as seen by the receiver.
struct PilotObservation {
    PilotCell position;
    cplx received{0.0, 0.0};
    cplx transmitted{1.0, 0.0};
};

/// Least-squares estimate at one pilot, H = Y / X.
inline cplx ls_estimate(const PilotObservation& obs) {
    if (std::abs(obs.transmitted) == 0.0) {
        throw std::invalid_argument("ls_estimate: transmitted pilot symbol is zero");
    }
    return obs.received / obs.transmitted;
}

/// Inverse-distance weights of the "distance" filter. When the data
/// point coincides with a pilot (within 1e-9 regularized units) the
/// weights collapse to an indicator on that pilot; otherwise
/// k_i = d_i^-1 / sum_j d_j^-1.
struct DistanceWeights {
    std::vector<double> weights;
    std::vector<double> distances;

    double sum_squared() const {
        double s = 0.0;
        for (double w : weights) s += w * w;
        return s;
    }
};

inline DistanceWeights distance_weights(Vec2 data_point,
                                        std::span<const Vec2> pilots) {
    if (pilots.empty()) {
        throw std::invalid_argument("distance_weights: no pilot positions");
    }
    constexpr double eps = 1e-9;
    for (std::size_t i = 0; i < pilots.size(); ++i) {
        for (std::size_t j = i + 1; j < pilots.size(); ++j) {
            if (dist(pilots[i], pilots[j]) <= eps) {
                throw std::invalid_argument(
                    "distance_weights: pilot positions must be pairwise distinct");
            }
        }
    }
    DistanceWeights w;
    w.distances.resize(pilots.size());
    w.weights.assign(pilots.size(), 0.0);
    std::size_t coincident = pilots.size();
    for (std::size_t i = 0; i < pilots.size(); ++i) {
        w.distances[i] = dist(data_point, pilots[i]);
        if (w.distances[i] <= eps && coincident == pilots.size()) coincident = i;
    }
    if (coincident < pilots.size()) {
        w.weights[coincident] = 1.0;
        return w;
    }
    double total = 0.0;
    for (double d : w.distances) total += 1.0 / d;
    for (std::size_t i = 0; i < pilots.size(); ++i) {
        w.weights[i] = (1.0 / w.distances[i]) / total;
    }
    return w;
}

/// How each cell of an estimate was produced.
enum class Provenance : std::uint8_t {
    Unfilled,
    PilotLs,
    InterpDistance,
    InterpLinear,
    InterpBilinear,
    InterpAxisLinear,
};

/// Channel estimate over the frame with per-cell provenance.
struct CirEstimate {
    ComplexGrid h_hat;
    std::vector<Provenance> provenance;

    CirEstimate() = default;
    CirEstimate(int n_symbols, int n_subcarriers)
        : h_hat(n_symbols, n_subcarriers),
          provenance(h_hat.size(), Provenance::Unfilled) {}
};

/// The owner pilot of a data cell plus its available lattice neighbors,
/// owner first. Short of 7 entries near the frame edge, which sets
/// edge_flagged.
struct PilotSelection {
    std::vector<std::int32_t> pilot_indices;
    bool edge_flagged = false;
};

namespace detail {

inline bool is_bravais_point_kind(PatternKind k) {
    switch (k) {
        case PatternKind::Cell:
        case PatternKind::Rectangular:
        case PatternKind::Diamond:
        case PatternKind::Parallelogram:
            return true;
        default:
            return false;
    }
}

inline std::int32_t snap_lookup(const PilotPattern& pattern, Vec2 point) {
    const long long sym = snap_index(point.t, pattern.scale.alpha_t);
    const long long sub = snap_index(point.f, pattern.scale.alpha_f);
    if (sym < 0 || sym >= pattern.n_symbols || sub < 0 ||
        sub >= pattern.n_subcarriers) {
        return -1;
    }
    return pattern.find_pilot(static_cast<int>(sym), static_cast<int>(sub));
}

} // namespace detail

/// The 7-pilot set of a data cell on a point-lattice pattern: the pilot
/// owning the cell's absorption region plus the six lattice neighbors
/// +-e1, +-e2, +-(e1 - e2) of its originating lattice point, skipping
/// neighbors that fell off the frame.
inline PilotSelection select_pilot_cell(PilotCell data,
                                        const PilotPattern& pattern,
                                        const AbsorptionMap& absorption) {
    if (!pattern.rasterized()) {
        throw std::invalid_argument("select_pilot_cell: pattern is not rasterized");
    }
    if (!detail::is_bravais_point_kind(pattern.kind())) {
        throw std::invalid_argument(
            "select_pilot_cell: lattice-neighbor selection needs a point lattice");
    }
    if (data.symbol < 0 || data.symbol >= pattern.n_symbols ||
        data.subcarrier < 0 || data.subcarrier >= pattern.n_subcarriers) {
        throw std::invalid_argument("select_pilot_cell: data cell outside the frame");
    }
    if (pattern.find_pilot(data.symbol, data.subcarrier) >= 0) {
        throw std::invalid_argument("select_pilot_cell: cell is a pilot");
    }

    const std::int32_t owner = absorption.owner_at(data.symbol, data.subcarrier);
    PilotSelection sel;
    sel.pilot_indices.push_back(owner);

    const Vec2 p0 = pattern.lattice_points[static_cast<std::size_t>(owner)];
    const Vec2 e1 = pattern.basis.e1;
    const Vec2 e2 = pattern.basis.e2;
    const Vec2 offsets[6] = {e1, -e1, e2, -e2, e1 - e2, e2 - e1};
    for (const Vec2& off : offsets) {
        const std::int32_t idx = detail::snap_lookup(pattern, p0 + off);
        if (idx < 0) continue;
        bool seen = false;
        for (std::int32_t have : sel.pilot_indices) {
            if (have == idx) {
                seen = true;
                break;
            }
        }
        if (!seen) sel.pilot_indices.push_back(idx);
    }
    sel.edge_flagged = sel.pilot_indices.size() < 7;
    return sel;
}

enum class InterpMethod { Distance, LinearFrequency, Bilinear, AxisLinear };

inline const char* to_string(InterpMethod m) {
    switch (m) {
        case InterpMethod::Distance: return "distance";
        case InterpMethod::LinearFrequency: return "linear-frequency";
        case InterpMethod::Bilinear: return "bilinear";
        case InterpMethod::AxisLinear: return "axis-linear";
    }
    return "?";
}

inline InterpMethod parse_method(const std::string& name) {
    if (name == "distance") return InterpMethod::Distance;
    if (name == "linear-frequency") return InterpMethod::LinearFrequency;
    if (name == "bilinear") return InterpMethod::Bilinear;
    if (name == "axis-linear") return InterpMethod::AxisLinear;
    throw std::invalid_argument("unknown interpolation method: '" + name + "'");
}

/// Whether a method's structural requirements can be met by a kind.
inline bool method_compatible(PatternKind kind, InterpMethod method) {
    switch (method) {
        case InterpMethod::LinearFrequency: return kind == PatternKind::Comb;
        case InterpMethod::Bilinear: return kind == PatternKind::Rectangular;
        default: return true;
    }
}

namespace detail {
class PlanBuilder;
}

/// Precomputed sparse interpolation: for every frame cell, the pilot
/// indices and weights combined into its estimate. Building the plan
/// once per pattern/method makes the per-realization work a sparse
/// matrix-vector product.
class InterpolationPlan {
  public:
    static InterpolationPlan build(const PilotPattern& pattern,
                                   InterpMethod method);

    void apply(std::span<const cplx> pilot_values, CirEstimate& out) const {
        const std::size_t cells = offsets_.size() - 1;
        out.h_hat.n_symbols = n_symbols_;
        out.h_hat.n_subcarriers = n_subcarriers_;
        out.h_hat.v.assign(cells, cplx{0.0, 0.0});
        out.provenance = provenance_;
        for (std::size_t c = 0; c < cells; ++c) {
            cplx acc{0.0, 0.0};
            for (std::uint32_t e = offsets_[c]; e < offsets_[c + 1]; ++e) {
                acc += weights_[e] * pilot_values[static_cast<std::size_t>(
                                         pilot_index_[e])];
            }
            out.h_hat.v[c] = acc;
        }
    }

    InterpMethod method() const { return method_; }
    int n_symbols() const { return n_symbols_; }
    int n_subcarriers() const { return n_subcarriers_; }
    std::size_t n_pilots() const { return n_pilots_; }
    bool edge_flagged(int n, int k) const {
        return edge_[static_cast<std::size_t>(n) * n_subcarriers_ + k] != 0;
    }
    std::size_t edge_count() const {
        std::size_t c = 0;
        for (auto f : edge_) c += f;
        return c;
    }

    /// Contributors of one cell, for inspection in tests.
    std::vector<std::pair<std::int32_t, double>> contributors(int n,
                                                              int k) const {
        const std::size_t c =
            static_cast<std::size_t>(n) * n_subcarriers_ + k;
        std::vector<std::pair<std::int32_t, double>> out;
        for (std::uint32_t e = offsets_[c]; e < offsets_[c + 1]; ++e) {
            out.emplace_back(pilot_index_[e], weights_[e]);
        }
        return out;
    }

  private:
    InterpMethod method_ = InterpMethod::Distance;
    int n_symbols_ = 0;
    int n_subcarriers_ = 0;
    std::size_t n_pilots_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<std::int32_t> pilot_index_;
    std::vector<double> weights_;
    std::vector<Provenance> provenance_;
    std::vector<std::uint8_t> edge_;

    friend class detail::PlanBuilder;
};

namespace detail {

class PlanBuilder {
  public:
    PlanBuilder(const PilotPattern& pattern, InterpMethod method)
        : pattern_(pattern) {
        plan_.method_ = method;
        plan_.n_symbols_ = pattern.n_symbols;
        plan_.n_subcarriers_ = pattern.n_subcarriers;
        plan_.n_pilots_ = pattern.pilot_cells.size();
        const std::size_t cells =
            static_cast<std::size_t>(pattern.n_symbols) * pattern.n_subcarriers;
        plan_.offsets_.reserve(cells + 1);
        plan_.offsets_.push_back(0);
        plan_.provenance_.assign(cells, Provenance::Unfilled);
        plan_.edge_.assign(cells, 0);
    }

    void add(std::int32_t pilot, double weight) {
        plan_.pilot_index_.push_back(pilot);
        plan_.weights_.push_back(weight);
    }

    void finish_cell(std::size_t cell, Provenance prov, bool edge = false) {
        plan_.offsets_.push_back(
            static_cast<std::uint32_t>(plan_.pilot_index_.size()));
        plan_.provenance_[cell] = prov;
        plan_.edge_[cell] = edge ? 1 : 0;
    }

    InterpolationPlan take() { return std::move(plan_); }

  private:
    const PilotPattern& pattern_;
    InterpolationPlan plan_;
};

// Seven nearest pilots by snapped-cell distance; ties resolved toward
// the earlier (symbol, subcarrier) pilot. Used for the distance method
// on patterns without a usable single-point lattice (line kinds and the
// honeycomb motif).
inline std::vector<std::int32_t> nearest_pilots(const PilotPattern& pattern,
                                                Vec2 pos, std::size_t want) {
    struct Entry {
        double d2;
        std::int32_t idx;
    };
    std::vector<Entry> entries;
    entries.reserve(pattern.pilot_cells.size());
    const double at = pattern.scale.alpha_t;
    const double af = pattern.scale.alpha_f;
    for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
        const PilotCell c = pattern.pilot_cells[i];
        const double dt = pos.t - c.symbol * at;
        const double df = pos.f - c.subcarrier * af;
        entries.push_back({dt * dt + df * df, static_cast<std::int32_t>(i)});
    }
    const std::size_t n = std::min(want, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + n, entries.end(),
                      [](const Entry& a, const Entry& b) {
                          if (a.d2 != b.d2) return a.d2 < b.d2;
                          return a.idx < b.idx;
                      });
    std::vector<std::int32_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = entries[i].idx;
    return out;
}

} // namespace detail

inline InterpolationPlan InterpolationPlan::build(const PilotPattern& pattern,
                                                  InterpMethod method) {
    if (!pattern.rasterized()) {
        throw std::invalid_argument("interpolation plan: pattern is not rasterized");
    }
    if (!method_compatible(pattern.kind(), method)) {
        throw ConfigError(std::string("method '") + to_string(method) +
                          "' is incompatible with pattern '" +
                          to_string(pattern.kind()) + "'");
    }
    detail::PlanBuilder builder(pattern, method);
    const int ns = pattern.n_symbols;
    const int nk = pattern.n_subcarriers;
    const double at = pattern.scale.alpha_t;
    const double af = pattern.scale.alpha_f;

    auto pilot_pos = [&](std::int32_t idx) {
        const PilotCell c = pattern.pilot_cells[static_cast<std::size_t>(idx)];
        return Vec2{c.symbol * at, c.subcarrier * af};
    };

    switch (method) {
        case InterpMethod::Distance: {
            const AbsorptionMap map = absorption_map(pattern, [&] {
                OfdmGridSpec f;
                f.n_symbols = ns;
                f.n_subcarriers = nk;
                return f;
            }());
            const bool bravais = detail::is_bravais_point_kind(pattern.kind());
            std::vector<Vec2> pos;
            for (int n = 0; n < ns; ++n) {
                for (int k = 0; k < nk; ++k) {
                    const std::size_t cell =
                        static_cast<std::size_t>(n) * nk + k;
                    const std::int32_t self = pattern.find_pilot(n, k);
                    if (self >= 0) {
                        builder.add(self, 1.0);
                        builder.finish_cell(cell, Provenance::PilotLs);
                        continue;
                    }
                    std::vector<std::int32_t> chosen;
                    bool edge = false;
                    if (bravais) {
                        const PilotSelection sel =
                            select_pilot_cell({n, k}, pattern, map);
                        chosen = sel.pilot_indices;
                        edge = sel.edge_flagged;
                    } else {
                        chosen = detail::nearest_pilots(
                            pattern, {n * at, k * af}, 7);
                        edge = chosen.size() < 7;
                    }
                    pos.clear();
                    for (std::int32_t idx : chosen) pos.push_back(pilot_pos(idx));
                    const DistanceWeights w =
                        distance_weights({n * at, k * af}, pos);
                    for (std::size_t i = 0; i < chosen.size(); ++i) {
                        builder.add(chosen[i], w.weights[i]);
                    }
                    builder.finish_cell(cell, Provenance::InterpDistance, edge);
                }
            }
            break;
        }
        case InterpMethod::LinearFrequency: {
            std::vector<int> cols;
            for (const PilotCell& c : pattern.pilot_cells) {
                if (cols.empty() || cols.back() != c.subcarrier) {
                    if (std::find(cols.begin(), cols.end(), c.subcarrier) ==
                        cols.end()) {
                        cols.push_back(c.subcarrier);
                    }
                }
            }
            std::sort(cols.begin(), cols.end());
            if (pattern.pilot_cells.size() !=
                cols.size() * static_cast<std::size_t>(ns)) {
                throw ConfigError(
                    "linear-frequency needs full pilot subcarriers (comb)");
            }
            for (int n = 0; n < ns; ++n) {
                for (int k = 0; k < nk; ++k) {
                    const std::size_t cell =
                        static_cast<std::size_t>(n) * nk + k;
                    const std::int32_t self = pattern.find_pilot(n, k);
                    if (self >= 0) {
                        builder.add(self, 1.0);
                        builder.finish_cell(cell, Provenance::PilotLs);
                        continue;
                    }
                    // bracketing pilot columns; the end segments extend
                    // past the last column (weights leave [0, 1])
                    std::size_t hi =
                        std::upper_bound(cols.begin(), cols.end(), k) -
                        cols.begin();
                    bool edge = false;
                    if (cols.size() == 1) {
                        builder.add(pattern.find_pilot(n, cols[0]), 1.0);
                        builder.finish_cell(cell, Provenance::InterpLinear, true);
                        continue;
                    }
                    if (hi == 0) {
                        hi = 1;
                        edge = true;
                    } else if (hi == cols.size()) {
                        hi = cols.size() - 1;
                        edge = true;
                    }
                    const int k0 = cols[hi - 1];
                    const int k1 = cols[hi];
                    const double t =
                        static_cast<double>(k - k0) / (k1 - k0);
                    builder.add(pattern.find_pilot(n, k0), 1.0 - t);
                    builder.add(pattern.find_pilot(n, k1), t);
                    builder.finish_cell(cell, Provenance::InterpLinear, edge);
                }
            }
            break;
        }
        case InterpMethod::Bilinear: {
            std::vector<int> rows, cols;
            for (const PilotCell& c : pattern.pilot_cells) {
                if (std::find(rows.begin(), rows.end(), c.symbol) == rows.end()) {
                    rows.push_back(c.symbol);
                }
                if (std::find(cols.begin(), cols.end(), c.subcarrier) ==
                    cols.end()) {
                    cols.push_back(c.subcarrier);
                }
            }
            std::sort(rows.begin(), rows.end());
            std::sort(cols.begin(), cols.end());
            if (pattern.pilot_cells.size() != rows.size() * cols.size()) {
                throw ConfigError("bilinear needs a full rectangular pilot grid");
            }
            for (int r : rows) {
                for (int c : cols) {
                    if (pattern.find_pilot(r, c) < 0) {
                        throw ConfigError(
                            "bilinear needs a full rectangular pilot grid");
                    }
                }
            }
            auto bracket = [](const std::vector<int>& axis, int x, int& a,
                              int& b, double& u, bool& edge) {
                if (axis.size() == 1) {
                    a = b = axis[0];
                    u = 0.0;
                    edge = true;
                    return;
                }
                std::size_t hi =
                    std::upper_bound(axis.begin(), axis.end(), x) - axis.begin();
                edge = false;
                if (hi == 0) {
                    hi = 1;
                    edge = x < axis.front();
                } else if (hi == axis.size()) {
                    hi = axis.size() - 1;
                    edge = x > axis.back();
                }
                a = axis[hi - 1];
                b = axis[hi];
                u = static_cast<double>(x - a) / (b - a);
            };
            for (int n = 0; n < ns; ++n) {
                for (int k = 0; k < nk; ++k) {
                    const std::size_t cell =
                        static_cast<std::size_t>(n) * nk + k;
                    const std::int32_t self = pattern.find_pilot(n, k);
                    if (self >= 0) {
                        builder.add(self, 1.0);
                        builder.finish_cell(cell, Provenance::PilotLs);
                        continue;
                    }
                    int r0, r1, c0, c1;
                    double u, v;
                    bool er, ec;
                    bracket(rows, n, r0, r1, u, er);
                    bracket(cols, k, c0, c1, v, ec);
                    struct Corner {
                        int r, c;
                        double w;
                    };
                    const Corner corners[4] = {
                        {r0, c0, (1.0 - u) * (1.0 - v)},
                        {r0, c1, (1.0 - u) * v},
                        {r1, c0, u * (1.0 - v)},
                        {r1, c1, u * v},
                    };
                    double acc[4];
                    int idx4[4];
                    int cnt = 0;
                    for (const Corner& co : corners) {
                        const std::int32_t pi = pattern.find_pilot(co.r, co.c);
                        bool merged = false;
                        for (int i = 0; i < cnt; ++i) {
                            if (idx4[i] == pi) {
                                acc[i] += co.w;
                                merged = true;
                                break;
                            }
                        }
                        if (!merged) {
                            idx4[cnt] = pi;
                            acc[cnt] = co.w;
                            ++cnt;
                        }
                    }
                    for (int i = 0; i < cnt; ++i) builder.add(idx4[i], acc[i]);
                    builder.finish_cell(cell, Provenance::InterpBilinear,
                                        er || ec);
                }
            }
            break;
        }
        case InterpMethod::AxisLinear: {
            // 1-D linear interpolation along the axis with the smaller
            // pilot projection spacing; within a pilot column the
            // closest pilot in the other coordinate stands in.
            const PatternMetrics pm = [&] {
                PatternMetrics m;
                if (is_line_kind(pattern.kind())) {
                    const bool comb = pattern.kind() == PatternKind::Comb;
                    m.d_t = comb ? 0.0 : pattern.basis.e2.t;
                    m.d_f = comb ? pattern.basis.e2.f : 0.0;
                } else {
                    const auto pt = detail::projection_spacing(pattern.basis, true);
                    const auto pf = detail::projection_spacing(pattern.basis, false);
                    m.d_t = pt.spacing;
                    m.d_f = pf.spacing;
                }
                return m;
            }();
            const bool along_freq =
                pm.d_f > 0.0 && (pm.d_t <= 0.0 || pm.d_f <= pm.d_t);
            if (pm.d_f <= 0.0 && pm.d_t <= 0.0) {
                throw ConfigError("axis-linear: no usable pilot projection axis");
            }

            // pilots grouped by their coordinate along the chosen axis
            std::map<int, std::vector<std::int32_t>> columns;
            for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
                const PilotCell c = pattern.pilot_cells[i];
                const int key = along_freq ? c.subcarrier : c.symbol;
                columns[key].push_back(static_cast<std::int32_t>(i));
            }
            std::vector<int> keys;
            keys.reserve(columns.size());
            for (const auto& [key, list] : columns) keys.push_back(key);

            auto closest_in_column = [&](int key, int other) {
                const auto& list = columns[key];
                std::int32_t best = list.front();
                int best_gap = std::numeric_limits<int>::max();
                for (std::int32_t idx : list) {
                    const PilotCell c =
                        pattern.pilot_cells[static_cast<std::size_t>(idx)];
                    const int o = along_freq ? c.symbol : c.subcarrier;
                    const int gap = std::abs(o - other);
                    if (gap < best_gap) {
                        best_gap = gap;
                        best = idx;
                    }
                }
                return best;
            };

            for (int n = 0; n < ns; ++n) {
                for (int k = 0; k < nk; ++k) {
                    const std::size_t cell =
                        static_cast<std::size_t>(n) * nk + k;
                    const std::int32_t self = pattern.find_pilot(n, k);
                    if (self >= 0) {
                        builder.add(self, 1.0);
                        builder.finish_cell(cell, Provenance::PilotLs);
                        continue;
                    }
                    const int x = along_freq ? k : n;
                    const int other = along_freq ? n : k;
                    const std::size_t hi =
                        std::upper_bound(keys.begin(), keys.end(), x) -
                        keys.begin();
                    const bool has_lo = hi > 0;
                    const bool has_hi = hi < keys.size();
                    bool edge = false;
                    if (has_lo && has_hi) {
                        const int klo = keys[hi - 1];
                        const int khi = keys[hi];
                        const std::int32_t plo = closest_in_column(klo, other);
                        const std::int32_t phi = closest_in_column(khi, other);
                        if (klo == x) {
                            builder.add(plo, 1.0);
                        } else {
                            const double t =
                                static_cast<double>(x - klo) / (khi - klo);
                            builder.add(plo, 1.0 - t);
                            builder.add(phi, t);
                        }
                    } else {
                        const int key = has_lo ? keys[hi - 1] : keys[hi];
                        builder.add(closest_in_column(key, other), 1.0);
                        edge = true;
                    }
                    builder.finish_cell(cell, Provenance::InterpAxisLinear,
                                        edge);
                }
            }
            break;
        }
    }
    return builder.take();
}

/// Fills the whole frame from pilot least-squares estimates.
inline CirEstimate interpolate(const CirEstimate& estimates_at_pilots,
                               const PilotPattern& pattern,
                               InterpMethod method) {
    if (!pattern.rasterized()) {
        throw std::invalid_argument("interpolate: pattern is not rasterized");
    }
    std::vector<cplx> pilot_values(pattern.pilot_cells.size());
    for (std::size_t i = 0; i < pattern.pilot_cells.size(); ++i) {
        const PilotCell c = pattern.pilot_cells[i];
        pilot_values[i] = estimates_at_pilots.h_hat.at(c.symbol, c.subcarrier);
    }
    const InterpolationPlan plan = InterpolationPlan::build(pattern, method);
    CirEstimate out(pattern.n_symbols, pattern.n_subcarriers);
    plan.apply(pilot_values, out);
    return out;
}

/// Predicted pilot-noise contribution to the estimate,
/// MSE = sigma_n^2 * mean(sum_i k_i^2), from sampled weight sets.
struct PilotMsePrediction {
    double mse = 0.0;
    double factor = 0.0;
    double db_reduction = 0.0;
};

inline PilotMsePrediction predicted_pilot_mse(
    std::span<const DistanceWeights> samples, double sigma_n2) {
    if (samples.empty()) {
        throw std::invalid_argument("predicted_pilot_mse: empty sample set");
    }
    if (sigma_n2 < 0.0 || !std::isfinite(sigma_n2)) {
        throw std::invalid_argument("predicted_pilot_mse: bad noise variance");
    }
    double acc = 0.0;
    for (const DistanceWeights& w : samples) acc += w.sum_squared();
    PilotMsePrediction p;
    p.factor = acc / static_cast<double>(samples.size());
    p.mse = sigma_n2 * p.factor;
    p.db_reduction = 10.0 * std::log10(1.0 / p.factor);
    return p;
}

/// Draws data positions uniformly over the absorption region of the
/// origin pilot (rejection sampling against the lattice) and evaluates
/// the 7-pilot distance weights at each position.
inline std::vector<DistanceWeights> sample_cell_weight_factor(
    const LatticeBasis& basis, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) {
        throw std::invalid_argument("sample_cell_weight_factor: n_samples < 1");
    }
    if (basis.motif.size() != 1) {
        throw std::invalid_argument(
            "sample_cell_weight_factor: needs a single-point lattice");
    }
    const Vec2 e1 = basis.e1;
    const Vec2 e2 = basis.e2;
    const Vec2 pilots[7] = {Vec2{0.0, 0.0}, e1, -e1, e2, -e2, e1 - e2, e2 - e1};

    std::vector<Vec2> window;
    for (int m = -2; m <= 2; ++m) {
        for (int n = -2; n <= 2; ++n) {
            window.push_back(e1 * m + e2 * n);
        }
    }

    Rng rng(seed);
    std::vector<DistanceWeights> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    while (out.size() < static_cast<std::size_t>(n_samples)) {
        const double u = 2.0 * rng.uniform() - 1.0;
        const double v = 2.0 * rng.uniform() - 1.0;
        const Vec2 p = e1 * u + e2 * v;
        const double d0 = p.norm2();
        bool inside = true;
        for (const Vec2& q : window) {
            if (q.t == 0.0 && q.f == 0.0) continue;
            if ((p - q).norm2() < d0) {
                inside = false;
                break;
            }
        }
        if (!inside) continue;
        out.push_back(distance_weights(p, pilots));
    }
    return out;
}

} // namespace pilotgrid
