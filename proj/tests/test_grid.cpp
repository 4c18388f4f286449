#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "pilotgrid/grid.hpp"

using namespace pilotgrid;

namespace {

constexpr double kRefDensity = 0.769800358919501; // 4 / (3 sqrt(3))

OfdmGridSpec small_frame(int symbols, int subcarriers) {
    OfdmGridSpec f;
    f.n_symbols = symbols;
    f.n_subcarriers = subcarriers;
    return f;
}

} // namespace

TEST_CASE("cell basis satisfies the construction identities", "[grid]") {
    const LatticeBasis b = cell_basis(1.0);

    CHECK(std::abs(b.e1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(b.e2.norm() - 1.0) < 1e-12);
    // cos(phi) = 3 cos(theta + phi) and 3 sin(phi) = sin(theta + phi)
    CHECK(std::abs(b.e1.t - 3.0 * b.e2.t) < 1e-12);
    CHECK(std::abs(3.0 * b.e1.f - b.e2.f) < 1e-12);
    // the vectors subtend theta = arccos(3/5)
    CHECK(std::abs(b.e1.dot(b.e2) - 0.6) < 1e-12);
    CHECK(std::abs(b.det() - 0.8) < 1e-12);
    // both projections collapse to a 1/sqrt(10) comb
    const double inv_sqrt10 = 1.0 / std::sqrt(10.0);
    CHECK(std::abs(b.e1.t - 3.0 * inv_sqrt10) < 1e-12);
    CHECK(std::abs(b.e1.f - inv_sqrt10) < 1e-12);
    CHECK(std::abs(b.e2.t - inv_sqrt10) < 1e-12);
    CHECK(std::abs(b.e2.f - 3.0 * inv_sqrt10) < 1e-12);

    const LatticeBasis b2 = cell_basis(2.5);
    CHECK(std::abs(b2.e1.t - 2.5 * b.e1.t) < 1e-12);
    CHECK(std::abs(b2.e2.f - 2.5 * b.e2.f) < 1e-12);

    CHECK_THROWS_AS(cell_basis(0.0), std::invalid_argument);
    CHECK_THROWS_AS(cell_basis(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(cell_basis(std::nan("")), std::invalid_argument);
}

TEST_CASE("make_pattern matches the requested point density", "[grid]") {
    for (PatternKind kind : {PatternKind::Cell, PatternKind::Rectangular,
                             PatternKind::Diamond, PatternKind::Parallelogram,
                             PatternKind::Hexagonal}) {
        for (double density : {0.05, 0.3, kRefDensity}) {
            const PilotPattern p = make_pattern(kind, density);
            CHECK(p.basis.point_density() ==
                  Catch::Approx(density).epsilon(1e-12));
        }
    }

    const PilotPattern cell = make_pattern(PatternKind::Cell, kRefDensity);
    CHECK(cell.basis.e1.norm() ==
          Catch::Approx(1.2742831836353419).epsilon(1e-12));

    const PilotPattern comb = make_pattern(PatternKind::Comb, 0.25);
    CHECK(comb.basis.e2.f == Catch::Approx(4.0));
    CHECK(comb.basis.e1.t == Catch::Approx(1.0));

    const PilotPattern block = make_pattern(PatternKind::Block, 0.25);
    CHECK(block.basis.e2.t == Catch::Approx(4.0));

    CHECK_THROWS_AS(make_pattern(PatternKind::Cell, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_pattern(PatternKind::Cell, -0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_pattern(PatternKind::Cell, std::nan("")),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_pattern(PatternKind::Cell, 1.0, {0.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("pattern kind names round trip", "[grid]") {
    for (PatternKind kind : {PatternKind::Block, PatternKind::Comb,
                             PatternKind::Rectangular, PatternKind::Hexagonal,
                             PatternKind::Parallelogram, PatternKind::Diamond,
                             PatternKind::Cell}) {
        CHECK(parse_pattern_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_pattern_kind("triangle"), std::invalid_argument);
    CHECK(is_line_kind(PatternKind::Comb));
    CHECK(is_line_kind(PatternKind::Block));
    CHECK_FALSE(is_line_kind(PatternKind::Cell));
}

TEST_CASE("rasterize places a square lattice exactly", "[grid]") {
    // spacing 4 in index units, so a 128 x 128 frame carries 32 x 32 pilots
    const PilotPattern proto = make_pattern(PatternKind::Rectangular, 1.0 / 16.0);
    const PilotPattern p = rasterize(proto, small_frame(128, 128));

    REQUIRE(p.rasterized());
    CHECK(p.pilot_cells.size() == 1024);
    CHECK(p.collisions == 0);
    CHECK(p.achieved_density == Catch::Approx(0.0625));
    for (const PilotCell& c : p.pilot_cells) {
        CHECK(c.symbol % 4 == 0);
        CHECK(c.subcarrier % 4 == 0);
    }
    CHECK(std::is_sorted(p.pilot_cells.begin(), p.pilot_cells.end()));

    // the dense map agrees with the cell list
    for (std::size_t i = 0; i < p.pilot_cells.size(); ++i) {
        const PilotCell c = p.pilot_cells[i];
        CHECK(p.find_pilot(c.symbol, c.subcarrier) ==
              static_cast<std::int32_t>(i));
    }
    CHECK(p.find_pilot(1, 1) == -1);
    CHECK(p.find_pilot(-1, 0) == -1);
    CHECK(p.find_pilot(0, 500) == -1);
}

TEST_CASE("rasterize hits the target cell fraction", "[grid]") {
    const double fraction = 0.057;
    const RegularizedScale scale{0.0192, 0.0146};
    const OfdmGridSpec frame = small_frame(64, 128);

    for (PatternKind kind : {PatternKind::Cell, PatternKind::Rectangular,
                             PatternKind::Diamond, PatternKind::Parallelogram,
                             PatternKind::Hexagonal, PatternKind::Comb,
                             PatternKind::Block}) {
        const double density = density_for_cell_fraction(kind, fraction, scale);
        const PilotPattern p = rasterize(make_pattern(kind, density, scale), frame);
        INFO("kind " << to_string(kind) << " achieved " << p.achieved_density);
        // whole pilot lines quantize coarsely; point lattices land tight
        const double tol = is_line_kind(kind)
                               ? 1.0 / (kind == PatternKind::Comb
                                            ? frame.n_subcarriers
                                            : frame.n_symbols)
                               : 0.005;
        CHECK(std::abs(p.achieved_density - fraction) <= tol);
    }
}

TEST_CASE("rasterize merges snapped duplicates and reports them", "[grid]") {
    // lattice spacing 0.4 along time collapses 2.5 points per index cell
    PilotPattern p;
    p.basis.e1 = {0.4, 0.0};
    p.basis.e2 = {0.0, 4.0};
    p.basis.kind = PatternKind::Rectangular;
    p.target_density = 1.0 / 1.6;

    const PilotPattern r = rasterize(p, small_frame(16, 16));
    CHECK(r.collisions > 0);
    CHECK(r.achieved_density <= 0.5);
    std::set<PilotCell> unique(r.pilot_cells.begin(), r.pilot_cells.end());
    CHECK(unique.size() == r.pilot_cells.size());
}

TEST_CASE("rasterize rejects degenerate requests", "[grid]") {
    // more than half of the frame on pilots
    CHECK_THROWS_AS(rasterize(make_pattern(PatternKind::Rectangular, 0.8),
                              small_frame(32, 32)),
                    ConfigError);

    // lattice entirely outside the frame: spacing 100, phased halfway
    PilotPattern far = make_pattern(PatternKind::Rectangular, 1e-4);
    far.basis.offset = {50.0, 50.0};
    CHECK_THROWS_AS(rasterize(far, small_frame(8, 8)), ConfigError);

    // not rasterizable without a frame
    CHECK_FALSE(make_pattern(PatternKind::Cell, 0.1).rasterized());
}

TEST_CASE("rasterize is deterministic", "[grid]") {
    const PilotPattern proto =
        make_pattern(PatternKind::Cell, 0.06, {1.0, 1.0});
    const PilotPattern a = rasterize(proto, small_frame(48, 64));
    const PilotPattern b = rasterize(proto, small_frame(48, 64));
    REQUIRE(a.pilot_cells.size() == b.pilot_cells.size());
    CHECK(std::equal(a.pilot_cells.begin(), a.pilot_cells.end(),
                     b.pilot_cells.begin()));
}

TEST_CASE("index snapping rounds half away from zero", "[grid]") {
    CHECK(detail::snap_index(1.5, 1.0) == 2);
    CHECK(detail::snap_index(-1.5, 1.0) == -2);
    CHECK(detail::snap_index(2.49, 1.0) == 2);
    CHECK(detail::snap_index(5.0, 2.0) == 3);
}

TEST_CASE("regularized scale from fourth moments", "[grid]") {
    const RegularizedScale s = RegularizedScale::from_moments(16.0, 1.0);
    CHECK(s.alpha_t == Catch::Approx(2.0));
    CHECK(s.alpha_f == Catch::Approx(1.0));

    // the index-domain spacing ratio d_t/d_f equals the scale ratio
    CHECK(eq1_scale_ratio(16.0, 1.0) ==
          Catch::Approx(s.alpha_f / s.alpha_t).epsilon(1e-12));
    CHECK(eq1_scale_ratio(1.0, 1.0) == Catch::Approx(1.0));
    CHECK(eq1_scale_ratio(1.0, 16.0) == Catch::Approx(2.0));

    CHECK_THROWS_AS(RegularizedScale::from_moments(-1.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(eq1_scale_ratio(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(eq1_scale_ratio(1.0, std::nan("")), std::invalid_argument);
}

TEST_CASE("sampling limits flag excessive spacing", "[grid]") {
    OfdmGridSpec frame;
    frame.n_fft = 128;
    frame.n_tx = 1;

    // normalized Doppler 0.0245 with 20-symbol spacing sits just inside
    const Eq2Report ok = eq2_validate_raw(0.0245, 0.0, frame, 20.0, 1.0);
    CHECK(ok.doppler_lhs == Catch::Approx(0.49));
    CHECK(ok.doppler_ok);
    CHECK(ok.delay_ok);
    CHECK(ok.all_ok());
    CHECK(ok.doppler_margin == Catch::Approx(0.01));

    // 0.03 over 20 symbols violates the half-cycle limit
    const Eq2Report bad = eq2_validate_raw(0.03, 10.0, frame, 20.0, 8.0);
    CHECK(bad.doppler_lhs == Catch::Approx(0.6));
    CHECK_FALSE(bad.doppler_ok);
    CHECK(bad.delay_lhs == Catch::Approx(8.0 * 10.0 / 128.0));
    CHECK(bad.delay_ok);
    CHECK_FALSE(bad.all_ok());

    CHECK_THROWS_AS(eq2_validate_raw(0.1, 0.0, frame, 0.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(eq2_validate_raw(-0.1, 0.0, frame, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("frame spec validation", "[grid]") {
    OfdmGridSpec f;
    CHECK(f.n_cells() == 128u * 64u);
    CHECK(f.t_sym() > f.t_useful());
    CHECK_NOTHROW(f.validate());

    OfdmGridSpec bad = f;
    bad.n_subcarriers = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = f;
    bad.n_cp = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = f;
    bad.n_fft = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pattern text export round trips", "[grid]") {
    const RegularizedScale scale{0.75, 1.25};
    const PilotPattern p = rasterize(
        make_pattern(PatternKind::Cell,
                     density_for_cell_fraction(PatternKind::Cell, 0.05, scale),
                     scale),
        small_frame(32, 32));

    std::stringstream ss;
    write_pattern(ss, p);
    const PilotPattern q = read_pattern(ss);

    CHECK(q.kind() == p.kind());
    CHECK(q.n_symbols == p.n_symbols);
    CHECK(q.n_subcarriers == p.n_subcarriers);
    CHECK(q.scale.alpha_t == p.scale.alpha_t);
    CHECK(q.scale.alpha_f == p.scale.alpha_f);
    CHECK(q.basis.e1.t == p.basis.e1.t);
    CHECK(q.basis.e2.f == p.basis.e2.f);
    CHECK(q.target_density == p.target_density);
    CHECK(q.achieved_density == p.achieved_density);
    REQUIRE(q.pilot_cells.size() == p.pilot_cells.size());
    CHECK(std::equal(q.pilot_cells.begin(), q.pilot_cells.end(),
                     p.pilot_cells.begin()));
    for (const PilotCell& c : q.pilot_cells) {
        CHECK(q.find_pilot(c.symbol, c.subcarrier) >= 0);
    }

    std::stringstream garbage("not a pattern\n");
    CHECK_THROWS_AS(read_pattern(garbage), ConfigError);
}

TEST_CASE("hexagonal motif doubles the density", "[grid]") {
    const PilotPattern hex = make_pattern(PatternKind::Hexagonal, 0.4);
    REQUIRE(hex.basis.motif.size() == 2);
    CHECK(hex.basis.point_density() == Catch::Approx(0.4).epsilon(1e-12));

    // motif points appear in the raster
    const PilotPattern r = rasterize(
        make_pattern(PatternKind::Hexagonal, 0.05, {1.0, 1.0}),
        small_frame(64, 64));
    CHECK(std::abs(r.achieved_density - 0.05) < 0.01);
}
