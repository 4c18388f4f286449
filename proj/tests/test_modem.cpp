#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pilotgrid/modem.hpp"

using namespace pilotgrid;

namespace {

double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

int hamming(std::uint32_t a, std::uint32_t b) {
    return __builtin_popcount(a ^ b);
}

OfdmGridSpec frame_of(int symbols, int subcarriers) {
    OfdmGridSpec f;
    f.n_symbols = symbols;
    f.n_subcarriers = subcarriers;
    return f;
}

} // namespace

TEST_CASE("constellation mappings and energies", "[modem]") {
    const Constellation qpsk = Constellation::qpsk();
    const double a = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(qpsk.map_group(0b00) - cplx{a, a}) < 1e-15);
    CHECK(std::abs(qpsk.map_group(0b01) - cplx{a, -a}) < 1e-15);
    CHECK(std::abs(qpsk.map_group(0b10) - cplx{-a, a}) < 1e-15);
    CHECK(std::abs(qpsk.map_group(0b11) - cplx{-a, -a}) < 1e-15);

    const Constellation q16 = Constellation::qam16();
    const double d16 = 1.0 / std::sqrt(10.0);
    CHECK(std::abs(q16.map_group(0b0000) - cplx{-3.0 * d16, -3.0 * d16}) < 1e-15);
    CHECK(std::abs(q16.map_group(0b1110) - cplx{d16, 3.0 * d16}) < 1e-15);

    const Constellation q8 = Constellation::qam8();
    const double d8 = 1.0 / std::sqrt(6.0);
    CHECK(q8.points.size() == 8);
    CHECK(std::abs(q8.map_group(0b000) - cplx{-3.0 * d8, d8}) < 1e-15);
    CHECK(std::abs(q8.map_group(0b101) - cplx{3.0 * d8, -d8}) < 1e-15);

    for (const Constellation& c : {qpsk, q8, q16}) {
        INFO(c.name);
        CHECK(c.es() == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(c.points.size() == (std::size_t{1} << c.bits_per_symbol));
    }

    CHECK(Constellation::by_name("qpsk").bits_per_symbol == 2);
    CHECK(Constellation::by_name("8qam").bits_per_symbol == 3);
    CHECK(Constellation::by_name("16qam").bits_per_symbol == 4);
    CHECK_THROWS_AS(Constellation::by_name("64qam"), ConfigError);
}

TEST_CASE("nearest neighbors differ in a single bit", "[modem]") {
    for (const Constellation& c : {Constellation::qpsk(), Constellation::qam8(),
                                   Constellation::qam16()}) {
        double dmin = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            for (std::size_t j = i + 1; j < c.points.size(); ++j) {
                dmin = std::min(dmin, std::abs(c.points[i] - c.points[j]));
            }
        }
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            for (std::size_t j = i + 1; j < c.points.size(); ++j) {
                if (std::abs(c.points[i] - c.points[j]) < dmin * 1.001) {
                    INFO(c.name << " labels " << c.labels[i] << " vs "
                                << c.labels[j]);
                    CHECK(hamming(c.labels[i], c.labels[j]) == 1);
                }
            }
        }
    }
}

TEST_CASE("modulation round trips without noise", "[modem]") {
    for (const Constellation& c : {Constellation::qpsk(), Constellation::qam8(),
                                   Constellation::qam16()}) {
        const std::vector<std::uint8_t> bits =
            random_bits(static_cast<std::size_t>(c.bits_per_symbol) * 200, 5);
        const std::vector<cplx> syms = modulate(bits, c);
        REQUIRE(syms.size() == 200);

        std::vector<std::uint8_t> back(bits.size());
        for (std::size_t s = 0; s < syms.size(); ++s) {
            demap_symbol(syms[s], c,
                         &back[s * static_cast<std::size_t>(c.bits_per_symbol)]);
        }
        CHECK(std::equal(bits.begin(), bits.end(), back.begin()));
    }

    CHECK_THROWS_AS(modulate(std::vector<std::uint8_t>{1, 0, 1},
                             Constellation::qpsk()),
                    std::invalid_argument);
}

TEST_CASE("random bit generator is deterministic and balanced", "[modem]") {
    const auto a = random_bits(10000, 9);
    const auto b = random_bits(10000, 9);
    const auto c = random_bits(10000, 10);
    CHECK(a == b);
    CHECK(a != c);
    double ones = 0.0;
    for (std::uint8_t bit : a) {
        CHECK((bit == 0 || bit == 1));
        ones += bit;
    }
    CHECK(ones / 10000.0 == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("frame builder fills pilots and payload", "[modem]") {
    const OfdmGridSpec frame = frame_of(32, 32);
    const PilotPattern p =
        rasterize(make_pattern(PatternKind::Cell, 0.06, {1.0, 1.0}), frame);
    const Constellation c = Constellation::qpsk();
    const std::size_t n_data = frame.n_cells() - p.pilot_cells.size();
    const std::vector<std::uint8_t> bits = random_bits(n_data * 2, 77);

    const OfdmFrame f = build_frame(bits, p, c, 11);
    CHECK(f.n_data_cells == n_data);
    CHECK(f.bits.size() == n_data * 2);
    CHECK(f.es == 1.0);
    REQUIRE(f.pilot_values.size() == p.pilot_cells.size());

    for (std::size_t i = 0; i < p.pilot_cells.size(); ++i) {
        const PilotCell cell = p.pilot_cells[i];
        CHECK(f.grid.at(cell.symbol, cell.subcarrier) == f.pilot_values[i]);
        CHECK(std::abs(std::abs(f.pilot_values[i]) - 1.0) < 1e-12);
    }
    // payload symbols come from the constellation
    for (int n = 0; n < frame.n_symbols; ++n) {
        for (int k = 0; k < frame.n_subcarriers; ++k) {
            if (p.find_pilot(n, k) >= 0) continue;
            const cplx v = f.grid.at(n, k);
            double best = 1e9;
            for (const cplx& pt : c.points) {
                best = std::min(best, std::abs(v - pt));
            }
            CHECK(best < 1e-12);
        }
    }

    // deterministic in the pilot seed
    const OfdmFrame f2 = build_frame(bits, p, c, 11);
    CHECK(std::equal(f.pilot_values.begin(), f.pilot_values.end(),
                     f2.pilot_values.begin()));
    const OfdmFrame f3 = build_frame(bits, p, c, 12);
    CHECK(!std::equal(f.pilot_values.begin(), f.pilot_values.end(),
                      f3.pilot_values.begin()));

    CHECK_THROWS_AS(build_frame(random_bits(10, 1), p, c, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_frame(bits, make_pattern(PatternKind::Cell, 0.1), c, 1),
                    std::invalid_argument);
}

TEST_CASE("perfect knowledge and clean channel decode perfectly", "[modem]") {
    const OfdmGridSpec frame = frame_of(16, 16);
    const PilotPattern p =
        rasterize(make_pattern(PatternKind::Rectangular, 0.0625), frame);
    const Constellation c = Constellation::qam16();
    const std::size_t n_data = frame.n_cells() - p.pilot_cells.size();
    const OfdmFrame f = build_frame(random_bits(n_data * 4, 3), p, c, 4);

    // an arbitrary nonzero channel
    CirEstimate est(16, 16);
    ComplexGrid y(16, 16);
    Rng rng(8);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        cplx h = rng.cgauss_unit();
        if (std::abs(h) < 0.1) h = cplx{1.0, 0.0};
        est.h_hat.v[i] = h;
        y.v[i] = h * f.grid.v[i];
    }

    const DemapResult r = equalize_demap(y, est, f, p, c);
    CHECK(r.error_count == 0.0);
    CHECK(r.ber == 0.0);
    CHECK(r.erased_cells == 0);
    CHECK(r.n_bits == n_data * 4);
}

TEST_CASE("inverted and erased estimates are charged errors", "[modem]") {
    // one pilot at (0,0), one data cell at (0,1)
    const OfdmGridSpec frame = frame_of(1, 2);
    const PilotPattern p = rasterize(make_pattern(PatternKind::Comb, 0.5), frame);
    REQUIRE(p.pilot_cells.size() == 1);
    const Constellation c = Constellation::qpsk();
    const OfdmFrame f = build_frame(random_bits(2, 21), p, c, 6);

    ComplexGrid y = f.grid; // ideal channel h = 1

    CirEstimate flipped(1, 2);
    flipped.h_hat.at(0, 1) = cplx{-1.0, 0.0}; // antipodal equalization
    const DemapResult rf = equalize_demap(y, flipped, f, p, c);
    CHECK(rf.n_bits == 2);
    CHECK(rf.error_count == 2.0);
    CHECK(rf.ber == 1.0);

    CirEstimate erased(1, 2); // estimate left at zero
    const DemapResult re = equalize_demap(y, erased, f, p, c);
    CHECK(re.erased_cells == 1);
    CHECK(re.error_count == 1.0);
    CHECK(re.ber == 0.5);

    CHECK_THROWS_AS(equalize_demap(ComplexGrid(2, 2), erased, f, p, c),
                    std::invalid_argument);
}

TEST_CASE("qpsk over awgn matches the analytic curve", "[modem]") {
    const Constellation c = Constellation::qpsk();
    const double ebn0_db = 4.0;
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    const double n0 = 1.0 / (c.bits_per_symbol * ebn0); // es = 1
    const double expected = q_func(std::sqrt(2.0 * ebn0)); // 0.0125008

    const std::size_t n_sym = 1000000;
    const std::vector<std::uint8_t> bits =
        random_bits(n_sym * static_cast<std::size_t>(c.bits_per_symbol), 1234);
    const std::vector<cplx> tx = modulate(bits, c);

    Rng noise(4321);
    const double sigma = std::sqrt(n0);
    std::size_t errors = 0;
    std::uint8_t group[8];
    for (std::size_t s = 0; s < n_sym; ++s) {
        const cplx y = tx[s] + sigma * noise.cgauss_unit();
        demap_symbol(y, c, group);
        for (int b = 0; b < c.bits_per_symbol; ++b) {
            errors += group[b] !=
                      bits[s * static_cast<std::size_t>(c.bits_per_symbol) + b];
        }
    }
    const double ber =
        static_cast<double>(errors) /
        static_cast<double>(n_sym * static_cast<std::size_t>(c.bits_per_symbol));
    CHECK(ber == Catch::Approx(expected).epsilon(0.05));
}

TEST_CASE("16qam over awgn matches the analytic curve", "[modem]") {
    const Constellation c = Constellation::qam16();
    const double ebn0 = std::pow(10.0, 6.0 / 10.0);
    const double n0 = 1.0 / (c.bits_per_symbol * ebn0);
    const double sigma_dim = std::sqrt(0.5 * n0);
    const double d = 1.0 / std::sqrt(10.0);
    // exact Gray 4-PAM bit error rate per axis
    const double q1 = q_func(d / sigma_dim);
    const double q3 = q_func(3.0 * d / sigma_dim);
    const double q5 = q_func(5.0 * d / sigma_dim);
    const double expected = (3.0 * q1 + 2.0 * q3 - q5) / 4.0;

    const std::size_t n_sym = 1000000;
    const std::vector<std::uint8_t> bits =
        random_bits(n_sym * static_cast<std::size_t>(c.bits_per_symbol), 555);
    const std::vector<cplx> tx = modulate(bits, c);

    Rng noise(556);
    const double sigma = std::sqrt(n0);
    std::size_t errors = 0;
    std::uint8_t group[8];
    for (std::size_t s = 0; s < n_sym; ++s) {
        const cplx y = tx[s] + sigma * noise.cgauss_unit();
        demap_symbol(y, c, group);
        for (int b = 0; b < c.bits_per_symbol; ++b) {
            errors += group[b] !=
                      bits[s * static_cast<std::size_t>(c.bits_per_symbol) + b];
        }
    }
    const double ber =
        static_cast<double>(errors) /
        static_cast<double>(n_sym * static_cast<std::size_t>(c.bits_per_symbol));
    CHECK(ber == Catch::Approx(expected).epsilon(0.05));
}
