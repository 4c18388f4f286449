#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pilotgrid {

using cplx = std::complex<double>;

/// Raised for malformed configuration (files, field values, incompatible
/// pattern/method pairs). Precondition violations on individual operations
/// throw std::invalid_argument instead.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Point in the regularized time-frequency plane. t grows with the OFDM
/// symbol index, f with the subcarrier index.
struct Vec2 {
    double t = 0.0;
    double f = 0.0;

    Vec2 operator+(Vec2 o) const { return {t + o.t, f + o.f}; }
    Vec2 operator-(Vec2 o) const { return {t - o.t, f - o.f}; }
    Vec2 operator*(double s) const { return {t * s, f * s}; }
    Vec2 operator-() const { return {-t, -f}; }

    double dot(Vec2 o) const { return t * o.t + f * o.f; }
    double cross(Vec2 o) const { return t * o.f - f * o.t; }
    double norm2() const { return t * t + f * f; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Derives an independent stream seed from a master seed and stream tags.
/// Used so that channel, payload bits, noise and pilot symbols each get
/// their own reproducible stream per repetition.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(master ^ 0x6d5f8a3c2b1e9d47ull);
    h = detail::splitmix64(h ^ tag);
    h = detail::splitmix64(h ^ index);
    return h;
}

/// Deterministic random source. Gaussian draws use Box-Muller on explicit
/// 53-bit uniforms so sequences are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [0, 1) excluding 0 (safe for logs).
    double uniform_pos() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    /// Standard normal.
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double a = 2.0 * pi_ * uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly symmetric complex normal with unit variance
    /// (E|z|^2 = 1, i.e. each component has variance 1/2).
    cplx cgauss_unit() {
        const double r = std::sqrt(-std::log(uniform_pos()));
        const double a = 2.0 * pi_ * uniform();
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    static constexpr double pi_ = 3.141592653589793238462643383279502884;
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Dense row-major grid over the frame, indexed (symbol, subcarrier).
struct ComplexGrid {
    int n_symbols = 0;
    int n_subcarriers = 0;
    std::vector<cplx> v;

    ComplexGrid() = default;
    ComplexGrid(int symbols, int subcarriers)
        : n_symbols(symbols), n_subcarriers(subcarriers),
          v(static_cast<std::size_t>(symbols) * subcarriers) {}

    std::size_t size() const { return v.size(); }

    cplx& at(int n, int k) {
        return v[static_cast<std::size_t>(n) * n_subcarriers + k];
    }
    cplx at(int n, int k) const {
        return v[static_cast<std::size_t>(n) * n_subcarriers + k];
    }
};

/// Shortest decimal form that round-trips exactly through from_chars.
inline std::string format_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double x = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b != e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, x);
    if (res.ec != std::errc()) {
        throw ConfigError("not a number: '" + s + "'");
    }
    return x;
}

inline long long parse_int(const std::string& s) {
    long long x = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b != e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, x);
    if (res.ec != std::errc()) {
        throw ConfigError("not an integer: '" + s + "'");
    }
    return x;
}

} // namespace pilotgrid
