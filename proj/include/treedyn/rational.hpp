#pragma once

// Exact rational scalar used for every coordinate, length and parameter.
// All set identities (fixed sets, images, stabilization) rely on exact
// comparisons, so nothing in the library stores a floating-point value.

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace treedyn {

using rat = mpq_class;

// Raised on malformed user input (bad config, invalid point, bad flag value).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a configured resource cap (breakpoints, pairs, level) is exceeded.
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline rat make_rat(long num, long den) {
    rat q(num, den);
    q.canonicalize();
    return q;
}

// Parses "p/q" or "p". Throws input_error on malformed text or q == 0.
inline rat parse_rat(const std::string& text) {
    if (text.empty()) throw input_error("empty rational literal");
    for (char c : text)
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-'))
            throw input_error("malformed rational literal '" + text + "'");
    mpq_class q;
    if (q.set_str(text, 10) != 0) throw input_error("malformed rational literal '" + text + "'");
    if (q.get_den() == 0) throw input_error("zero denominator in '" + text + "'");
    q.canonicalize();
    return q;
}

// Canonical text form: "p" when the denominator is 1, else "p/q".
inline std::string rat_str(const rat& q) {
    return q.get_str();
}

inline double rat_approx(const rat& q) { return q.get_d(); }

// ceil(a / b) for b > 0.
inline mpz_class ceil_div(const mpz_class& a, const mpz_class& b) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

// Number of subdivisions needed so pieces of `length` are at most `step` long.
inline long subdivision_count(const rat& length, const rat& step) {
    mpz_class n = ceil_div(length.get_num() * step.get_den(), length.get_den() * step.get_num());
    if (n < 1) n = 1;
    if (!n.fits_slong_p()) throw resource_error("subdivision count overflow");
    return n.get_si();
}

// Orbit values are snapped to the dyadic grid 2^-snap_bits once their
// denominator outgrows it. Keeps long orbit arithmetic bounded while leaving
// small-denominator (periodic) orbits exact.
inline constexpr int orbit_snap_bits = 128;

inline rat snap_to_grid(const rat& q, int bits = orbit_snap_bits) {
    if (mpz_sizeinbase(q.get_den().get_mpz_t(), 2) <= static_cast<size_t>(bits)) return q;
    mpz_class scale = mpz_class(1) << bits;
    // round to nearest, half toward zero; deterministic
    mpz_class num2 = q.get_num() * scale * 2 + q.get_den();
    mpz_class k;
    mpz_fdiv_q(k.get_mpz_t(), num2.get_mpz_t(), mpz_class(q.get_den() * 2).get_mpz_t());
    rat out(k, scale);
    out.canonicalize();
    return out;
}

inline std::size_t hash_mpz(const mpz_class& z) {
    // cheap stable digest; collisions only cost an equality check
    return static_cast<std::size_t>(mpz_fdiv_ui(z.get_mpz_t(), 2305843009213693951ULL)) ^
           (mpz_sgn(z.get_mpz_t()) < 0 ? 0x9e3779b97f4a7c15ULL : 0ULL);
}

inline std::size_t hash_rat(const rat& q) {
    std::size_t h = hash_mpz(q.get_num());
    h ^= hash_mpz(q.get_den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

}  // namespace treedyn
