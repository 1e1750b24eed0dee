#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace kstab {

using Rat = boost::multiprecision::mpq_rational;
using Int = std::int64_t;
using IVec = std::vector<Int>;

// Thrown for malformed input; the CLI maps it to exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double to_double(const Rat& q) { return q.convert_to<double>(); }
inline double to_double(double x) { return x; }

// Sign decisions. Exact for Rat; for doubles a fixed absolute slack is used,
// which is adequate for the O(1)..O(100) coordinates this code handles.
constexpr double kFloatSlack = 1e-9;

inline int sgn(const Rat& q) { return q.sign(); }
inline int sgn(double x) { return x > kFloatSlack ? 1 : (x < -kFloatSlack ? -1 : 0); }

template <class S>
bool is_zero(const S& x) { return sgn(x) == 0; }

template <class S>
S from_int(Int k) { return S(static_cast<long long>(k)); }

inline Int gcd_vec(const IVec& v)
{
    Int g = 0;
    for (Int x : v) g = std::gcd(g, x < 0 ? -x : x);
    return g;
}

inline bool is_primitive(const IVec& v) { return gcd_vec(v) == 1; }

// Real number read from input: exact when rational, otherwise a double.
struct RealInput {
    bool exact = true;
    Rat q;
    double approx = 0;
};

RealInput parse_real(const std::string& text);
RealInput real_from_double(double x);

std::string rat_to_string(const Rat& q);

// Rational vector helpers for PL slopes.
using QVec = std::vector<Rat>;

inline Int lcm_denominators(const QVec& a)
{
    Int l = 1;
    for (const auto& x : a) {
        Int d = boost::multiprecision::denominator(x).convert_to<Int>();
        l = std::lcm(l, d);
    }
    return l;
}

}  // namespace kstab
