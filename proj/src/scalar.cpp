#include "kstab/scalar.hpp"

#include <charconv>
#include <regex>

namespace kstab {

namespace {

Rat parse_decimal(const std::string& s)
{
    static const std::regex re(R"(^\s*([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, re) || (m[2].length() == 0 && m[3].length() == 0))
        throw ValidationError("not a number: '" + s + "'");
    std::string digits = m[2].str() + m[3].str();
    if (digits.empty()) digits = "0";
    Rat q{boost::multiprecision::mpz_int(digits)};
    long exp10 = -static_cast<long>(m[3].length());
    if (m[4].matched) exp10 += std::stol(m[4].str());
    boost::multiprecision::mpz_int p = 1;
    for (long i = 0; i < std::labs(exp10); ++i) p *= 10;
    q = exp10 >= 0 ? q * Rat(p) : q / Rat(p);
    return m[1].str() == "-" ? Rat(-q) : q;
}

Rat parse_rational(const std::string& s)
{
    auto slash = s.find('/');
    if (slash == std::string::npos) return parse_decimal(s);
    Rat den = parse_decimal(s.substr(slash + 1));
    if (den == 0) throw ValidationError("zero denominator in '" + s + "'");
    return parse_decimal(s.substr(0, slash)) / den;
}

}  // namespace

RealInput parse_real(const std::string& text)
{
    // Accepted forms: "p/q", decimals, and "[r*]sqrt(k)[/d]" for quadratic irrationals.
    static const std::regex sq(R"(^\s*(?:([^*]+)\*)?sqrt\(\s*(\d+)\s*\)(?:\s*/\s*(\S+))?\s*$)");
    std::smatch m;
    RealInput r;
    if (std::regex_match(text, m, sq)) {
        Rat coef = m[1].matched ? parse_rational(m[1].str()) : Rat(1);
        if (m[3].matched) coef /= parse_rational(m[3].str());
        long k = std::stol(m[2].str());
        long root = std::lround(std::sqrt(static_cast<double>(k)));
        if (root * root == k) {
            r.q = coef * root;
            r.approx = to_double(r.q);
            return r;
        }
        r.exact = false;
        r.approx = to_double(coef) * std::sqrt(static_cast<double>(k));
        return r;
    }
    r.q = parse_rational(text);
    r.approx = to_double(r.q);
    return r;
}

RealInput real_from_double(double x)
{
    if (!std::isfinite(x)) throw ValidationError("non-finite number");
    // Shortest round-trip decimal, so 0.1 reads as 1/10.
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return parse_real(std::string(buf, res.ptr));
}

std::string rat_to_string(const Rat& q)
{
    return q.str();
}

}  // namespace kstab
