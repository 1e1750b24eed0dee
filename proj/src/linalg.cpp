#include "kstab/linalg.hpp"

namespace kstab {

Int int_det(std::vector<IVec> a)
{
    // Bareiss fraction-free elimination; exact for the small entries used here.
    const size_t n = a.size();
    if (n == 0) return 1;
    std::vector<std::vector<__int128>> m(n, std::vector<__int128>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) m[i][j] = a[i][j];
    __int128 prev = 1;
    int sign = 1;
    for (size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            size_t r = k + 1;
            while (r < n && m[r][k] == 0) ++r;
            if (r == n) return 0;
            std::swap(m[r], m[k]);
            sign = -sign;
        }
        for (size_t i = k + 1; i < n; ++i)
            for (size_t j = k + 1; j < n; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
        prev = m[k][k];
    }
    return static_cast<Int>(sign * m[n - 1][n - 1]);
}

IVec integer_kernel(const std::vector<IVec>& rows, int m)
{
    IVec nu(m, 0);
    for (int k = 0; k < m; ++k) {
        std::vector<IVec> minor;
        for (const auto& r : rows) {
            IVec row;
            for (int c = 0; c < m; ++c)
                if (c != k) row.push_back(r[c]);
            minor.push_back(row);
        }
        Int d = int_det(minor);
        nu[k] = (k % 2 == 0) ? d : -d;
    }
    Int g = gcd_vec(nu);
    if (g == 0) return {};
    for (auto& x : nu) x /= g;
    return nu;
}

std::vector<IVec> unimodular_completion(const IVec& nu)
{
    const size_t m = nu.size();
    std::vector<IVec> u(m, IVec(m, 0));
    for (size_t i = 0; i < m; ++i) u[i][i] = 1;
    IVec v = nu;
    while (true) {
        size_t p = m;
        for (size_t i = 0; i < m; ++i)
            if (v[i] != 0 && (p == m || std::llabs(v[i]) < std::llabs(v[p]))) p = i;
        if (p == m) throw ValidationError("zero normal vector");
        bool done = true;
        for (size_t i = 0; i < m; ++i) {
            if (i == p || v[i] == 0) continue;
            Int q = v[i] / v[p];
            v[i] -= q * v[p];
            for (size_t c = 0; c < m; ++c) u[i][c] -= q * u[p][c];
            if (v[i] != 0) done = false;
        }
        if (done) {
            if (std::llabs(v[p]) != 1) throw ValidationError("normal vector is not primitive");
            if (p != 0) {
                std::swap(u[p], u[0]);
                std::swap(v[p], v[0]);
            }
            if (v[0] < 0)
                for (auto& x : u[0]) x = -x;
            return u;
        }
    }
}

std::vector<IVec> inverse_transpose(const std::vector<IVec>& u)
{
    const size_t m = u.size();
    std::vector<IVec> out(m, IVec(m));
    for (size_t j = 0; j < m; ++j) {
        Mat<Rat> a(m, Vec<Rat>(m));
        Vec<Rat> b(m, 0);
        for (size_t r = 0; r < m; ++r)
            for (size_t c = 0; c < m; ++c) a[r][c] = u[r][c];
        b[j] = 1;
        auto x = solve(a, b);
        if (!x) throw ValidationError("matrix is not unimodular");
        // column j of U^{-1} is row j of U^{-T}
        for (size_t r = 0; r < m; ++r) out[j][r] = (*x)[r].convert_to<Int>();
    }
    return out;
}

IVec primitive_direction(const Vec<Rat>& v)
{
    Int l = 1;
    for (const auto& x : v) l = std::lcm(l, boost::multiprecision::denominator(x).convert_to<Int>());
    IVec d(v.size());
    for (size_t i = 0; i < v.size(); ++i) d[i] = Rat(v[i] * l).convert_to<Int>();
    Int g = gcd_vec(d);
    if (g == 0) return {};
    for (auto& x : d) x /= g;
    return d;
}

}  // namespace kstab
