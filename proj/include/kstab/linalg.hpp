#pragma once

#include "kstab/scalar.hpp"

#include <optional>

namespace kstab {

template <class S>
using Vec = std::vector<S>;
template <class S>
using Mat = std::vector<std::vector<S>>;

// Solves A x = b by Gaussian elimination; nullopt when A is singular.
template <class S>
std::optional<Vec<S>> solve(Mat<S> a, Vec<S> b)
{
    const size_t n = a.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = n;
        double best = 0;
        for (size_t r = col; r < n; ++r) {
            double mag = std::abs(to_double(a[r][col]));
            if (!is_zero(a[r][col]) && (piv == n || mag > best)) {
                piv = r;
                best = mag;
            }
        }
        if (piv == n) return std::nullopt;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = col + 1; r < n; ++r) {
            if (is_zero(a[r][col])) continue;
            S f = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec<S> x(n);
    for (size_t i = n; i-- > 0;) {
        S s = b[i];
        for (size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

// Rank of a list of row vectors.
template <class S>
int rank(Mat<S> rows)
{
    if (rows.empty()) return 0;
    const size_t m = rows[0].size();
    int rk = 0;
    for (size_t col = 0; col < m && rk < static_cast<int>(rows.size()); ++col) {
        size_t piv = rows.size();
        double best = 0;
        for (size_t r = rk; r < rows.size(); ++r) {
            double mag = std::abs(to_double(rows[r][col]));
            if (!is_zero(rows[r][col]) && (piv == rows.size() || mag > best)) {
                piv = r;
                best = mag;
            }
        }
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[rk]);
        for (size_t r = rk + 1; r < rows.size(); ++r) {
            if (is_zero(rows[r][col])) continue;
            S f = rows[r][col] / rows[rk][col];
            for (size_t c = col; c < m; ++c) rows[r][c] -= f * rows[rk][c];
        }
        ++rk;
    }
    return rk;
}

template <class S>
int affine_rank(const Mat<S>& pts)
{
    if (pts.size() <= 1) return 0;
    Mat<S> d;
    d.reserve(pts.size() - 1);
    for (size_t i = 1; i < pts.size(); ++i) {
        Vec<S> v(pts[i].size());
        for (size_t k = 0; k < v.size(); ++k) v[k] = pts[i][k] - pts[0][k];
        d.push_back(std::move(v));
    }
    return rank(std::move(d));
}

Int int_det(std::vector<IVec> a);

// Primitive integer vector orthogonal to m-1 integer vectors in Z^m, or an
// empty vector when they are linearly dependent.
IVec integer_kernel(const std::vector<IVec>& rows, int m);

// Unimodular U with U*nu = e_1 for primitive nu. Row 0 pairs with nu to 1,
// rows 1.. form a lattice basis of nu^perp.
std::vector<IVec> unimodular_completion(const IVec& nu);

// Inverse transpose of a unimodular integer matrix (again integral).
std::vector<IVec> inverse_transpose(const std::vector<IVec>& u);

IVec primitive_direction(const Vec<Rat>& v);

template <class S>
S dot(const IVec& a, const Vec<S>& x)
{
    S s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += S(static_cast<long long>(a[i])) * x[i];
    return s;
}

}  // namespace kstab
