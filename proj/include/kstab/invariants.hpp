#pragma once

#include "kstab/testconfig.hpp"

namespace kstab {

template <class S>
struct InvariantReport {
    S V, Sbar, A_top, K_A_n, DF, correction, MNA, ENA, JNA, twist_C_used;
    std::vector<Int> multiplicities;
    bool reduced = true;
    bool total_space_smooth = true;
};

inline Int factorial(int n)
{
    Int f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

template <class S>
S kahler_volume(const Polytope<S>& p)
{
    return S(static_cast<long long>(factorial(p.dim()))) * p.volume();
}

// S̄ = n (c_1 . alpha^{n-1}) / (alpha^n) = (sum of facet lattice volumes) / vol(P)
template <class S>
S average_scalar_curvature(const Polytope<S>& p)
{
    S sum = 0;
    for (size_t f = 0; f < p.facets().size(); ++f) sum += p.facet_lattice_volume(f);
    return sum / p.volume();
}

// (n+1)-normalized mixed volume of n+1 classes on a common fan.
template <class S>
S intersection_number(const std::vector<VRep<S>>& classes)
{
    return mixed_volume(classes);
}

namespace detail {

template <class S>
InvariantReport<S> invariants_at(const TestConfig<S>& tc, const S& c)
{
    const auto& p = tc.base();
    const int n = p.dim();
    const S nf = S(static_cast<long long>(factorial(n)));
    const S n1f = S(static_cast<long long>(factorial(n + 1)));
    const S n1 = S(static_cast<long long>(n + 1));

    InvariantReport<S> r;
    r.twist_C_used = c;
    r.V = kahler_volume(p);
    r.Sbar = average_scalar_curvature(p);

    auto q = tc.total_polytope(c);
    r.total_space_smooth = q.delzant().delzant;
    r.A_top = n1f * q.volume() - n1 * c * r.V;

    S facet_sum = 0;
    for (size_t f = 0; f < q.facets().size(); ++f) facet_sum += q.facet_lattice_volume(f);
    r.K_A_n = S(-1) * nf * facet_sum + S(2) * r.V + c * r.Sbar * r.V;

    r.DF = r.Sbar / n1 * r.A_top / r.V + r.K_A_n / r.V;

    r.correction = 0;
    for (size_t j = 0; j < tc.pieces().size(); ++j) {
        Int m = tc.multiplicity(j);
        r.multiplicities.push_back(m);
        if (m != 1) r.reduced = false;
        size_t f = TestConfig<S>::facet_index(q, tc.top_normal(j));
        r.correction += S(static_cast<long long>(1 - m)) * nf * q.facet_lattice_volume(f);
    }
    r.correction /= r.V;
    r.MNA = r.DF + r.correction;
    r.ENA = r.A_top / (n1 * r.V);

    std::vector<VRep<S>> slots{q.vrep()};
    auto flat = embed_zero(p.vrep());
    for (int k = 0; k < n; ++k) slots.push_back(flat);
    r.JNA = (intersection_number(slots) - c * r.V) / r.V - r.ENA;
    return r;
}

template <class S>
bool report_close(const InvariantReport<S>& a, const InvariantReport<S>& b)
{
    auto close = [](const S& x, const S& y) {
        if constexpr (std::is_same_v<S, double>)
            return std::abs(x - y) <= 1e-10 * (1 + std::abs(x));
        else
            return x == y;
    };
    return close(a.A_top, b.A_top) && close(a.K_A_n, b.K_A_n) && close(a.DF, b.DF) && close(a.MNA, b.MNA) &&
           close(a.ENA, b.ENA) && close(a.JNA, b.JNA) && close(a.correction, b.correction);
}

}  // namespace detail

struct InternalConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-Archimedean invariants of a toric test configuration. The twist constant
// defaults to max f + 1; the result is recomputed at C + 1 and compared as a
// de-twisting consistency check.
template <class S>
InvariantReport<S> na_invariants(const TestConfig<S>& tc, std::optional<S> twist = std::nullopt, bool check = true)
{
    S c = twist ? *twist : tc.max_value() + S(1);
    if (!(c > tc.max_value())) throw ValidationError("twist constant C must exceed max f");
    auto r = detail::invariants_at(tc, c);
    if (check) {
        auto r2 = detail::invariants_at(tc, S(c + S(1)));
        if (!detail::report_close(r, r2)) throw InternalConsistencyError("invariants depend on the twist constant");
    }
    return r;
}

}  // namespace kstab
