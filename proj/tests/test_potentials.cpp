#include "kstab/parallel.hpp"
#include "kstab/potentials.hpp"

#include <doctest.h>

#include <cmath>

using namespace kstab;

namespace {

Polytope<double> segment(double a, double b) { return Polytope<double>(1, {{{1}, -a}, {{-1}, b}}); }

Polytope<double> rect(double a, double b)
{
    return Polytope<double>(2, {{{1, 0}, 0}, {{-1, 0}, a}, {{0, 1}, 0}, {{0, -1}, b}});
}

Polytope<double> simplex2() { return Polytope<double>(2, {{{1, 0}, 0}, {{0, 1}, 0}, {{-1, -1}, 1}}); }

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

TEST_CASE("reference potential of P1 is Fubini-Study")
{
    Guillemin g(segment(0, 1));
    for (double x : {-35.0, -3.0, 0.0, 0.7, 12.0, 38.0}) {
        auto p = g.eval(x);
        CHECK(p.psi == doctest::Approx(softplus(x)).epsilon(1e-13));
        // log psi'' = x - 2 log(1+e^x), kept to full relative precision in the tails
        double oracle = x - 2 * softplus(x);
        CHECK(p.logdet == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(p.y(0) == doctest::Approx(1 / (1 + std::exp(-x))).epsilon(1e-13));
    }
}

TEST_CASE("reference potential of P2 and of a product")
{
    Guillemin g(simplex2());
    for (auto [a, b] : std::vector<std::pair<double, double>>{{0, 0}, {-20, 3}, {25, 24}, {-30, -31}}) {
        VecX x(2);
        x << a, b;
        auto p = g.eval(x);
        double m = std::max({0.0, a, b});
        double lse = m + std::log(std::exp(-m) + std::exp(a - m) + std::exp(b - m));
        CHECK(p.psi == doctest::Approx(lse).epsilon(1e-12));
        // det of the Hessian of log(1+e^a+e^b) is e^{a+b}/(1+e^a+e^b)^3
        CHECK(p.logdet == doctest::Approx(a + b - 3 * lse).epsilon(1e-10));
    }
    Guillemin sq(rect(1, 2));
    VecX x(2);
    x << 1.5, -40;
    auto p = sq.eval(x);
    auto p1 = Guillemin(segment(0, 1)).eval(1.5);
    auto p2 = Guillemin(segment(0, 2)).eval(-40.0);
    CHECK(p.psi == doctest::Approx(p1.psi + p2.psi).epsilon(1e-12));
    CHECK(p.logdet == doctest::Approx(p1.logdet + p2.logdet).epsilon(1e-12));
    CHECK(std::abs(p.hess(0, 1)) < 1e-14);
}

TEST_CASE("reference gradient image fills the polytope")
{
    auto ref = guillemin_reference(segment(0, 1), Grid::make(1, {{-40, 40}}, {801}));
    CHECK(ref.grad[0].front() < 1e-15);
    CHECK(ref.grad[0].back() > 1 - 1e-15);
    CHECK(ref.V == doctest::Approx(1));
    CHECK(ref.Sbar == doctest::Approx(2));
    CHECK_THROWS_AS(guillemin_reference(segment(0, 1), Grid::make(1, {{-5, 5}}, {101})), ValidationError);
    CHECK_THROWS_AS(Guillemin(Polytope<double>(2, {{{1, 0}, 0}, {{0, 1}, 0}, {{-1, -2}, 2}})), ValidationError);
}

TEST_CASE("Monge-Ampere masses")
{
    auto g1 = Grid::make(1, {{-40, 40}}, {2001});
    auto ref = guillemin_reference(segment(0, 1), g1);
    // midpoint oracle for the integral of psi'' = e^x/(1+e^x)^2
    double oracle = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = -40 + (i + 0.5) * 80.0 / n;
        oracle += std::exp(x - 2 * softplus(x)) * 80.0 / n;
    }
    CHECK(ordered_sum(ma_mass(g1, {&ref.psi})) == doctest::Approx(oracle).epsilon(1e-10));
    // deep in the tails the node mass keeps its relative accuracy
    auto m1 = ma_mass(g1, {&ref.psi});
    for (int i : {40, 1960}) {
        double x = g1.x(0, i);
        CHECK(m1[i] == doctest::Approx(std::exp(x - 2 * softplus(x)) * g1.h(0)).epsilon(1e-3));
    }

    auto g2 = Grid::make(2, {{-36, 36}, {-36, 36}}, {241, 241});
    auto sq = guillemin_reference(rect(1, 1), g2);
    CHECK(ordered_sum(ma_mass(g2, {&sq.psi, &sq.psi})) == doctest::Approx(2).epsilon(1e-9));

    auto a = guillemin_reference(rect(1, 2), g2);
    auto b = guillemin_reference(rect(2, 1), g2);
    double mv = mixed_volume(std::vector<Polytope<double>>{rect(1, 2), rect(2, 1)});
    CHECK(ordered_sum(ma_mass(g2, {&a.psi, &b.psi})) == doctest::Approx(mv).epsilon(1e-9));
}

TEST_CASE("Monge-Ampere slots are symmetric and blind to constants")
{
    auto g2 = Grid::make(2, {{-20, 20}, {-20, 20}}, {81, 61});
    auto a = guillemin_reference(rect(1, 2), g2, 1e-6);
    auto b = guillemin_reference(simplex2(), g2, 1e-6);
    auto ab = ma_mass(g2, {&a.psi, &b.psi});
    auto ba = ma_mass(g2, {&b.psi, &a.psi});
    auto shifted = a.psi + constant_field(a.psi.size(), 3.25);
    auto sb = ma_mass(g2, {&shifted, &b.psi});
    for (size_t k = 0; k < ab.size(); ++k) {
        CHECK(std::abs(ab[k] - ba[k]) <= 1e-12 * (1 + std::abs(ab[k])));
        CHECK(std::abs(ab[k] - sb[k]) <= 1e-12 * (1 + std::abs(ab[k])));
    }
}

TEST_CASE("discrete Monge-Ampere is exact on quadratics")
{
    // psi = x^2 + x y + 2 y^2 has D^2 psi = [[2,1],[1,4]], det 7, so node mass 2! * 7 * cell
    auto g = Grid::make(2, {{-1, 1}, {-1, 1}}, {11, 11});
    Field q(g.size());
    for (size_t k = 0; k < g.size(); ++k) {
        auto ij = g.coords(k);
        double x = g.x(0, ij[0]), y = g.x(1, ij[1]);
        q[k] = x * x + x * y + 2 * y * y;
    }
    SField sq(q);
    auto m = ma_mass(g, {&sq, &sq});
    for (size_t k = 0; k < g.size(); ++k)
        if (g.interior(k)) CHECK(m[k] == doctest::Approx(2 * 7 * g.cell()).epsilon(1e-12));
}

TEST_CASE("mass converges under refinement")
{
    double prev = 1;
    for (int res : {41, 81, 161}) {
        auto g = Grid::make(2, {{-30, 30}, {-30, 30}}, {res, res});
        auto s = guillemin_reference(simplex2(), g, 1e-2);
        double err = std::abs(ordered_sum(ma_mass(g, {&s.psi, &s.psi})) - 1.0);
        CHECK(err <= 1e-6);
        CHECK(err <= prev * 0.75 + 1e-12);
        prev = err;
    }
}

TEST_CASE("Ricci potential")
{
    auto g1 = Grid::make(1, {{-40, 40}}, {1601});
    auto ref = guillemin_reference(segment(0, 1), g1);
    auto rd = ricci_potential(ref);
    for (size_t k = 0; k < g1.size(); k += 97) {
        double x = g1.x(0, static_cast<int>(k));
        CHECK(rd.r.val[k] == doctest::Approx(-x + 2 * softplus(x)).epsilon(1e-12));
    }
    CHECK(ordered_sum(ma_mass(g1, {&rd.r})) == doctest::Approx(rd.c1_alpha).epsilon(1e-10));
    SField plain(rd.r.val);
    CHECK(ordered_sum(ma_mass(g1, {&plain})) == doctest::Approx(rd.c1_alpha).epsilon(1e-10));
    CHECK(rd.c1_alpha == 2);

    auto g2 = Grid::make(2, {{-36, 36}, {-36, 36}}, {181, 181});
    auto sq = guillemin_reference(rect(1, 1), g2);
    auto r2 = ricci_potential(sq);
    double quad = ordered_sum(ma_mass(g2, {&r2.r, &sq.psi}));
    CHECK(quad == doctest::Approx(r2.c1_alpha).epsilon(1e-3));
    // S̄ two ways: n (c1.alpha) / alpha^2
    CHECK(2 * quad / sq.V == doctest::Approx(sq.Sbar).epsilon(1e-3));
}

TEST_CASE("Legendre transform")
{
    auto yg = Grid::make(1, {{-10, 10}}, {2001});
    Field f(yg.size());
    for (int i = 0; i < yg.N[0]; ++i) f[i] = 0.5 * yg.x(0, i) * yg.x(0, i);
    auto xg = Grid::make(1, {{-5, 5}}, {101});
    auto fs = legendre_transform(yg, f, xg);
    for (int i = 0; i < xg.N[0]; ++i) CHECK(fs[i] == doctest::Approx(0.5 * xg.x(0, i) * xg.x(0, i)).epsilon(1e-4));

    auto unit = Grid::make(1, {{0, 1}}, {11});
    auto sup = legendre_transform(unit, Field(11, 0.0), xg);
    for (int i = 0; i < xg.N[0]; ++i) CHECK(sup[i] == doctest::Approx(std::max(0.0, xg.x(0, i))).epsilon(1e-14));

    // involution against a direct sup scan
    Field half(11);
    for (int i = 0; i < 11; ++i) half[i] = 0.5 * unit.x(0, i) * unit.x(0, i);
    auto xfine = Grid::make(1, {{-5, 5}}, {1001});
    auto hs = legendre_transform(unit, half, xfine);
    auto back = legendre_transform(xfine, hs, unit);
    for (int i = 0; i < 11; ++i) {
        double y = unit.x(0, i), best = -1e300;
        for (int k = 0; k < xfine.N[0]; ++k) best = std::max(best, y * xfine.x(0, k) - hs[k]);
        CHECK(back[i] == doctest::Approx(best).epsilon(1e-12));
        CHECK(std::abs(back[i] - half[i]) < 1e-6);
    }

    Field wiggle(11);
    for (int i = 0; i < 11; ++i) wiggle[i] = std::sin(3.0 * i);
    CHECK_THROWS_AS(legendre_transform(unit, wiggle, xg), ValidationError);

    // two dimensions: |y|^2/2 is self-dual
    auto y2 = Grid::make(2, {{-6, 6}, {-6, 6}}, {241, 241});
    Field q(y2.size());
    for (size_t k = 0; k < y2.size(); ++k) {
        auto ij = y2.coords(k);
        q[k] = 0.5 * (std::pow(y2.x(0, ij[0]), 2) + std::pow(y2.x(1, ij[1]), 2));
    }
    auto x2 = Grid::make(2, {{-2, 2}, {-2, 2}}, {9, 9});
    auto q2 = legendre_transform(y2, q, x2);
    for (size_t k = 0; k < x2.size(); ++k) {
        auto ij = x2.coords(k);
        CHECK(q2[k] == doctest::Approx(0.5 * (std::pow(x2.x(0, ij[0]), 2) + std::pow(x2.x(1, ij[1]), 2))).epsilon(1e-3));
    }
}
