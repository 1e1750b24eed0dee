#include "kstab/functionals.hpp"
#include "kstab/parallel.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace kstab;

namespace {

Polytope<double> segment(double a, double b) { return Polytope<double>(1, {{{1}, -a}, {{-1}, b}}); }

Polytope<double> rect(double a, double b)
{
    return Polytope<double>(2, {{{1, 0}, 0}, {{-1, 0}, a}, {{0, 1}, 0}, {{0, -1}, b}});
}

Polytope<double> simplex2() { return Polytope<double>(2, {{{1, 0}, 0}, {{0, 1}, 0}, {{-1, -1}, 1}}); }

// reference potential sampled at x + shift, keeping the chart split
SField shifted(const Guillemin& g, const Grid& grid, std::array<double, 2> shift)
{
    SField s(Field(grid.size(), 0.0));
    for (size_t k = 0; k < grid.size(); ++k) {
        auto ij = grid.coords(k);
        VecX x(grid.n);
        for (int a = 0; a < grid.n; ++a) x(a) = grid.x(a, ij[a]) + shift[a];
        auto rp = g.eval(x);
        s.val[k] = rp.psi;
        s.rem[k] = rp.psi_rem;
        s.label[k] = rp.chart;
    }
    return s;
}

SField sampled(const Grid& grid, double (*f)(double))
{
    Field v(grid.size());
    for (int i = 0; i < grid.N[0]; ++i) v[i] = f(grid.x(0, i));
    return SField(v);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double fs2(double x) { return std::exp(x - 2 * softplus(x)); }  // psi'' for the segment [0,1]

double bump(double x) { return 0.2 * std::exp(-x * x / 8); }
double bump2(double x) { return 0.2 * (x * x / 16 - 0.25) * std::exp(-x * x / 8); }
double probe(double x) { return std::exp(-(x - 1) * (x - 1) / 4); }
double probe1(double x) { return -(x - 1) / 2 * probe(x); }
double probe2(double x) { return ((x - 1) * (x - 1) / 4 - 0.5) * probe(x); }

template <class F>
double midpoint(F f, double a, double b, int n = 400000)
{
    Accumulator acc;
    double h = (b - a) / n;
    for (int i = 0; i < n; ++i) acc.add(f(a + (i + 0.5) * h) * h);
    return acc.value();
}

}  // namespace

TEST_CASE("functionals vanish at zero and see constants correctly")
{
    auto g = Grid::make(1, {{-40, 40}}, {801});
    auto ref = guillemin_reference(segment(0, 1), g);
    auto zero = energy_suite(ref, constant_field(g.size(), 0.0));
    for (auto* f : {&zero.E, &zero.ERic, &zero.J, &zero.entropy, &zero.M}) CHECK(std::abs(f->value) < 1e-14);

    auto c = energy_suite(ref, constant_field(g.size(), 1.75));
    CHECK(c.E.value == doctest::Approx(1.75).epsilon(1e-9));
    CHECK(std::abs(c.J.value) < 1e-9);
    CHECK(std::abs(c.entropy.value) < 1e-14);
    CHECK(std::abs(c.M.value) < 1e-9);

    auto g2 = Grid::make(2, {{-20, 20}, {-20, 20}}, {81, 81});
    auto r2 = guillemin_reference(simplex2(), g2, 1e-6);
    auto c2 = energy_suite(r2, constant_field(g2.size(), -0.5));
    CHECK(c2.E.value == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(std::abs(c2.J.value) < 1e-6);
    CHECK(std::abs(c2.M.value) < 1e-6);
}

TEST_CASE("K-energy is constant along the torus orbit of a Kahler-Einstein metric")
{
    auto g = Grid::make(1, {{-40, 40}}, {4097});
    auto ref = guillemin_reference(segment(0, 1), g);
    for (double s : {0.5, 1.5, 3.0, -2.0}) {
        SField phi = shifted(ref.guillemin, g, {s, 0}) - ref.psi;
        auto suite = energy_suite(ref, phi);
        CHECK(std::abs(suite.M.value) < 1e-4);
        CHECK(suite.J.value > 0);
        CHECK(suite.entropy.value > 0);
    }

    auto g2 = Grid::make(2, {{-26, 26}, {-26, 26}}, {161, 161});
    auto sq = guillemin_reference(rect(1, 1), g2, 1e-6);
    SField phi = shifted(sq.guillemin, g2, {1.0, -0.5}) - sq.psi;
    auto suite = energy_suite(sq, phi);
    MESSAGE("2D orbit M = " << suite.M.value << " +- " << suite.M.quadrature_error);
    CHECK(std::abs(suite.M.value) < 1e-3);
}

TEST_CASE("Deligne pairing is symmetric in its slots")
{
    auto g = Grid::make(1, {{-40, 40}}, {1601});
    auto a = guillemin_reference(segment(0, 1), g);
    auto b = guillemin_reference(segment(-1, 2), g);
    SField pa = shifted(a.guillemin, g, {0.7, 0}) - a.psi;
    SField pb = sampled(g, bump);
    double ab = deligne(g, {{&a.psi, &pa}, {&b.psi, &pb}});
    double ba = deligne(g, {{&b.psi, &pb}, {&a.psi, &pa}});
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));

    // box edges at 32 keep the boundary terms of summation by parts near e^-32
    auto g2 = Grid::make(2, {{-32, 32}, {-32, 32}}, {129, 129});
    auto r = guillemin_reference(rect(1, 1), g2, 1e-6);
    auto t = guillemin_reference(simplex2(), g2, 1e-6);
    SField p0 = shifted(r.guillemin, g2, {0.5, -1}) - r.psi;
    SField p1 = shifted(t.guillemin, g2, {-0.3, 0.8}) - t.psi;
    SField p2 = constant_field(g2.size(), 0.25) + scaled(p0, 0.5);
    std::vector<Slot> slots{{&r.psi, &p0}, {&t.psi, &p1}, {&r.psi, &p2}};
    std::vector<int> perm{0, 1, 2};
    double first = deligne(g2, slots);
    do {
        double v = deligne(g2, {slots[perm[0]], slots[perm[1]], slots[perm[2]]});
        CHECK(v == doctest::Approx(first).epsilon(1e-8));
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("Deligne pairing obeys the change of function rule")
{
    // <(g, p + q), rest> = <(g, p), rest> + <(g + p, q), rest moved to its endpoints>
    auto g2 = Grid::make(2, {{-20, 20}, {-20, 20}}, {81, 81});
    auto r = guillemin_reference(rect(1, 2), g2, 1e-6);
    SField p = shifted(r.guillemin, g2, {0.4, 0.4}) - r.psi;
    SField q = shifted(r.guillemin, g2, {-1.0, 0.3}) - r.psi;
    SField pq = p + q, gp = r.psi + p, gq = r.psi + q;
    double lhs = deligne(g2, {{&r.psi, &pq}, {&r.psi, &q}, {&r.psi, &p}});
    double rhs = deligne(g2, {{&r.psi, &p}, {&r.psi, &q}, {&r.psi, &p}}) + deligne(g2, {{&gp, &q}, {&gq, nullptr}, {&gp, nullptr}});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("Deligne energies match the closed forms")
{
    auto g = Grid::make(1, {{-40, 40}}, {801});
    auto ref = guillemin_reference(segment(0, 1), g);
    SField phi = sampled(g, bump);
    auto s = energy_suite(ref, phi, false);
    CHECK(s.E.value == doctest::Approx(energy_direct(ref, phi)).epsilon(1e-10));
    CHECK(s.ERic.value == doctest::Approx(twisted_energy_direct(ref, ref.ricci, phi)).epsilon(1e-10));

    auto g2 = Grid::make(2, {{-20, 20}, {-20, 20}}, {81, 81});
    auto r2 = guillemin_reference(simplex2(), g2, 1e-6);
    SField p2 = shifted(r2.guillemin, g2, {1.2, -0.4}) - r2.psi;
    auto s2 = energy_suite(r2, p2, false);
    CHECK(s2.E.value == doctest::Approx(energy_direct(r2, p2)).epsilon(1e-10));
    CHECK(s2.ERic.value == doctest::Approx(twisted_energy_direct(r2, r2.ricci, p2)).epsilon(1e-10));
    CHECK(s2.J.value >= 0);
    CHECK(s2.entropy.value >= 0);
}

TEST_CASE("first and second variation of the K-energy")
{
    auto g = Grid::make(1, {{-40, 40}}, {4097});
    auto ref = guillemin_reference(segment(0, 1), g);
    Field base(g.size()), dir(g.size());
    for (int i = 0; i < g.N[0]; ++i) {
        base[i] = bump(g.x(0, i));
        dir[i] = probe(g.x(0, i));
    }
    auto M = [&](double e) {
        Field f(g.size());
        for (size_t k = 0; k < f.size(); ++k) f[k] = base[k] + e * dir[k];
        return energy_suite(ref, SField(f), false).M.value;
    };

    // V = 1 and S̄ = 2 on [0,1]; Psi'' = fs2 + bump2. With S Psi'' = -(log Psi'')'',
    // dM(v) = int v (S̄ - S) Psi'' = S̄ int v Psi'' + int v'' log Psi''.
    auto Psi2 = [](double x) { return fs2(x) + bump2(x); };
    double first = midpoint([&](double x) { return 2 * probe(x) * Psi2(x) + probe2(x) * std::log(Psi2(x)); }, -40, 40);
    const double e = 1e-4;
    double fd = (M(e) - M(-e)) / (2 * e);
    CHECK(fd == doctest::Approx(first).epsilon(1e-3));

    // d^2M(v, v) = -S̄ int v'^2 + int v''^2 / Psi''
    double second = midpoint([&](double x) { return -2 * probe1(x) * probe1(x) + probe2(x) * probe2(x) / Psi2(x); }, -40, 40);
    const double e2 = 1e-3;
    double fd2 = (M(e2) - 2 * M(0) + M(-e2)) / (e2 * e2);
    CHECK(fd2 == doctest::Approx(second).epsilon(1e-3));
}

TEST_CASE("proxy with the exact density reproduces the K-energy")
{
    auto g = Grid::make(1, {{-40, 40}}, {1601});
    auto ref = guillemin_reference(segment(0, 1), g);
    SField phi = sampled(g, bump);
    Field q = entropy_measure(ref, phi);
    Field xi(g.size(), 0.0);
    for (size_t k = 0; k < g.size(); ++k)
        if (g.interior(k)) xi[k] = std::log(q[k] / ref.mass_an[k]);
    double m = energy_suite(ref, phi, false).M.value;
    CHECK(mabuchi_proxy(ref, phi, xi) == doctest::Approx(m).epsilon(1e-12));

    Field bad = xi;
    bad[5] = std::nan("");
    CHECK_THROWS_AS(mabuchi_proxy(ref, phi, bad), ValidationError);
}

TEST_CASE("quadrature error estimate is small and honest")
{
    auto g = Grid::make(1, {{-40, 40}}, {1601});
    auto ref = guillemin_reference(segment(0, 1), g);
    SField phi = sampled(g, bump);
    auto s = energy_suite(ref, phi);
    auto fine = energy_suite(guillemin_reference(segment(0, 1), Grid::make(1, {{-40, 40}}, {6401})), sampled(Grid::make(1, {{-40, 40}}, {6401}), bump), false);
    CHECK(s.M.quadrature_error < 1e-3);
    CHECK(std::abs(s.M.value - fine.M.value) <= 2 * s.M.quadrature_error + 1e-12);
}

TEST_CASE("entropy rejects a degenerate potential")
{
    auto g = Grid::make(1, {{-40, 40}}, {801});
    auto ref = guillemin_reference(segment(0, 1), g);
    SField flat = scaled(ref.psi, -2.0);
    CHECK_THROWS(entropy(ref, flat));
}
