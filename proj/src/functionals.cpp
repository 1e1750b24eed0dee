#include "kstab/functionals.hpp"

#include "kstab/parallel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kstab {

namespace {

double pair_sum(const Grid& grid, const SField& w, const Field& mass)
{
    Accumulator acc;
    for (size_t k = 0; k < grid.size(); ++k)
        if (grid.interior(k)) acc.add(w.val[k] * mass[k]);
    return acc.value();
}

double pair_sum(const Grid& grid, const Field& w, const Field& mass)
{
    Accumulator acc;
    for (size_t k = 0; k < grid.size(); ++k)
        if (grid.interior(k)) acc.add(w[k] * mass[k]);
    return acc.value();
}

}  // namespace

double deligne(const Grid& grid, const std::vector<Slot>& slots)
{
    const int n = grid.n;
    if (static_cast<int>(slots.size()) != n + 1) throw ValidationError("Deligne functional needs n+1 slots");
    std::vector<SField> full(slots.size());
    for (size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].g || slots[i].g->size() != grid.size()) throw ValidationError("slot grid mismatch");
        if (slots[i].phi && slots[i].phi->size() != grid.size()) throw ValidationError("slot grid mismatch");
        full[i] = slots[i].phi ? *slots[i].g + *slots[i].phi : *slots[i].g;
    }
    Accumulator total;
    for (int i = 0; i <= n; ++i) {
        if (!slots[i].phi) continue;
        std::vector<const SField*> ma;
        for (int j = 0; j <= n; ++j) {
            if (j == i) continue;
            ma.push_back(j < i ? slots[j].g : &full[j]);
        }
        total.add(pair_sum(grid, *slots[i].phi, ma_mass(grid, ma)));
    }
    return total.value();
}

double energy_direct(const Reference& ref, const SField& phi)
{
    const Grid& g = ref.grid;
    SField psi = ref.psi + phi;
    Accumulator acc;
    for (int j = 0; j <= g.n; ++j) {
        std::vector<const SField*> ma;
        for (int k = 0; k < g.n; ++k) ma.push_back(k < j ? &ref.psi : &psi);
        acc.add(pair_sum(g, phi, ma_mass(g, ma)));
    }
    return acc.value() / ((g.n + 1) * ref.V);
}

double twisted_energy_direct(const Reference& ref, const SField& theta, const SField& phi)
{
    const Grid& g = ref.grid;
    SField psi = ref.psi + phi;
    Accumulator acc;
    for (int j = 0; j < g.n; ++j) {
        std::vector<const SField*> ma{&theta};
        for (int k = 0; k + 1 < g.n; ++k) ma.push_back(k < j ? &ref.psi : &psi);
        acc.add(pair_sum(g, phi, ma_mass(g, ma)));
    }
    return acc.value() / ref.V;
}

Field entropy_measure(const Reference& ref, const SField& phi)
{
    const Grid& g = ref.grid;
    return entropy_measure(ref, phi, nullptr);
}

Field entropy_measure(const Reference& ref, const SField& phi, Field* magnitude)
{
    const Grid& g = ref.grid;
    Field q(g.size(), 0.0);
    if (magnitude) magnitude->assign(g.size(), 0.0);
    if (g.n == 1) {
        Field d = ma_mass(g, {&phi});
        for (size_t k = 0; k < g.size(); ++k)
            if (g.interior(k)) {
                q[k] = ref.mass_an[k] + d[k];
                if (magnitude) (*magnitude)[k] = ref.mass_an[k] + std::abs(d[k]);
            }
    } else {
        Field cross = ma_mass(g, {&ref.psi, &phi});
        Field self = ma_mass(g, {&phi, &phi});
        for (size_t k = 0; k < g.size(); ++k)
            if (g.interior(k)) {
                q[k] = ref.mass_an[k] + 2 * cross[k] + self[k];
                if (magnitude) (*magnitude)[k] = ref.mass_an[k] + 2 * std::abs(cross[k]) + std::abs(self[k]);
            }
    }
    return q;
}

namespace {

// Size of the rounding error in the node masses of phi = psi - ref. phi
// inherits the rounding of psi, so the magnitudes of ref enter too, for
// whichever of val or rem the stencil differences.
Field rounding_floor(const Grid& g, const SField& phi, const SField& ref)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Field fl(g.size(), 0.0);
    auto mag = [&](size_t k) {
        return std::max(std::abs(phi.val[k]) + std::abs(ref.val[k]), std::abs(phi.rem[k]) + std::abs(ref.rem[k]));
    };
    if (g.n == 1) {
        for (int i = 1; i + 1 < g.N[0]; ++i) fl[i] = 8 * eps * (mag(i - 1) + 2 * mag(i) + mag(i + 1)) / g.h(0);
        return fl;
    }
    const double h = std::min(g.h(0), g.h(1));
    for (int j = 1; j + 1 < g.N[1]; ++j)
        for (int i = 1; i + 1 < g.N[0]; ++i) {
            double vmax = 0, dmax = 1;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    double v = phi.val[g.index(i + di, j + dj)];
                    vmax = std::max(vmax, mag(g.index(i + di, j + dj)));
                    dmax = std::max(dmax, std::abs(v - phi.val[g.index(i, j)]) / h);
                }
            fl[g.index(i, j)] = 64 * eps * vmax / h * (dmax + 1);
        }
    return fl;
}

}  // namespace

double entropy(const Reference& ref, const SField& phi)
{
    const Grid& g = ref.grid;
    Field mag;
    Field q = entropy_measure(ref, phi, &mag);
    Field floor = rounding_floor(g, phi, ref.psi);
    // q = disc(psi) + (analytic - disc)(ref): where MA(psi) vanishes, q can
    // only go as negative as the discretization gap of the reference
    Field disc = g.n == 1 ? ma_mass(g, {&ref.psi}) : ma_mass(g, {&ref.psi, &ref.psi});
    Accumulator acc;
    for (size_t k = 0; k < g.size(); ++k) {
        if (!g.interior(k)) continue;
        double qk = q[k];
        // that gap and rounding in the tails may leave small negative masses;
        // those are clipped, genuine sign changes are errors
        double slack = std::max(1e-3 * mag[k], 2 * std::abs(ref.mass_an[k] - disc[k]));
        if (!std::isfinite(qk) || qk < -(slack + floor[k])) {
            auto ij = g.coords(k);
            std::ostringstream os;
            os << "entropy integrand undefined (degenerate Hessian) at node (" << ij[0] << "," << ij[1] << "), x = " << g.x(0, ij[0]);
            throw std::runtime_error(os.str());
        }
        // densities below 1e-300 carry no usable log ratio; tails hold < 1e-8 of the mass
        if (qk <= 1e-300) continue;
        acc.add(qk * (std::log(qk) - std::log(ref.mass_an[k])));
    }
    return acc.value() / ref.V;
}

namespace {

struct Values {
    double E, ERic, J, ent, M;
};

Values suite_values(const Reference& ref, const SField& phi)
{
    const Grid& g = ref.grid;
    std::vector<Slot> all;
    for (int i = 0; i <= g.n; ++i) all.push_back({&ref.psi, &phi});
    Values v{};
    v.E = deligne(g, all) / ((g.n + 1) * ref.V);
    std::vector<Slot> ric{{&ref.ricci, nullptr}};
    for (int i = 0; i < g.n; ++i) ric.push_back({&ref.psi, &phi});
    v.ERic = deligne(g, ric) / ref.V;
    std::vector<Slot> first{{&ref.psi, &phi}};
    for (int i = 0; i < g.n; ++i) first.push_back({&ref.psi, nullptr});
    v.J = deligne(g, first) / ref.V - v.E;
    v.ent = entropy(ref, phi);
    v.M = ref.Sbar * v.E - v.ERic + v.ent;
    return v;
}

}  // namespace

Reference coarsened(const Reference& ref)
{
    Reference c;
    c.grid = ref.grid.coarsened();
    c.guillemin = ref.guillemin;
    c.psi = restrict_to_coarse(ref.grid, ref.psi);
    c.ricci = restrict_to_coarse(ref.grid, ref.ricci);
    c.logdet = restrict_to_coarse(ref.grid, ref.logdet);
    const double nf = c.grid.n == 1 ? 1.0 : 2.0;
    c.mass_an.resize(c.logdet.size());
    for (size_t k = 0; k < c.logdet.size(); ++k) c.mass_an[k] = nf * std::exp(c.logdet[k]) * c.grid.cell();
    for (int a = 0; a < c.grid.n; ++a) c.grad[a] = restrict_to_coarse(ref.grid, ref.grad[a]);
    c.V = ref.V;
    c.Sbar = ref.Sbar;
    return c;
}

EnergySuite energy_suite(const Reference& ref, const SField& phi, bool estimate_error)
{
    Values fine = suite_values(ref, phi);
    Values err{0, 0, 0, 0, 0};
    bool odd = ref.grid.N[0] % 2 == 1 && (ref.grid.n == 1 || ref.grid.N[1] % 2 == 1);
    if (estimate_error && odd) {
        Reference c = coarsened(ref);
        Values coarse = suite_values(c, restrict_to_coarse(ref.grid, phi));
        err = {std::abs(fine.E - coarse.E) / 3, std::abs(fine.ERic - coarse.ERic) / 3, std::abs(fine.J - coarse.J) / 3,
               std::abs(fine.ent - coarse.ent) / 3, std::abs(fine.M - coarse.M) / 3};
    }
    EnergySuite s;
    s.E = {"E", fine.E, err.E};
    s.ERic = {"ERic", fine.ERic, err.ERic};
    s.J = {"J", fine.J, err.J};
    s.entropy = {"entropy", fine.ent, err.ent};
    s.M = {"M", fine.M, err.M};
    return s;
}

double mabuchi_proxy(const Reference& ref, const SField& phi, const Field& xi)
{
    const Grid& g = ref.grid;
    if (xi.size() != g.size()) throw ValidationError("proxy density does not match the grid");
    for (size_t k = 0; k < g.size(); ++k)
        if (g.interior(k) && !std::isfinite(xi[k])) throw ValidationError("proxy density is not finite on the grid");
    std::vector<Slot> all;
    for (int i = 0; i <= g.n; ++i) all.push_back({&ref.psi, &phi});
    double E = deligne(g, all) / ((g.n + 1) * ref.V);
    // slot 0 carries xi against the corrected measure of phi; the remaining
    // terms pair phi with the -Ric slot
    double first = pair_sum(g, xi, entropy_measure(ref, phi));
    std::vector<Slot> ric{{&ref.ricci, nullptr}};
    for (int i = 0; i < g.n; ++i) ric.push_back({&ref.psi, &phi});
    double rest = -deligne(g, ric);
    return ref.Sbar * E + (first + rest) / ref.V;
}

}  // namespace kstab
