#pragma once

#include "kstab/polytope.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace kstab {

// Uniform box grid on log coordinates, x fastest.
struct Grid {
    int n = 1;
    std::array<double, 2> lo{0, 0}, hi{0, 0};
    std::array<int, 2> N{1, 1};

    static Grid make(int n, const std::vector<std::pair<double, double>>& box, const std::vector<int>& res);

    double h(int a) const { return (hi[a] - lo[a]) / (N[a] - 1); }
    double x(int a, int i) const { return lo[a] + i * h(a); }
    size_t size() const { return static_cast<size_t>(N[0]) * (n == 2 ? N[1] : 1); }
    size_t index(int i, int j = 0) const { return static_cast<size_t>(i) + static_cast<size_t>(N[0]) * j; }
    std::array<int, 2> coords(size_t idx) const
    {
        return {static_cast<int>(idx % N[0]), static_cast<int>(idx / N[0])};
    }
    bool interior(size_t idx) const
    {
        auto c = coords(idx);
        if (c[0] == 0 || c[0] == N[0] - 1) return false;
        return n == 1 || (c[1] != 0 && c[1] != N[1] - 1);
    }
    double cell() const { return n == 1 ? h(0) : h(0) * h(1); }
    bool same(const Grid& o) const;
    // Every other node; requires odd resolutions.
    Grid coarsened() const;
};

using Field = std::vector<double>;

Field restrict_to_coarse(const Grid& fine, const Field& f);

// Sampled function carried as an affine part plus a small remainder. Nodes
// with equal non-negative labels share the same affine part, so differences
// over such stencils are taken on the remainder and keep full relative
// precision in the exponentially flat tails.
struct SField {
    Field val, rem;
    std::vector<std::int64_t> label;

    SField() = default;
    explicit SField(Field v) : val(std::move(v)), rem(val.size(), 0.0), label(val.size(), -1) {}
    size_t size() const { return val.size(); }
};

SField operator+(const SField& a, const SField& b);
SField operator-(const SField& a, const SField& b);
SField scaled(const SField& a, double c);
SField constant_field(size_t n, double c);
SField restrict_to_coarse(const Grid& fine, const SField& f);

using VecX = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using MatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

struct RefPoint {
    VecX y;  // gradient image, a point of the polytope
    double psi = 0;
    double logdet = 0;  // log det D^2 psi
    MatX hess;
    int chart = 0;       // vertex whose chart was used
    double psi_rem = 0;  // psi - <x, vertex> - u(vertex)
    double r_rem = 0;    // -logdet minus its affine asymptote in this chart
};

// Guillemin potential u = sum_F l_F log l_F of a simple polytope and its
// Legendre dual, evaluated pointwise. Far in the tails the solve runs in the
// chart sigma = log l of the nearest vertex, so tiny Hessians keep full
// relative precision.
class Guillemin {
public:
    Guillemin() = default;
    explicit Guillemin(const Polytope<double>& p, bool require_delzant = true);

    int dim() const { return dim_; }
    const Polytope<double>& polytope() const { return poly_; }

    double u(const VecX& y) const;
    VecX grad_u(const VecX& y) const;
    RefPoint eval(const VecX& x) const;
    RefPoint eval(double x) const
    {
        VecX v(1);
        v(0) = x;
        return eval(v);
    }

private:
    struct Chart {
        VecX v;
        MatX N, Ninv;
        double logabsdet = 0;
        std::vector<int> in, out;
        std::vector<double> lout_v;  // l_G(v) for G not through v
    };

    VecX newton_y(const VecX& x) const;
    bool polish(const Chart& c, const VecX& x, VecX& sigma) const;
    RefPoint finish(const Chart& c, const VecX& x, const VecX& sigma) const;
    int chart_index(const Chart& c) const { return static_cast<int>(&c - charts_.data()); }

    int dim_ = 0;
    Polytope<double> poly_;
    std::vector<VecX> normals_;
    std::vector<double> supports_;
    VecX normal_sum_, centroid_;
    std::vector<Chart> charts_;
};

// Sampled reference metric on a grid.
struct Reference {
    Grid grid;
    Guillemin guillemin;
    SField psi;
    SField ricci;   // -log det D^2 psi_ref
    Field logdet;   // log det D^2 psi_ref (analytic)
    Field mass_an;  // n! det D^2 psi_ref * cell, analytic node mass
    std::array<Field, 2> grad;
    double V = 0;     // n! vol(P)
    double Sbar = 0;
};

// Builds the reference on the grid; refuses boxes that lose more than
// mass_tol of the total mass (relative).
Reference guillemin_reference(const Polytope<double>& p, const Grid& grid, double mass_tol = 1e-8);

struct TorusPotential {
    const Reference* ref = nullptr;
    SField phi;

    SField psi() const { return ref->psi + phi; }
};

// Mixed Monge-Ampere node masses n! D(D^2 psi_1, ..., D^2 psi_n) * cell at
// interior nodes (zero on the box edge). n = 1: second differences; n = 2:
// mixed areas of gradient polygons of the Freudenthal P1 interpolant.
Field ma_mass(const Grid& g, const std::vector<const SField*>& slots);
Field ma_density(const Grid& g, const std::vector<const SField*>& slots);

struct RicciData {
    SField r;  // -log det D^2 psi_ref
    double c1_alpha = 0;  // (c_1 . alpha^{n-1}) from the facet formula
};

RicciData ricci_potential(const Reference& ref);

// Discrete Legendre transform of samples on ygrid, evaluated on xgrid
// (linear-time hull walk per line, separable in two dimensions).
Field legendre_transform(const Grid& ygrid, const Field& f, const Grid& xgrid, bool check_convex = true);

}  // namespace kstab
