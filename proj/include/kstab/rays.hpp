#pragma once

#include "kstab/potentials.hpp"
#include "kstab/testconfig.hpp"

#include <functional>
#include <iosfwd>

namespace kstab {

enum class RayKind { geodesic, smooth, subgeodesic };
const char* to_string(RayKind k);

// Fiber potentials psi_t sampled on a common grid. Along a ruling a the
// geodesic satisfies psi_{t+k}(x + k a) = psi_t(x) + affine, which is what the
// Monge-Ampere residual differences along.
struct Ray {
    RayKind kind = RayKind::geodesic;
    Grid grid;
    std::vector<double> times;
    std::vector<SField> psi;
    std::vector<std::vector<double>> rulings;
    std::vector<double> hessian_sup;  // per t, sup of |discrete second derivatives|
    double min_convexity = 0;         // min over t of the smallest fiber second difference
    std::string compatibility;        // "C11", "smooth" or "Linf"
    // labels also mark affine parts that are affine in (x, t) jointly
    bool time_split = true;

    SField phi(size_t k, const SField& ref_psi) const { return psi.at(k) - ref_psi; }
};

// Box wide enough that psi_t has its tails inside for every t <= t_max, with
// nodes on the lattice h Z so that rational shifts t a land on nodes.
Grid ray_grid(const TestConfig<double>& tc, double t_max, double h, double margin = 40, bool odd = true);
Grid ray_grid(const std::vector<TestConfig<double>>& tcs, double t_max, double h, double margin = 40, bool odd = true);

// psi_t = (u0 + t f)^*, evaluated exactly per node as the largest of the lower
// bounds from piece charts, region vertices and region edges.
Ray geodesic_ray(const TestConfig<double>& tc, const Guillemin& u0, const Grid& grid, const std::vector<double>& times);

// psi_t(x) = Psi(x, t) - t C with Psi the Legendre dual of the Guillemin
// potential of the total polytope Q_C.
Ray smooth_ray(const TestConfig<double>& tc, double C, const Grid& grid, const std::vector<double>& times);

// psi_t = (1 - s(t)) psi0 + s(t) psi1.
Ray convex_combination_ray(const Grid& grid, const SField& psi0, const SField& psi1, const std::function<double(double)>& s,
                           const std::vector<double>& times);

// beta_t = log((n+1)! det D^2 Psi(x, t)) + t, so that e^{beta_t} are the
// fiberwise volume forms of the Guillemin metric of Q_C (one dimension only).
// Returned as logs: e^{beta_t} underflows in the tails.
std::vector<Field> beta_family(const TestConfig<double>& tc, double C, const Grid& grid, const std::vector<double>& times);

// Largest normalized determinant of the (n+1)-dimensional discrete Hessian of
// (x,t) -> psi_t(x), clamped at 0. Needs >= 3 uniformly spaced times.
double hmae_residual(const Ray& ray);

// Smallest normalized eigenvalue of the same Hessians (>= 0 up to rounding
// for subgeodesics).
double subgeodesic_margin(const Ray& ray);

// Binary dump: "KSTABRAY", int32 n, per axis (double lo, double hi, int32 N),
// int32 T, T doubles of times, then per t the N0*N1 values with x fastest.
// Little-endian.
void write_ray(const Ray& ray, std::ostream& os);

}  // namespace kstab
