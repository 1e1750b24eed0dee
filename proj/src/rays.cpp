#include "kstab/rays.hpp"

#include "kstab/parallel.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ostream>

namespace kstab {

const char* to_string(RayKind k)
{
    switch (k) {
    case RayKind::geodesic: return "geodesic";
    case RayKind::smooth: return "smooth";
    case RayKind::subgeodesic: return "subgeodesic";
    }
    return "?";
}

namespace {

constexpr std::int64_t kVertexLabel = 1'000'000;

std::vector<std::vector<double>> slopes_of(const TestConfig<double>& tc)
{
    std::vector<std::vector<double>> out;
    for (const auto& p : tc.pieces()) {
        std::vector<double> a;
        for (const auto& x : p.a) a.push_back(to_double(x));
        out.push_back(a);
    }
    return out;
}

// Fiber statistics shared by all ray kinds.
void fiber_stats(Ray& ray)
{
    const Grid& g = ray.grid;
    ray.hessian_sup.clear();
    ray.min_convexity = std::numeric_limits<double>::infinity();
    std::vector<std::array<int, 2>> dirs{{1, 0}};
    if (g.n == 2) dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (const auto& f : ray.psi) {
        double sup = 0, lo = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < g.size(); ++k) {
            auto ij = g.coords(k);
            for (auto d : dirs) {
                int i0 = ij[0] - d[0], i1 = ij[0] + d[0], j0 = ij[1] - d[1], j1 = ij[1] + d[1];
                if (std::min(i0, i1) < 0 || std::max(i0, i1) >= g.N[0]) continue;
                if (g.n == 2 && (std::min(j0, j1) < 0 || std::max(j0, j1) >= g.N[1])) continue;
                size_t a = g.index(i0, g.n == 2 ? j0 : 0), b = g.index(i1, g.n == 2 ? j1 : 0);
                bool same = f.label[a] >= 0 && f.label[a] == f.label[k] && f.label[b] == f.label[k];
                const Field& v = same ? f.rem : f.val;
                double len2 = std::pow(d[0] * g.h(0), 2) + (g.n == 2 ? std::pow(d[1] * g.h(1), 2) : 0.0);
                double dd = (v[a] - 2 * v[k] + v[b]) / len2;
                sup = std::max(sup, std::abs(dd));
                lo = std::min(lo, dd);
            }
        }
        ray.hessian_sup.push_back(sup);
        ray.min_convexity = std::min(ray.min_convexity, lo);
    }
}

void check_times(const std::vector<double>& times)
{
    if (times.empty()) throw ValidationError("ray needs at least one time");
    for (size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || times[k] < 0) throw ValidationError("ray times must be finite and non-negative");
        if (k > 0 && !(times[k] > times[k - 1])) throw ValidationError("ray times must be increasing");
    }
}

struct EdgeCand {
    VecX p, q;  // endpoints
    int piece;
};

class GeodesicEval {
public:
    GeodesicEval(const TestConfig<double>& tc, const Guillemin& u0) : tc_(tc), u0_(u0), n_(tc.dim())
    {
        const auto& P = tc.base();
        for (const auto& f : P.facets()) {
            VecX nu(n_);
            for (int a = 0; a < n_; ++a) nu(a) = static_cast<double>(f.normal[a]);
            normals_.push_back(nu);
            supports_.push_back(f.support);
        }
        for (const auto& p : tc.pieces()) {
            VecX a(n_);
            for (int k = 0; k < n_; ++k) a(k) = to_double(p.a[k]);
            slopes_.push_back(a);
            intercepts_.push_back(p.b);
        }
        // vertices and tie edges of the regions, interior to P
        for (size_t r = 0; r < tc.regions().size(); ++r) {
            const auto& reg = tc.regions()[r];
            for (const auto& v : reg.vertices()) {
                VecX y = to_vec(v);
                if (min_l(y) <= 1e-12) continue;
                bool dup = false;
                for (const auto& w : verts_) dup = dup || (w - y).norm() < 1e-12;
                if (!dup) verts_.push_back(y);
            }
            if (n_ != 2) continue;
            for (size_t f = 0; f < reg.facets().size(); ++f) {
                const auto& fr = reg.facets()[f];
                bool boundary = false;
                for (const auto& fp : P.facets())
                    boundary = boundary || (fp.normal == fr.normal && std::abs(fp.support - fr.support) < 1e-12);
                if (boundary) continue;
                auto ids = reg.facet_vertex_ids(f);
                if (ids.size() != 2) continue;
                edges_.push_back({to_vec(reg.vertices()[ids[0]]), to_vec(reg.vertices()[ids[1]]), static_cast<int>(r)});
            }
        }
        for (const auto& y : verts_) vert_u_.push_back(u0_.u(y));
    }

    struct Result {
        double val, rem;
        std::int64_t label;
        VecX y;
    };

    Result operator()(const VecX& x, double t) const
    {
        const double inf = std::numeric_limits<double>::infinity();
        Result best{-inf, 0, -1, VecX()}, fallback{-inf, 0, -1, VecX()};
        for (size_t j = 0; j < slopes_.size(); ++j) {
            VecX z = x - t * slopes_[j];
            RefPoint rp = u0_.eval(z);
            double gap = f(rp.y) - ell(j, rp.y);
            double v = rp.psi - t * intercepts_[j];
            if (gap <= 1e-12 * (1 + std::abs(ell(j, rp.y)))) {
                if (v > best.val) best = {v, rp.psi_rem, 1 + rp.chart + 1000 * static_cast<std::int64_t>(j), rp.y};
            } else if (v - t * gap > fallback.val) {
                // y_j left region j, so this bound is not sharp; its value
                // cancels catastrophically in the tails, use only as a last resort
                fallback = {v - t * gap, 0.0, -1, rp.y};
            }
        }
        for (size_t b = 0; b < verts_.size(); ++b) {
            double v = x.dot(verts_[b]) - vert_u_[b] - t * f(verts_[b]);
            if (v > best.val) best = {v, 0.0, kVertexLabel + static_cast<std::int64_t>(b), verts_[b]};
        }
        for (const auto& e : edges_) {
            VecX y;
            double v = edge_max(e, x, t, y);
            if (v > best.val) best = {v, 0.0, -1, y};
        }
        return best.val > -inf ? best : fallback;
    }

    double min_l(const VecX& y) const
    {
        double m = std::numeric_limits<double>::infinity();
        for (size_t F = 0; F < normals_.size(); ++F) m = std::min(m, normals_[F].dot(y) + supports_[F]);
        return m;
    }

private:
    VecX to_vec(const Vec<double>& v) const
    {
        VecX y(n_);
        for (int a = 0; a < n_; ++a) y(a) = v[a];
        return y;
    }

    double ell(size_t j, const VecX& y) const { return slopes_[j].dot(y) + intercepts_[j]; }
    double f(const VecX& y) const
    {
        double m = ell(0, y);
        for (size_t j = 1; j < slopes_.size(); ++j) m = std::max(m, ell(j, y));
        return m;
    }

    // max over the segment of <x - t a_j, y> - u0(y) - t b_j; -inf when the
    // maximum sits at an endpoint (covered by the vertex candidates).
    double edge_max(const EdgeCand& e, const VecX& x, double t, VecX& yout) const
    {
        const VecX d = e.q - e.p;
        const VecX xs = x - t * slopes_[e.piece];
        auto deriv = [&](double s, double& g1, double& g2) {
            VecX y = e.p + s * d;
            g1 = xs.dot(d);
            g2 = 0;
            for (size_t F = 0; F < normals_.size(); ++F) {
                double l = normals_[F].dot(y) + supports_[F];
                double nd = normals_[F].dot(d);
                if (nd == 0) continue;
                g1 -= nd * (std::log(l) + 1);
                g2 -= nd * nd / l;
            }
        };
        double g1, g2;
        if (min_l(e.p) > 1e-12) {
            deriv(0, g1, g2);
            if (g1 <= 0) return -std::numeric_limits<double>::infinity();
        }
        if (min_l(e.q) > 1e-12) {
            deriv(1, g1, g2);
            if (g1 >= 0) return -std::numeric_limits<double>::infinity();
        }
        double lo = 0, hi = 1, s = 0.5;
        for (int it = 0; it < 200; ++it) {
            deriv(s, g1, g2);
            if (g1 > 0)
                lo = s;
            else
                hi = s;
            double step = g2 < 0 ? -g1 / g2 : 0;
            double next = s + step;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - s) <= 1e-16 || hi - lo <= 1e-16) {
                s = next;
                break;
            }
            s = next;
        }
        yout = e.p + s * d;
        return xs.dot(yout) - u0_.u(yout) - t * intercepts_[e.piece];
    }

    const TestConfig<double>& tc_;
    const Guillemin& u0_;
    int n_;
    std::vector<VecX> normals_;
    std::vector<double> supports_;
    std::vector<VecX> slopes_;
    std::vector<double> intercepts_;
    std::vector<VecX> verts_;
    std::vector<double> vert_u_;
    std::vector<EdgeCand> edges_;
};

bool on_box_edge(const Grid& g, size_t k)
{
    auto ij = g.coords(k);
    if (ij[0] == 0 || ij[0] == g.N[0] - 1) return true;
    return g.n == 2 && (ij[1] == 0 || ij[1] == g.N[1] - 1);
}

VecX node(const Grid& g, size_t k)
{
    auto ij = g.coords(k);
    VecX x(g.n);
    for (int a = 0; a < g.n; ++a) x(a) = g.x(a, ij[a]);
    return x;
}

}  // namespace

Grid ray_grid(const TestConfig<double>& tc, double t_max, double h, double margin, bool odd)
{
    return ray_grid(std::vector<TestConfig<double>>{tc}, t_max, h, margin, odd);
}

Grid ray_grid(const std::vector<TestConfig<double>>& tcs, double t_max, double h, double margin, bool odd)
{
    if (!(h > 0) || !(t_max >= 0) || !(margin > 0)) throw ValidationError("ray grid needs h > 0, t_max >= 0, margin > 0");
    if (tcs.empty()) throw ValidationError("ray grid needs a configuration");
    const int n = tcs.front().dim();
    std::vector<std::vector<double>> sl;
    for (const auto& tc : tcs) {
        if (tc.dim() != n) throw ValidationError("configurations of different dimensions");
        for (auto& a : slopes_of(tc)) sl.push_back(a);
    }
    std::vector<std::pair<double, double>> box;
    std::vector<int> res;
    for (int a = 0; a < n; ++a) {
        double amin = 0, amax = 0;
        for (const auto& s : sl) {
            amin = std::min(amin, s[a]);
            amax = std::max(amax, s[a]);
        }
        double lo = std::floor((-margin + t_max * amin) / h) * h;
        double hi = std::ceil((margin + t_max * amax) / h) * h;
        long cells = std::lround((hi - lo) / h);
        if (odd && cells % 2 == 1) {
            ++cells;
            hi = lo + cells * h;
        }
        if (cells + 1 > 20'000'000) throw ValidationError("ray grid too large");
        box.push_back({lo, hi});
        res.push_back(static_cast<int>(cells + 1));
    }
    return Grid::make(n, box, res);
}

Ray geodesic_ray(const TestConfig<double>& tc, const Guillemin& u0, const Grid& grid, const std::vector<double>& times)
{
    check_times(times);
    if (tc.dim() != grid.n || u0.dim() != grid.n) throw ValidationError("ray grid dimension differs from the configuration");
    GeodesicEval ev(tc, u0);
    Ray ray;
    ray.kind = RayKind::geodesic;
    ray.grid = grid;
    ray.times = times;
    ray.rulings = slopes_of(tc);
    ray.compatibility = "C11";
    for (double t : times) {
        SField s(Field(grid.size(), 0.0));
        std::vector<char> bad(grid.size(), 0);
        parallel_for(grid.size(), [&](size_t k) {
            auto r = ev(node(grid, k), t);
            s.val[k] = r.val;
            s.rem[k] = r.rem;
            s.label[k] = r.label;
            // at the box edge the gradient must already hug the boundary of P
            if (on_box_edge(grid, k) && ev.min_l(r.y) > 1e-6) bad[k] = 1;
        });
        for (size_t k = 0; k < grid.size(); ++k)
            if (bad[k]) throw ValidationError("ray box too small for t = " + std::to_string(t) + " (gradient image leaves the box)");
        ray.psi.push_back(std::move(s));
    }
    fiber_stats(ray);
    return ray;
}

Ray smooth_ray(const TestConfig<double>& tc, double C, const Grid& grid, const std::vector<double>& times)
{
    check_times(times);
    if (!(C > tc.max_value())) throw ValidationError("twist constant C must exceed max f");
    if (tc.dim() != grid.n) throw ValidationError("ray grid dimension differs from the configuration");
    Guillemin big(tc.total_polytope(C), false);
    const int n = grid.n;
    Ray ray;
    ray.kind = RayKind::smooth;
    ray.grid = grid;
    ray.times = times;
    ray.rulings = slopes_of(tc);
    ray.compatibility = "smooth";
    for (double t : times) {
        SField s(Field(grid.size(), 0.0));
        parallel_for(grid.size(), [&](size_t k) {
            VecX X(n + 1);
            X.head(n) = node(grid, k);
            X(n) = t;
            RefPoint rp = big.eval(X);
            s.val[k] = rp.psi - t * C;
            // affine part <x, y_v> + t (s_v - C) is affine in (x, t)
            s.rem[k] = rp.psi_rem;
            s.label[k] = rp.chart;
        });
        ray.psi.push_back(std::move(s));
    }
    fiber_stats(ray);
    return ray;
}

Ray convex_combination_ray(const Grid& grid, const SField& psi0, const SField& psi1, const std::function<double(double)>& s,
                           const std::vector<double>& times)
{
    check_times(times);
    if (psi0.size() != grid.size() || psi1.size() != grid.size()) throw ValidationError("endpoint potentials do not match the grid");
    Ray ray;
    ray.kind = RayKind::subgeodesic;
    ray.grid = grid;
    ray.times = times;
    ray.compatibility = "Linf";
    // the affine parts of the fibers are not affine in t
    ray.time_split = false;
    for (double t : times) {
        double c = s(t);
        ray.psi.push_back(scaled(psi0, 1 - c) + scaled(psi1, c));
    }
    fiber_stats(ray);
    return ray;
}

std::vector<Field> beta_family(const TestConfig<double>& tc, double C, const Grid& grid, const std::vector<double>& times)
{
    if (grid.n != 1) throw ValidationError("beta densities are implemented in one dimension only");
    if (!(C > tc.max_value())) throw ValidationError("twist constant C must exceed max f");
    check_times(times);
    Guillemin big(tc.total_polytope(C), false);
    std::vector<Field> out;
    for (double t : times) {
        Field d(grid.size());
        parallel_for(grid.size(), [&](size_t k) {
            VecX X(2);
            X << grid.x(0, static_cast<int>(k)), t;
            d[k] = std::log(2.0) + big.eval(X).logdet + t;
        });
        out.push_back(std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct SpaceTime {
    const Ray& ray;
    int n, T;
    double k;

    // second difference of (x,t) -> psi_t(x) at node (i,j,m) along integer step v
    bool diff(int i, int j, int m, const std::array<int, 3>& v, double& out) const
    {
        const Grid& g = ray.grid;
        int i0 = i - v[0], i1 = i + v[0], j0 = j - v[1], j1 = j + v[1], m0 = m - v[2], m1 = m + v[2];
        if (i0 < 0 || i1 < 0 || i0 >= g.N[0] || i1 >= g.N[0]) return false;
        if (n == 2 && (j0 < 0 || j1 < 0 || j0 >= g.N[1] || j1 >= g.N[1])) return false;
        if (m0 < 0 || m1 >= T) return false;
        size_t a = g.index(i0, j0), c = g.index(i, j), b = g.index(i1, j1);
        const SField &fa = ray.psi[m0], &fc = ray.psi[m], &fb = ray.psi[m1];
        std::int64_t l = fc.label[c];
        bool same = l >= 0 && fa.label[a] == l && fb.label[b] == l && (v[2] == 0 || ray.time_split);
        out = same ? fa.rem[a] - 2 * fc.rem[c] + fb.rem[b] : fa.val[a] - 2 * fc.val[c] + fb.val[b];
        return true;
    }
};

struct HessianScan {
    double residual = 0;
};

HessianScan scan_hessians(const Ray& ray)
{
    const Grid& g = ray.grid;
    const int n = g.n;
    const int T = static_cast<int>(ray.times.size());
    if (T < 3) throw ValidationError("Monge-Ampere residual needs at least 3 time samples");
    const double k = ray.times[1] - ray.times[0];
    for (int m = 2; m < T; ++m)
        if (std::abs(ray.times[m] - ray.times[m - 1] - k) > 1e-9 * std::max(1.0, k))
            throw ValidationError("Monge-Ampere residual needs uniformly spaced times");
    // ruling steps p with p h = k a; non-lattice rulings are skipped
    std::vector<std::array<int, 3>> ws{{0, 0, 1}};
    for (const auto& a : ray.rulings) {
        std::array<int, 3> w{0, 0, 1};
        bool ok = true;
        for (int d = 0; d < n; ++d) {
            double p = k * a[d] / g.h(d);
            if (std::abs(p - std::round(p)) > 1e-9) ok = false;
            w[d] = static_cast<int>(std::lround(p));
        }
        if (ok && std::find(ws.begin(), ws.end(), w) == ws.end()) ws.push_back(w);
    }
    SpaceTime st{ray, n, T, k};
    const int N1 = n == 2 ? g.N[1] : 1;
    const size_t count = static_cast<size_t>(g.N[0]) * N1 * T;

    // pass 1: scale S = max |second difference|
    std::vector<double> smax(count, 0.0);
    // pass 2 stores per node the best (smallest) det and the best (largest) min eigenvalue
    std::vector<double> dets(count, -std::numeric_limits<double>::infinity());
    std::vector<char> valid(count, 0);
    parallel_for(count, [&](size_t idx) {
        int m = static_cast<int>(idx / (static_cast<size_t>(g.N[0]) * N1));
        size_t rest = idx % (static_cast<size_t>(g.N[0]) * N1);
        auto ij = g.coords(rest);
        int i = ij[0], j = ij[1];
        std::array<std::array<int, 3>, 2> axes{{{1, 0, 0}, {0, 1, 0}}};
        double bestdet = std::numeric_limits<double>::infinity();
        double local = 0;
        bool any = false;
        for (const auto& w : ws) {
            std::vector<std::array<int, 3>> basis;
            for (int d = 0; d < n; ++d) basis.push_back(axes[d]);
            basis.push_back(w);
            const int dim = n + 1;
            Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
            bool ok = true;
            for (int p = 0; p < dim && ok; ++p) {
                double dp;
                ok = st.diff(i, j, m, basis[p], dp);
                G(p, p) = dp;
                local = std::max(local, std::abs(dp));
            }
            for (int p = 0; p < dim && ok; ++p)
                for (int q = p + 1; q < dim && ok; ++q) {
                    std::array<int, 3> sum{basis[p][0] + basis[q][0], basis[p][1] + basis[q][1], basis[p][2] + basis[q][2]};
                    double ds;
                    ok = st.diff(i, j, m, sum, ds);
                    G(p, q) = G(q, p) = 0.5 * (ds - G(p, p) - G(q, q));
                    local = std::max(local, std::abs(ds));
                }
            if (!ok) continue;
            any = true;
            auto Gd = G.topLeftCorner(dim, dim);
            bestdet = std::min(bestdet, Gd.determinant());
        }
        if (!any) return;
        valid[idx] = 1;
        smax[idx] = local;
        dets[idx] = bestdet;
    });
    double S = 0;
    for (size_t i = 0; i < count; ++i)
        if (valid[i]) S = std::max(S, smax[i]);
    HessianScan out;
    if (S == 0) return out;
    double worst = 0;
    for (size_t i = 0; i < count; ++i)
        if (valid[i]) worst = std::max(worst, dets[i]);
    out.residual = worst / std::pow(S, n + 1);
    return out;
}

}  // namespace

double hmae_residual(const Ray& ray) { return scan_hessians(ray).residual; }

// Midpoint convexity of (x,t) -> psi_t(x) along every primitive step with
// space components in [-2,2] and time component in [0,2]. Unlike a polarized
// Hessian this is sign-exact for convex functions with kinks.
double subgeodesic_margin(const Ray& ray)
{
    const Grid& g = ray.grid;
    const int n = g.n;
    const int T = static_cast<int>(ray.times.size());
    if (T < 3) throw ValidationError("subgeodesic check needs at least 3 time samples");
    const double k = ray.times[1] - ray.times[0];
    for (int m = 2; m < T; ++m)
        if (std::abs(ray.times[m] - ray.times[m - 1] - k) > 1e-9 * std::max(1.0, k))
            throw ValidationError("subgeodesic check needs uniformly spaced times");
    std::vector<std::array<int, 3>> dirs;
    const int r2 = n == 2 ? 2 : 0;
    for (int c = 0; c <= 2; ++c)
        for (int a = -2; a <= 2; ++a)
            for (int b = -r2; b <= r2; ++b) {
                int gg = std::gcd(std::gcd(std::abs(a), std::abs(b)), c);
                if (gg != 1) continue;
                // canonical sign: first non-zero of (c, a, b) positive
                int lead = c != 0 ? c : (a != 0 ? a : b);
                if (lead < 0) continue;
                dirs.push_back({a, b, c});
            }
    SpaceTime st{ray, n, T, k};
    const int N1 = n == 2 ? g.N[1] : 1;
    const size_t plane = static_cast<size_t>(g.N[0]) * N1;
    const size_t count = plane * T;
    std::vector<double> lo(count, std::numeric_limits<double>::infinity()), hi(count, 0.0);
    parallel_for(count, [&](size_t idx) {
        int m = static_cast<int>(idx / plane);
        auto ij = g.coords(idx % plane);
        for (const auto& d : dirs) {
            double v;
            if (!st.diff(ij[0], ij[1], m, d, v)) continue;
            lo[idx] = std::min(lo[idx], v);
            hi[idx] = std::max(hi[idx], std::abs(v));
        }
    });
    double S = 0, worst = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < count; ++i) {
        S = std::max(S, hi[i]);
        worst = std::min(worst, lo[i]);
    }
    if (S == 0 || !std::isfinite(worst)) return 0;
    return worst / S;
}

void write_ray(const Ray& ray, std::ostream& os)
{
    auto put_i = [&](std::int32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((static_cast<std::uint32_t>(v) >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(b), 4);
    };
    auto put_d = [&](double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(b), 8);
    };
    os.write("KSTABRAY", 8);
    const Grid& g = ray.grid;
    put_i(g.n);
    for (int a = 0; a < g.n; ++a) {
        put_d(g.lo[a]);
        put_d(g.hi[a]);
        put_i(g.N[a]);
    }
    put_i(static_cast<std::int32_t>(ray.times.size()));
    for (double t : ray.times) put_d(t);
    for (const auto& f : ray.psi)
        for (double v : f.val) put_d(v);
}

}  // namespace kstab
