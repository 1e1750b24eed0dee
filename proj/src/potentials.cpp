#include "kstab/potentials.hpp"

#include "kstab/invariants.hpp"
#include "kstab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kstab {

Grid Grid::make(int n, const std::vector<std::pair<double, double>>& box, const std::vector<int>& res)
{
    if (n != 1 && n != 2) throw ValidationError("grids support dimension 1 or 2");
    if (static_cast<int>(box.size()) != n || static_cast<int>(res.size()) != n)
        throw ValidationError("grid box/resolution has wrong dimension");
    Grid g;
    g.n = n;
    for (int a = 0; a < n; ++a) {
        if (!(box[a].second > box[a].first)) throw ValidationError("grid box is empty");
        if (res[a] < 5) throw ValidationError("grid resolution must be at least 5");
        g.lo[a] = box[a].first;
        g.hi[a] = box[a].second;
        g.N[a] = res[a];
    }
    return g;
}

bool Grid::same(const Grid& o) const
{
    return n == o.n && lo == o.lo && hi == o.hi && N[0] == o.N[0] && (n == 1 || N[1] == o.N[1]);
}

Grid Grid::coarsened() const
{
    Grid c = *this;
    for (int a = 0; a < n; ++a) {
        if (N[a] % 2 == 0) throw ValidationError("coarsening needs an odd resolution");
        c.N[a] = (N[a] + 1) / 2;
    }
    return c;
}

Field restrict_to_coarse(const Grid& fine, const Field& f)
{
    Grid c = fine.coarsened();
    Field out(c.size());
    for (size_t k = 0; k < c.size(); ++k) {
        auto ij = c.coords(k);
        out[k] = f[fine.index(2 * ij[0], 2 * ij[1])];
    }
    return out;
}

namespace {

std::int64_t combine(std::int64_t a, std::int64_t b, std::uint64_t op)
{
    if (a < 0 || b < 0) return -1;
    // splitmix64 finaliser on the ordered pair; collisions are immaterial at 2^-63
    std::uint64_t z = static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(b) + op;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<std::int64_t>(z >> 1);
}

SField binary(const SField& a, const SField& b, double sign, std::uint64_t op)
{
    if (a.size() != b.size()) throw ValidationError("field size mismatch");
    SField out;
    out.val.resize(a.size());
    out.rem.resize(a.size());
    out.label.resize(a.size());
    for (size_t k = 0; k < a.size(); ++k) {
        out.val[k] = a.val[k] + sign * b.val[k];
        out.rem[k] = a.rem[k] + sign * b.rem[k];
        out.label[k] = combine(a.label[k], b.label[k], op);
    }
    return out;
}

}  // namespace

SField operator+(const SField& a, const SField& b) { return binary(a, b, 1.0, 1); }
SField operator-(const SField& a, const SField& b) { return binary(a, b, -1.0, 2); }

SField scaled(const SField& a, double c)
{
    SField out = a;
    for (auto& v : out.val) v *= c;
    for (auto& v : out.rem) v *= c;
    return out;
}

SField constant_field(size_t n, double c)
{
    SField out;
    out.val.assign(n, c);
    out.rem.assign(n, 0.0);
    out.label.assign(n, 0);
    return out;
}

SField restrict_to_coarse(const Grid& fine, const SField& f)
{
    Grid c = fine.coarsened();
    SField out;
    for (size_t k = 0; k < c.size(); ++k) {
        auto ij = c.coords(k);
        size_t src = fine.index(2 * ij[0], 2 * ij[1]);
        out.val.push_back(f.val[src]);
        out.rem.push_back(f.rem[src]);
        out.label.push_back(f.label[src]);
    }
    return out;
}

// ---------------------------------------------------------------------------

Guillemin::Guillemin(const Polytope<double>& p, bool require_delzant) : dim_(p.dim()), poly_(p)
{
    if (dim_ > 3) throw ValidationError("reference metrics support dimension at most 3");
    auto cert = p.delzant();
    if (require_delzant && !cert.delzant) throw ValidationError("reference metric needs a Delzant polytope: " + cert.reason);
    normal_sum_ = VecX::Zero(dim_);
    for (const auto& f : p.facets()) {
        VecX nu(dim_);
        for (int k = 0; k < dim_; ++k) nu(k) = static_cast<double>(f.normal[k]);
        normals_.push_back(nu);
        supports_.push_back(f.support);
        normal_sum_ += nu;
    }
    centroid_ = VecX::Zero(dim_);
    for (const auto& v : p.vertices())
        for (int k = 0; k < dim_; ++k) centroid_(k) += v[k] / p.vertices().size();

    for (size_t vi = 0; vi < p.vertices().size(); ++vi) {
        const auto& fs = p.vertex_facets()[vi];
        if (static_cast<int>(fs.size()) != dim_) throw ValidationError("reference metric needs a simple polytope");
        Chart c;
        c.v = VecX(dim_);
        for (int k = 0; k < dim_; ++k) c.v(k) = p.vertices()[vi][k];
        c.N = MatX(dim_, dim_);
        for (int r = 0; r < dim_; ++r) c.N.row(r) = normals_[fs[r]].transpose();
        c.Ninv = c.N.inverse();
        c.logabsdet = std::log(std::abs(c.N.determinant()));
        c.in = fs;
        for (int f = 0; f < static_cast<int>(normals_.size()); ++f)
            if (std::find(fs.begin(), fs.end(), f) == fs.end()) {
                c.out.push_back(f);
                c.lout_v.push_back(normals_[f].dot(c.v) + supports_[f]);
            }
        charts_.push_back(std::move(c));
    }
}

static double xlogx(double l) { return l > 0 ? l * std::log(l) : 0.0; }

double Guillemin::u(const VecX& y) const
{
    double s = 0;
    for (size_t f = 0; f < normals_.size(); ++f) s += xlogx(normals_[f].dot(y) + supports_[f]);
    return s;
}

VecX Guillemin::grad_u(const VecX& y) const
{
    VecX g = normal_sum_;
    for (size_t f = 0; f < normals_.size(); ++f) g += normals_[f] * std::log(normals_[f].dot(y) + supports_[f]);
    return g;
}

VecX Guillemin::newton_y(const VecX& x) const
{
    VecX y = centroid_;
    auto objective = [&](const VecX& z, bool& inside) {
        double s = -x.dot(z);
        inside = true;
        for (size_t f = 0; f < normals_.size(); ++f) {
            double l = normals_[f].dot(z) + supports_[f];
            if (!(l > 0)) {
                inside = false;
                return 0.0;
            }
            s += l * std::log(l);
        }
        return s;
    };
    bool inside = true;
    double obj = objective(y, inside);
    for (int it = 0; it < 200; ++it) {
        VecX g = grad_u(y) - x;
        MatX H = MatX::Zero(dim_, dim_);
        for (size_t f = 0; f < normals_.size(); ++f) H += normals_[f] * normals_[f].transpose() / (normals_[f].dot(y) + supports_[f]);
        VecX d = -H.ldlt().solve(g);
        double dec = -g.dot(d);
        if (!(dec > 1e-26)) break;
        // close to the boundary the vertex chart takes over
        double lmin = std::numeric_limits<double>::infinity();
        for (size_t f = 0; f < normals_.size(); ++f) lmin = std::min(lmin, normals_[f].dot(y) + supports_[f]);
        if (lmin < 1e-6) break;
        double alpha = 1;
        bool moved = false;
        for (int k = 0; k < 80; ++k, alpha *= 0.5) {
            VecX z = y + alpha * d;
            double oz = objective(z, inside);
            if (inside && oz <= obj - 1e-4 * alpha * dec) {
                y = z;
                obj = oz;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return y;
}

bool Guillemin::polish(const Chart& c, const VecX& x, VecX& sigma) const
{
    auto residual = [&](const VecX& s, VecX& r, std::vector<double>& lout) {
        VecX e = s.array().exp().matrix();
        VecX dy = c.Ninv * e;
        lout.resize(c.out.size());
        r = c.N.transpose() * s + normal_sum_ - x;
        for (size_t g = 0; g < c.out.size(); ++g) {
            double l = c.lout_v[g] + normals_[c.out[g]].dot(dy);
            if (!(l > 0)) return false;
            lout[g] = l;
            r += normals_[c.out[g]] * std::log(l);
        }
        return true;
    };
    VecX r;
    std::vector<double> lout;
    if (!residual(sigma, r, lout)) return false;
    const double tol = 4e-15 * (1 + x.cwiseAbs().maxCoeff());
    for (int it = 0; it < 100; ++it) {
        double nr = r.cwiseAbs().maxCoeff();
        if (nr <= tol) return true;
        MatX J = c.N.transpose();
        VecX e = sigma.array().exp().matrix();
        for (size_t g = 0; g < c.out.size(); ++g) {
            const VecX& nu = normals_[c.out[g]];
            VecX row = (nu.transpose() * c.Ninv).transpose().cwiseProduct(e) / lout[g];
            J += nu * row.transpose();
        }
        VecX d = -J.partialPivLu().solve(r);
        double alpha = 1;
        bool moved = false;
        for (int k = 0; k < 60; ++k, alpha *= 0.5) {
            VecX s2 = sigma + alpha * d;
            VecX r2;
            std::vector<double> l2;
            if (residual(s2, r2, l2) && r2.cwiseAbs().maxCoeff() < nr) {
                sigma = s2;
                r = r2;
                lout = l2;
                moved = true;
                break;
            }
        }
        if (!moved) return nr <= 1e3 * tol;
    }
    return r.cwiseAbs().maxCoeff() <= 1e3 * tol;
}

// log det(I + A) for small A without losing the O(|A|) part.
static double logdet_one_plus(const MatX& a)
{
    const int n = static_cast<int>(a.rows());
    double t = a.trace();
    if (n == 1) return std::log1p(t);
    double e2 = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e2 += a(i, i) * a(j, j) - a(i, j) * a(j, i);
    double e3 = n == 3 ? a.determinant() : 0.0;
    return std::log1p(t + e2 + e3);
}

RefPoint Guillemin::finish(const Chart& c, const VecX& x, const VecX& sigma) const
{
    const int n = dim_;
    VecX e = sigma.array().exp().matrix();
    VecX dy = c.Ninv * e;
    RefPoint p;
    p.chart = chart_index(c);
    p.y = c.v + dy;
    MatX B = MatX::Zero(n, n);
    VecX tail = VecX::Zero(n);  // sum_G nu_G log(l_G(y)/l_G(v))
    VecX base = normal_sum_;    // s + sum_G nu_G log l_G(v)
    // u minus its value at the vertex, without cancellation against l_G(v) log l_G(v)
    double u = 0, u_v = 0;
    for (int k = 0; k < n; ++k) u += e(k) * sigma(k);
    for (size_t g = 0; g < c.out.size(); ++g) {
        const VecX& nu = normals_[c.out[g]];
        double d = nu.dot(dy);
        double l0 = c.lout_v[g], l = l0 + d;
        double lp = std::log1p(d / l0);
        u += d * (std::log(l0) + lp) + l0 * lp;
        u_v += xlogx(l0);
        B += nu * nu.transpose() / l;
        tail += nu * std::log1p(d / c.lout_v[g]);
        base += nu * std::log(c.lout_v[g]);
    }
    p.psi_rem = x.dot(dy) - u;
    p.psi = x.dot(c.v) - u_v + p.psi_rem;
    MatX M = c.Ninv.transpose() * B * c.Ninv;
    VecX sq = e.array().sqrt().matrix();
    MatX A = sq.asDiagonal() * M * sq.asDiagonal();
    double logdetK = logdet_one_plus(A);
    // sum sigma = 1^T N^{-T} (x - base - tail) at the solution
    VecX w = c.Ninv * VecX::Ones(n);
    double affine = -w.dot(x - base) + 2 * c.logabsdet;
    p.r_rem = w.dot(tail) + logdetK;
    p.logdet = -(affine + p.r_rem);
    MatX K = MatX::Identity(n, n) + A;
    Eigen::LLT<MatX> llt(K);
    MatX Kinv = llt.solve(MatX::Identity(n, n));
    MatX T = c.Ninv * sq.asDiagonal();
    p.hess = T * Kinv * T.transpose();
    return p;
}

RefPoint Guillemin::eval(const VecX& x) const
{
    if (x.size() != dim_) throw ValidationError("evaluation point has wrong dimension");
    VecX y = newton_y(x);
    auto pick = [&](const VecX& z, int skip) {
        int best = -1;
        double score = -std::numeric_limits<double>::infinity();
        for (size_t ci = 0; ci < charts_.size(); ++ci) {
            if (static_cast<int>(ci) == skip) continue;
            double s = std::numeric_limits<double>::infinity();
            for (int f : charts_[ci].out) s = std::min(s, normals_[f].dot(z) + supports_[f]);
            if (s > score) {
                score = s;
                best = static_cast<int>(ci);
            }
        }
        return best;
    };
    int ci = pick(y, -1);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const Chart& c = charts_[ci];
        VecX sigma(dim_);
        for (int k = 0; k < dim_; ++k)
            sigma(k) = std::log(std::max(normals_[c.in[k]].dot(y) + supports_[c.in[k]], 1e-300));
        if (polish(c, x, sigma)) {
            RefPoint p = finish(c, x, sigma);
            double worst = std::numeric_limits<double>::infinity();
            for (int f : c.out) worst = std::min(worst, normals_[f].dot(p.y) + supports_[f]);
            if (worst > 1e-6 || attempt == 1) return p;
            y = p.y;
        }
        ci = pick(y, ci);
    }
    throw std::runtime_error("Legendre solve of the reference potential failed");
}

// ---------------------------------------------------------------------------

Reference guillemin_reference(const Polytope<double>& p, const Grid& grid, double mass_tol)
{
    if (p.dim() != grid.n) throw ValidationError("grid dimension differs from polytope dimension");
    Reference ref;
    ref.grid = grid;
    ref.guillemin = Guillemin(p);
    const size_t m = grid.size();
    ref.psi = SField(Field(m, 0.0));
    ref.ricci = SField(Field(m, 0.0));
    ref.logdet.assign(m, 0);
    ref.mass_an.assign(m, 0);
    for (int a = 0; a < grid.n; ++a) ref.grad[a].assign(m, 0);
    const double nf = grid.n == 1 ? 1.0 : 2.0;
    parallel_for(m, [&](size_t k) {
        auto ij = grid.coords(k);
        VecX x(grid.n);
        for (int a = 0; a < grid.n; ++a) x(a) = grid.x(a, ij[a]);
        RefPoint rp = ref.guillemin.eval(x);
        ref.psi.val[k] = rp.psi;
        ref.psi.rem[k] = rp.psi_rem;
        ref.psi.label[k] = rp.chart;
        ref.ricci.val[k] = -rp.logdet;
        ref.ricci.rem[k] = rp.r_rem;
        ref.ricci.label[k] = rp.chart;
        ref.logdet[k] = rp.logdet;
        ref.mass_an[k] = nf * std::exp(rp.logdet) * grid.cell();
        for (int a = 0; a < grid.n; ++a) ref.grad[a][k] = rp.y(a);
    });
    ref.V = nf * p.volume();
    ref.Sbar = average_scalar_curvature(p);
    Accumulator acc;
    for (size_t k = 0; k < m; ++k)
        if (grid.interior(k)) acc.add(ref.mass_an[k]);
    double deficit = std::abs(ref.V - acc.value()) / ref.V;
    if (deficit > mass_tol)
        throw ValidationError("reference mass deficit (box too small or grid too coarse) " + std::to_string(deficit));
    return ref;
}

// ---------------------------------------------------------------------------

namespace {

struct Tri {
    double gx, gy;
};

// Gradients of the two Freudenthal triangles of cell (i,j).
inline Tri lower_tri(const Grid& g, const Field& b, int i, int j)
{
    return {(b[g.index(i + 1, j)] - b[g.index(i, j)]) / g.h(0), (b[g.index(i + 1, j + 1)] - b[g.index(i + 1, j)]) / g.h(1)};
}
inline Tri upper_tri(const Grid& g, const Field& b, int i, int j)
{
    return {(b[g.index(i + 1, j + 1)] - b[g.index(i, j + 1)]) / g.h(0), (b[g.index(i, j + 1)] - b[g.index(i, j)]) / g.h(1)};
}

// The six triangle gradients around node (i,j), counterclockwise.
std::array<Tri, 6> star(const Grid& g, const Field& b, int i, int j)
{
    return {lower_tri(g, b, i, j),         upper_tri(g, b, i, j),         lower_tri(g, b, i - 1, j),
            upper_tri(g, b, i - 1, j - 1), lower_tri(g, b, i - 1, j - 1), upper_tri(g, b, i, j - 1)};
}

inline double cross(const Tri& a, const Tri& b) { return a.gx * b.gy - a.gy * b.gx; }

// Remainder when the whole stencil shares one affine part.
const Field& stencil_values(const Grid& g, const SField& f, int i, int j)
{
    std::int64_t l = f.label[g.index(i, j)];
    if (l < 0) return f.val;
    if (g.n == 1) return (f.label[i - 1] == l && f.label[i + 1] == l) ? f.rem : f.val;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            if (di * dj < 0) continue;  // the star of a node skips (i+1,j-1) and (i-1,j+1)
            if (f.label[g.index(i + di, j + dj)] != l) return f.val;
        }
    return f.rem;
}

}  // namespace

Field ma_mass(const Grid& g, const std::vector<const SField*>& slots)
{
    if (static_cast<int>(slots.size()) != g.n) throw ValidationError("Monge-Ampere needs exactly n slots");
    for (const SField* s : slots)
        if (s->size() != g.size()) throw ValidationError("slot does not match the grid");
    Field out(g.size(), 0.0);
    if (g.n == 1) {
        const double h = g.h(0);
        for (int i = 1; i + 1 < g.N[0]; ++i) {
            const Field& b = stencil_values(g, *slots[0], i, 0);
            out[i] = (b[i + 1] - 2 * b[i] + b[i - 1]) / h;
        }
        return out;
    }
    parallel_for(g.size(), [&](size_t k) {
        if (!g.interior(k)) return;
        auto ij = g.coords(k);
        const Field& b = stencil_values(g, *slots[0], ij[0], ij[1]);
        const Field& c = stencil_values(g, *slots[1], ij[0], ij[1]);
        auto sb = star(g, b, ij[0], ij[1]);
        auto sc = &b == &c ? sb : star(g, c, ij[0], ij[1]);
        double s = 0;
        for (int q = 0; q < 6; ++q) {
            int r = (q + 1) % 6;
            s += cross(sb[q], sc[r]) + cross(sc[q], sb[r]);
        }
        // 2! times the mixed area (1/4) sum (...)
        out[k] = 0.5 * s;
    });
    return out;
}

Field ma_density(const Grid& g, const std::vector<const SField*>& slots)
{
    Field m = ma_mass(g, slots);
    for (auto& x : m) x /= g.cell();
    return m;
}

RicciData ricci_potential(const Reference& ref)
{
    RicciData rd;
    for (double v : ref.logdet)
        if (!std::isfinite(v)) throw std::runtime_error("vanishing reference Hessian determinant");
    rd.r = ref.ricci;
    const auto& p = ref.guillemin.polytope();
    double s = 0;
    for (size_t f = 0; f < p.facets().size(); ++f) s += p.facet_lattice_volume(f);
    rd.c1_alpha = s;  // (n-1)! = 1 for n <= 2
    return rd;
}

// ---------------------------------------------------------------------------

namespace {

// max_i (x_k y_i - f_i) for sorted y and sorted x.
void llt_line(const std::vector<double>& y, const std::vector<double>& f, const std::vector<double>& x, std::vector<double>& out)
{
    std::vector<size_t> hull;
    for (size_t i = 0; i < y.size(); ++i) {
        while (hull.size() >= 2) {
            size_t a = hull[hull.size() - 2], b = hull.back();
            // drop b if it lies on or above the chord a-i
            if ((f[b] - f[a]) * (y[i] - y[a]) >= (f[i] - f[a]) * (y[b] - y[a]))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    out.resize(x.size());
    size_t m = 0;
    for (size_t k = 0; k < x.size(); ++k) {
        while (m + 1 < hull.size() && x[k] * y[hull[m + 1]] - f[hull[m + 1]] >= x[k] * y[hull[m]] - f[hull[m]]) ++m;
        out[k] = x[k] * y[hull[m]] - f[hull[m]];
    }
}

void check_convex_line(const std::vector<double>& f, double scale)
{
    for (size_t i = 1; i + 1 < f.size(); ++i)
        if (f[i + 1] - 2 * f[i] + f[i - 1] < -1e-9 * scale)
            throw ValidationError("Legendre transform input is not convex");
}

std::vector<double> axis(const Grid& g, int a)
{
    std::vector<double> v(g.N[a]);
    for (int i = 0; i < g.N[a]; ++i) v[i] = g.x(a, i);
    return v;
}

}  // namespace

Field legendre_transform(const Grid& yg, const Field& f, const Grid& xg, bool check_convex)
{
    if (yg.n != xg.n || f.size() != yg.size()) throw ValidationError("Legendre transform grid mismatch");
    double scale = 1;
    for (double v : f) scale = std::max(scale, std::abs(v));
    if (yg.n == 1) {
        if (check_convex) check_convex_line(f, scale);
        Field out;
        llt_line(axis(yg, 0), f, axis(xg, 0), out);
        return out;
    }
    const int ny0 = yg.N[0], ny1 = yg.N[1], nx0 = xg.N[0], nx1 = xg.N[1];
    if (check_convex) {
        for (int j = 0; j < ny1; ++j) {
            std::vector<double> row(ny0);
            for (int i = 0; i < ny0; ++i) row[i] = f[yg.index(i, j)];
            check_convex_line(row, scale);
        }
        for (int i = 0; i < ny0; ++i) {
            std::vector<double> col(ny1);
            for (int j = 0; j < ny1; ++j) col[j] = f[yg.index(i, j)];
            check_convex_line(col, scale);
        }
        if (yg.h(0) == yg.h(1))
            for (int d = -(ny0 - 1); d < ny1; ++d) {
                std::vector<double> diag;
                for (int i = 0; i < ny0; ++i)
                    if (i + d >= 0 && i + d < ny1) diag.push_back(f[yg.index(i, i + d)]);
                check_convex_line(diag, scale);
            }
    }
    auto y0 = axis(yg, 0), y1 = axis(yg, 1), x0 = axis(xg, 0), x1 = axis(xg, 1);
    // g(y0_i, x1_l) = max_j x1_l y1_j - f(i,j)
    std::vector<std::vector<double>> g(ny0);
    for (int i = 0; i < ny0; ++i) {
        std::vector<double> col(ny1);
        for (int j = 0; j < ny1; ++j) col[j] = f[yg.index(i, j)];
        llt_line(y1, col, x1, g[i]);
    }
    Field out(xg.size());
    for (int l = 0; l < nx1; ++l) {
        std::vector<double> neg(ny0), res;
        for (int i = 0; i < ny0; ++i) neg[i] = -g[i][l];
        llt_line(y0, neg, x0, res);
        for (int k = 0; k < nx0; ++k) out[xg.index(k, l)] = res[k];
    }
    return out;
}

}  // namespace kstab
