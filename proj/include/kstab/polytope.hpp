#pragma once

#include "kstab/linalg.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>

namespace kstab {

// Half-space {x : <x, normal> >= -support} with primitive inward normal.
template <class S>
struct Facet {
    IVec normal;
    S support;
};

// Point set with a superset of its edge directions; enough to recover the
// hull facets of the convex hull by pairing directions. Lower-dimensional
// sets (such as P x {0}) are allowed.
template <class S>
struct VRep {
    int dim = 0;
    Mat<S> points;
    std::vector<IVec> dirs;
};

struct DelzantCertificate {
    bool delzant = true;
    int vertex = -1;           // failing vertex index
    std::vector<int> facets;   // facets meeting there
    Int det = 1;
    std::string reason;
};

namespace detail {

template <class S>
bool same_point(const Vec<S>& a, const Vec<S>& b)
{
    for (size_t i = 0; i < a.size(); ++i)
        if (!is_zero(S(a[i] - b[i]))) return false;
    return true;
}

template <class S>
void add_point(Mat<S>& pts, Vec<S> p)
{
    for (const auto& q : pts)
        if (same_point(q, p)) return;
    pts.push_back(std::move(p));
}

inline IVec canonical_sign(IVec d)
{
    for (Int x : d) {
        if (x > 0) break;
        if (x < 0) {
            for (auto& y : d) y = -y;
            break;
        }
    }
    return d;
}

inline void add_dir(std::vector<IVec>& dirs, const IVec& d)
{
    IVec c = canonical_sign(d);
    if (std::find(dirs.begin(), dirs.end(), c) == dirs.end()) dirs.push_back(c);
}

template <class S>
Vec<S> map_point(const std::vector<IVec>& w, const Vec<S>& x)
{
    // drop the first coordinate (constant on the facet)
    Vec<S> z(x.size() - 1);
    for (size_t r = 1; r < x.size(); ++r) z[r - 1] = dot(w[r], x);
    return z;
}

inline IVec map_dir(const std::vector<IVec>& w, const IVec& d)
{
    IVec z(d.size() - 1);
    for (size_t r = 1; r < d.size(); ++r) {
        Int s = 0;
        for (size_t k = 0; k < d.size(); ++k) s += w[r][k] * d[k];
        z[r - 1] = s;
    }
    return z;
}

template <class S>
void for_each_subset(size_t n, size_t k, const std::function<void(const std::vector<size_t>&)>& fn)
{
    std::vector<size_t> idx(k);
    for (size_t i = 0; i < k; ++i) idx[i] = i;
    if (k > n) return;
    while (true) {
        fn(idx);
        size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Facets of conv(points): normal, minimum of <p, normal>, indices of tight points.
template <class S>
struct HullFacet {
    IVec normal;
    S minval;
    std::vector<size_t> tight;
};

template <class S>
std::vector<HullFacet<S>> hull_facets(int m, const Mat<S>& pts, const std::vector<IVec>& dirs)
{
    std::vector<HullFacet<S>> out;
    std::set<IVec> seen;
    auto consider = [&](const IVec& nu) {
        if (seen.count(nu)) return;
        seen.insert(nu);
        S mn = dot(nu, pts[0]);
        std::vector<S> vals(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) {
            vals[i] = dot(nu, pts[i]);
            if (vals[i] < mn) mn = vals[i];
        }
        HullFacet<S> f{nu, mn, {}};
        Mat<S> tp;
        for (size_t i = 0; i < pts.size(); ++i)
            if (is_zero(S(vals[i] - mn))) {
                f.tight.push_back(i);
                tp.push_back(pts[i]);
            }
        if (affine_rank(tp) == m - 1) out.push_back(std::move(f));
    };
    if (m == 1) {
        consider(IVec{1});
        consider(IVec{-1});
        return out;
    }
    for_each_subset<S>(dirs.size(), m - 1, [&](const std::vector<size_t>& idx) {
        std::vector<IVec> rows;
        for (size_t i : idx) rows.push_back(dirs[i]);
        IVec nu = integer_kernel(rows, m);
        if (nu.empty()) return;
        consider(nu);
        for (auto& x : nu) x = -x;
        consider(nu);
    });
    return out;
}

}  // namespace detail

// m-dimensional volume of conv(points), measured in the standard lattice.
template <class S>
S lattice_volume(int m, const Mat<S>& pts, const std::vector<IVec>& dirs)
{
    if (pts.empty()) return S(0);
    if (m == 0) return S(1);
    if (affine_rank(pts) < m) return S(0);
    if (m == 1) {
        S lo = pts[0][0], hi = pts[0][0];
        for (const auto& p : pts) {
            if (p[0] < lo) lo = p[0];
            if (p[0] > hi) hi = p[0];
        }
        return hi - lo;
    }
    auto facets = detail::hull_facets(m, pts, dirs);
    S total = 0;
    for (const auto& f : facets) {
        S height = dot(f.normal, pts[0]) - f.minval;
        if (is_zero(height)) continue;
        auto u = unimodular_completion(f.normal);
        auto w = inverse_transpose(u);
        Mat<S> sub;
        for (size_t i : f.tight) sub.push_back(detail::map_point(w, pts[i]));
        std::vector<IVec> subdirs;
        for (const auto& d : dirs) {
            Int s = 0;
            for (size_t k = 0; k < d.size(); ++k) s += d[k] * f.normal[k];
            if (s == 0) detail::add_dir(subdirs, detail::map_dir(w, d));
        }
        total += height * lattice_volume(m - 1, sub, subdirs);
    }
    return total / S(m);
}

template <class S>
class Polytope {
public:
    Polytope() = default;

    Polytope(int dim, std::vector<Facet<S>> facets) : dim_(dim)
    {
        if (dim < 1) throw ValidationError("polytope dimension must be positive");
        for (const auto& f : facets) {
            if (static_cast<int>(f.normal.size()) != dim)
                throw ValidationError("facet normal has wrong dimension");
            if (!is_primitive(f.normal)) throw ValidationError("facet normal is not primitive");
        }
        // duplicate normals: keep the tightest inequality
        std::vector<Facet<S>> uniq;
        for (auto& f : facets) {
            auto it = std::find_if(uniq.begin(), uniq.end(), [&](const Facet<S>& g) { return g.normal == f.normal; });
            if (it == uniq.end())
                uniq.push_back(f);
            else if (f.support < it->support)
                it->support = f.support;
        }
        facets_ = std::move(uniq);
        enumerate_vertices();
        check_bounded();
        if (affine_rank(vertices_) < dim_) throw ValidationError("polytope is not full-dimensional");
        drop_redundant();
        build_incidence();
    }

    int dim() const { return dim_; }
    const std::vector<Facet<S>>& facets() const { return facets_; }
    const Mat<S>& vertices() const { return vertices_; }
    const std::vector<std::vector<int>>& vertex_facets() const { return vertex_facets_; }
    const std::vector<IVec>& edge_dirs() const { return edge_dirs_; }

    std::vector<int> facet_vertex_ids(size_t f) const
    {
        std::vector<int> ids;
        for (size_t v = 0; v < vertices_.size(); ++v)
            if (std::find(vertex_facets_[v].begin(), vertex_facets_[v].end(), static_cast<int>(f)) != vertex_facets_[v].end())
                ids.push_back(static_cast<int>(v));
        return ids;
    }

    S volume() const { return lattice_volume(dim_, vertices_, edge_dirs_); }

    S facet_lattice_volume(size_t f) const
    {
        if (f >= facets_.size()) throw ValidationError("facet id out of range");
        const IVec& nu = facets_[f].normal;
        if (dim_ == 1) return S(1);
        auto u = unimodular_completion(nu);
        auto w = inverse_transpose(u);
        Mat<S> sub;
        for (int v : facet_vertex_ids(f)) sub.push_back(detail::map_point(w, vertices_[v]));
        std::vector<IVec> subdirs;
        for (const auto& d : edge_dirs_) {
            Int s = 0;
            for (int k = 0; k < dim_; ++k) s += d[k] * nu[k];
            if (s == 0) detail::add_dir(subdirs, detail::map_dir(w, d));
        }
        S vol = lattice_volume(dim_ - 1, sub, subdirs);
        if (sgn(vol) <= 0) throw ValidationError("degenerate facet");
        return vol;
    }

    DelzantCertificate delzant() const
    {
        DelzantCertificate c;
        for (size_t v = 0; v < vertices_.size(); ++v) {
            const auto& fs = vertex_facets_[v];
            if (static_cast<int>(fs.size()) != dim_) {
                c = {false, static_cast<int>(v), fs, 0, "vertex is not simple"};
                return c;
            }
            std::vector<IVec> rows;
            for (int f : fs) rows.push_back(facets_[f].normal);
            Int d = int_det(rows);
            if (d != 1 && d != -1) {
                c = {false, static_cast<int>(v), fs, d, "normals do not form a lattice basis"};
                return c;
            }
        }
        return c;
    }

    bool contains(const Vec<S>& x) const
    {
        for (const auto& f : facets_)
            if (sgn(S(dot(f.normal, x) + f.support)) < 0) return false;
        return true;
    }

    VRep<S> vrep() const { return {dim_, vertices_, edge_dirs_}; }

    Polytope scaled(const S& k) const
    {
        if (sgn(k) <= 0) throw ValidationError("scale factor must be positive");
        auto fs = facets_;
        for (auto& f : fs) f.support *= k;
        return Polytope(dim_, fs);
    }

    Polytope translated(const Vec<S>& t) const
    {
        auto fs = facets_;
        for (auto& f : fs) f.support -= dot(f.normal, t);
        return Polytope(dim_, fs);
    }

    // Image under x -> A x for unimodular integer A: normals transform by A^{-T}.
    Polytope transformed(const std::vector<IVec>& a) const
    {
        auto w = inverse_transpose(a);
        auto fs = facets_;
        for (auto& f : fs) {
            IVec nu(dim_, 0);
            for (int r = 0; r < dim_; ++r)
                for (int k = 0; k < dim_; ++k) nu[r] += w[r][k] * f.normal[k];
            f.normal = nu;
        }
        return Polytope(dim_, fs);
    }

private:
    void enumerate_vertices()
    {
        detail::for_each_subset<S>(facets_.size(), dim_, [&](const std::vector<size_t>& idx) {
            Mat<S> a;
            Vec<S> b;
            for (size_t i : idx) {
                Vec<S> row;
                for (Int x : facets_[i].normal) row.push_back(S(static_cast<long long>(x)));
                a.push_back(row);
                b.push_back(S(-facets_[i].support));
            }
            auto x = solve(a, b);
            if (!x) return;
            if (contains(*x)) detail::add_point(vertices_, *x);
        });
        if (vertices_.empty()) throw ValidationError("polytope is empty or unbounded");
    }

    void check_bounded() const
    {
        // A nonzero recession direction would have an extreme ray cut out by m-1 facets.
        std::vector<IVec> normals;
        for (const auto& f : facets_) normals.push_back(f.normal);
        bool unbounded = false;
        auto test = [&](const IVec& d) {
            for (const auto& nu : normals) {
                Int s = 0;
                for (int k = 0; k < dim_; ++k) s += nu[k] * d[k];
                if (s < 0) return false;
            }
            return true;
        };
        if (dim_ == 1) {
            unbounded = test(IVec{1}) || test(IVec{-1});
        } else {
            detail::for_each_subset<S>(normals.size(), dim_ - 1, [&](const std::vector<size_t>& idx) {
                if (unbounded) return;
                std::vector<IVec> rows;
                for (size_t i : idx) rows.push_back(normals[i]);
                IVec d = integer_kernel(rows, dim_);
                if (d.empty()) return;
                IVec nd = d;
                for (auto& x : nd) x = -x;
                if (test(d) || test(nd)) unbounded = true;
            });
        }
        if (unbounded) throw ValidationError("polytope is unbounded");
    }

    void drop_redundant()
    {
        std::vector<Facet<S>> kept;
        for (const auto& f : facets_) {
            Mat<S> tight;
            for (const auto& v : vertices_)
                if (is_zero(S(dot(f.normal, v) + f.support))) tight.push_back(v);
            if (affine_rank(tight) == dim_ - 1) kept.push_back(f);
        }
        facets_ = std::move(kept);
    }

    void build_incidence()
    {
        vertex_facets_.assign(vertices_.size(), {});
        for (size_t v = 0; v < vertices_.size(); ++v)
            for (size_t f = 0; f < facets_.size(); ++f)
                if (is_zero(S(dot(facets_[f].normal, vertices_[v]) + facets_[f].support)))
                    vertex_facets_[v].push_back(static_cast<int>(f));
        edge_dirs_.clear();
        if (dim_ == 1) {
            edge_dirs_.push_back(IVec{1});
            return;
        }
        for (size_t a = 0; a < vertices_.size(); ++a)
            for (size_t b = a + 1; b < vertices_.size(); ++b) {
                std::vector<IVec> common;
                for (int f : vertex_facets_[a])
                    if (std::find(vertex_facets_[b].begin(), vertex_facets_[b].end(), f) != vertex_facets_[b].end())
                        common.push_back(facets_[f].normal);
                if (static_cast<int>(common.size()) < dim_ - 1) continue;
                // pick m-1 independent normals among the common ones
                std::vector<IVec> basis;
                for (const auto& nu : common) {
                    auto trial = basis;
                    trial.push_back(nu);
                    Mat<Rat> rows;
                    for (const auto& r : trial) rows.push_back(Vec<Rat>(r.begin(), r.end()));
                    if (rank(rows) == static_cast<int>(trial.size())) basis = trial;
                    if (static_cast<int>(basis.size()) == dim_ - 1) break;
                }
                if (static_cast<int>(basis.size()) != dim_ - 1) continue;
                IVec d = integer_kernel(basis, dim_);
                if (!d.empty()) detail::add_dir(edge_dirs_, d);
            }
    }

    int dim_ = 0;
    std::vector<Facet<S>> facets_;
    Mat<S> vertices_;
    std::vector<std::vector<int>> vertex_facets_;
    std::vector<IVec> edge_dirs_;
};

template <class S>
VRep<S> minkowski_sum(const std::vector<const VRep<S>*>& parts)
{
    VRep<S> out;
    out.dim = parts.at(0)->dim;
    out.points.push_back(Vec<S>(out.dim, S(0)));
    for (const VRep<S>* p : parts) {
        if (p->dim != out.dim) throw ValidationError("dimension mismatch in Minkowski sum");
        Mat<S> next;
        for (const auto& a : out.points)
            for (const auto& b : p->points) {
                Vec<S> c(out.dim);
                for (int k = 0; k < out.dim; ++k) c[k] = a[k] + b[k];
                detail::add_point(next, std::move(c));
            }
        out.points = std::move(next);
        for (const auto& d : p->dirs) detail::add_dir(out.dirs, d);
    }
    return out;
}

// Mixed volume normalized so that MV(P,...,P) = m! vol(P); inclusion-exclusion
// over the Minkowski sums of all non-empty sub-families.
template <class S>
S mixed_volume(const std::vector<VRep<S>>& ps)
{
    if (ps.empty()) throw ValidationError("mixed volume needs at least one polytope");
    const int m = ps[0].dim;
    if (static_cast<int>(ps.size()) != m) throw ValidationError("mixed volume needs exactly dim polytopes");
    for (const auto& p : ps)
        if (p.dim != m) throw ValidationError("dimension mismatch in mixed volume");
    S total = 0;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<const VRep<S>*> sel;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) sel.push_back(&ps[i]);
        auto sum = minkowski_sum(sel);
        S vol = lattice_volume(m, sum.points, sum.dirs);
        if ((m - static_cast<int>(sel.size())) % 2 == 0)
            total += vol;
        else
            total -= vol;
    }
    return total;
}

template <class S>
S mixed_volume(const std::vector<Polytope<S>>& ps)
{
    std::vector<VRep<S>> vs;
    for (const auto& p : ps) vs.push_back(p.vrep());
    return mixed_volume(vs);
}

// P x {0} inside R^{m+1}.
template <class S>
VRep<S> embed_zero(const VRep<S>& p)
{
    VRep<S> out;
    out.dim = p.dim + 1;
    for (auto v : p.points) {
        v.push_back(S(0));
        out.points.push_back(std::move(v));
    }
    for (auto d : p.dirs) {
        d.push_back(0);
        out.dirs.push_back(std::move(d));
    }
    return out;
}

template <class S>
Polytope<double> to_double(const Polytope<S>& p)
{
    std::vector<Facet<double>> fs;
    for (const auto& f : p.facets()) fs.push_back({f.normal, to_double(f.support)});
    return Polytope<double>(p.dim(), fs);
}

// Either exact or floating polytope as read from input.
using AnyPolytope = std::variant<Polytope<Rat>, Polytope<double>>;

}  // namespace kstab
