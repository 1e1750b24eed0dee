#pragma once

#include "kstab/polytope.hpp"

#include <optional>

namespace kstab {

template <class S>
struct Piece {
    QVec a;  // rational slope
    S b;     // real intercept
};

template <class S>
S eval_piece(const Piece<S>& p, const Vec<S>& y)
{
    S s = p.b;
    for (size_t k = 0; k < p.a.size(); ++k) s += S(p.a[k]) * y[k];
    return s;
}

template <>
inline double eval_piece(const Piece<double>& p, const Vec<double>& y)
{
    double s = p.b;
    for (size_t k = 0; k < p.a.size(); ++k) s += to_double(p.a[k]) * y[k];
    return s;
}

template <class S>
S piece_slope_coord(const Rat& a)
{
    return S(a);
}
template <>
inline double piece_slope_coord<double>(const Rat& a)
{
    return to_double(a);
}

struct Component {
    int piece = 0;
    IVec normal;       // inward normal of the graph facet of Q_C in Z^{n+1}
    Int multiplicity = 1;
    double lattice_volume = 0;
};

struct CentralFiber {
    std::vector<Component> components;
    bool reduced = true;
};

// f(y) = max_j (<a_j, y> + b_j) on P.
template <class S>
class TestConfig {
public:
    TestConfig() = default;

    TestConfig(Polytope<S> base, std::vector<Piece<S>> pieces) : base_(std::move(base)), pieces_(std::move(pieces))
    {
        if (pieces_.empty()) throw ValidationError("test configuration needs at least one piece");
        for (const auto& p : pieces_)
            if (static_cast<int>(p.a.size()) != base_.dim()) throw ValidationError("slope has wrong dimension");
        normalize();
    }

    const Polytope<S>& base() const { return base_; }
    const std::vector<Piece<S>>& pieces() const { return pieces_; }
    const std::vector<Polytope<S>>& regions() const { return regions_; }
    int dim() const { return base_.dim(); }

    S operator()(const Vec<S>& y) const
    {
        S best = eval_piece(pieces_[0], y);
        for (size_t j = 1; j < pieces_.size(); ++j) {
            S v = eval_piece(pieces_[j], y);
            if (v > best) best = v;
        }
        return best;
    }

    S max_value() const
    {
        S best = (*this)(base_.vertices()[0]);
        for (const auto& v : base_.vertices()) {
            S x = (*this)(v);
            if (x > best) best = x;
        }
        return best;
    }

    S min_value() const
    {
        S best = (*this)(regions_[0].vertices()[0]);
        for (const auto& r : regions_)
            for (const auto& v : r.vertices()) {
                S x = (*this)(v);
                if (x < best) best = x;
            }
        return best;
    }

    Int multiplicity(size_t j) const { return lcm_denominators(pieces_[j].a); }

    CentralFiber central_fiber() const
    {
        CentralFiber cf;
        S c = max_value() + S(1);
        auto q = total_polytope(c);
        for (size_t j = 0; j < pieces_.size(); ++j) {
            Component comp;
            comp.piece = static_cast<int>(j);
            comp.multiplicity = multiplicity(j);
            comp.normal = top_normal(j);
            comp.lattice_volume = to_double(q.facet_lattice_volume(facet_index(q, comp.normal)));
            if (comp.multiplicity != 1) cf.reduced = false;
            cf.components.push_back(comp);
        }
        return cf;
    }

    // Coefficients of the R-divisor D on the central-fiber components,
    // relative to the zero-intercept configuration with the same slopes.
    std::vector<S> divisor_coefficients() const
    {
        std::vector<S> out;
        for (size_t j = 0; j < pieces_.size(); ++j) out.push_back(S(-1) * S(static_cast<long long>(multiplicity(j))) * pieces_[j].b);
        return out;
    }

    TestConfig base_change(Int d) const
    {
        if (d <= 0) throw ValidationError("base change degree must be positive");
        auto ps = pieces_;
        for (auto& p : ps) {
            for (auto& x : p.a) x *= d;
            p.b *= S(static_cast<long long>(d));
        }
        return TestConfig(base_, ps);
    }

    TestConfig shifted(const S& c) const
    {
        auto ps = pieces_;
        for (auto& p : ps) p.b += c;
        return TestConfig(base_, ps);
    }

    IVec top_normal(size_t j) const
    {
        Int m = multiplicity(j);
        IVec nu;
        for (const auto& x : pieces_[j].a) nu.push_back(-Rat(x * m).template convert_to<Int>());
        nu.push_back(-m);
        return nu;
    }

    // Q_C = {(y,s): y in P, 0 <= s <= C - f(y)}.
    Polytope<S> total_polytope(const S& c) const
    {
        if (!(c > max_value())) throw ValidationError("twist constant C must exceed max f");
        const int n = dim();
        std::vector<Facet<S>> fs;
        for (const auto& f : base_.facets()) {
            IVec nu = f.normal;
            nu.push_back(0);
            fs.push_back({nu, f.support});
        }
        IVec bottom(n + 1, 0);
        bottom[n] = 1;
        fs.push_back({bottom, S(0)});
        for (size_t j = 0; j < pieces_.size(); ++j) {
            Int m = multiplicity(j);
            fs.push_back({top_normal(j), S(static_cast<long long>(m)) * (c - pieces_[j].b)});
        }
        return Polytope<S>(n + 1, fs);
    }

    static size_t facet_index(const Polytope<S>& q, const IVec& normal)
    {
        for (size_t f = 0; f < q.facets().size(); ++f)
            if (q.facets()[f].normal == normal) return f;
        throw ValidationError("facet not found in total polytope");
    }

    // Largest number of pieces that are simultaneously maximal at a point.
    int max_meeting() const
    {
        int best = 1;
        for (const auto& r : regions_)
            for (const auto& v : r.vertices()) {
                S fv = (*this)(v);
                int cnt = 0;
                for (const auto& p : pieces_)
                    if (is_zero(S(eval_piece(p, v) - fv))) ++cnt;
                best = std::max(best, cnt);
            }
        return best;
    }

private:
    std::optional<Polytope<S>> region(size_t j) const
    {
        auto fs = base_.facets();
        const auto& pj = pieces_[j];
        for (size_t k = 0; k < pieces_.size(); ++k) {
            if (k == j) continue;
            const auto& pk = pieces_[k];
            QVec diff(pj.a.size());
            for (size_t i = 0; i < diff.size(); ++i) diff[i] = pj.a[i] - pk.a[i];
            IVec nu = primitive_direction(diff);
            if (nu.empty()) {
                if (sgn(S(pj.b - pk.b)) < 0) return std::nullopt;
                if (sgn(S(pj.b - pk.b)) == 0 && k < j) return std::nullopt;  // duplicate, keep first
                continue;
            }
            // <a_j - a_k, y> + (b_j - b_k) >= 0, rescaled to the primitive normal
            Rat scale = 0;
            for (size_t i = 0; i < diff.size(); ++i)
                if (nu[i] != 0) {
                    scale = Rat(nu[i]) / diff[i];
                    break;
                }
            fs.push_back({nu, S(pj.b - pk.b) * piece_slope_coord<S>(scale)});
        }
        try {
            Polytope<S> r(base_.dim(), fs);
            return r;
        } catch (const ValidationError&) {
            return std::nullopt;  // empty or lower-dimensional region
        }
    }

    void normalize()
    {
        std::vector<Piece<S>> kept;
        std::vector<Polytope<S>> regs;
        // prune dominated pieces until every region is full-dimensional
        bool changed = true;
        while (changed) {
            changed = false;
            kept.clear();
            regs.clear();
            for (size_t j = 0; j < pieces_.size(); ++j) {
                auto r = region(j);
                if (r) {
                    kept.push_back(pieces_[j]);
                    regs.push_back(*r);
                }
            }
            if (kept.size() != pieces_.size()) {
                changed = true;
                pieces_ = kept;
            }
        }
        if (pieces_.empty()) throw ValidationError("no active pieces");
        regions_ = std::move(regs);
    }

    Polytope<S> base_;
    std::vector<Piece<S>> pieces_;
    std::vector<Polytope<S>> regions_;
};

using AnyTestConfig = std::variant<TestConfig<Rat>, TestConfig<double>>;

template <class S>
TestConfig<double> to_double(const TestConfig<S>& tc)
{
    std::vector<Piece<double>> ps;
    for (const auto& p : tc.pieces()) ps.push_back({p.a, to_double(p.b)});
    return TestConfig<double>(to_double(tc.base()), ps);
}

}  // namespace kstab
