#include "kstab/slopes.hpp"

#include "kstab/functionals.hpp"
#include "kstab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kstab {

SlopeEstimate slope_estimate(const std::vector<std::pair<double, double>>& samples, std::string name)
{
    if (samples.size() < 4) throw ValidationError("slope estimate needs at least 4 samples");
    for (size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].first) || !std::isfinite(samples[i].second)) throw ValidationError("slope samples must be finite");
        if (i > 0 && !(samples[i].first > samples[i - 1].first)) throw ValidationError("slope samples must have increasing t");
    }
    std::vector<double> inc, mid;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
        auto [t0, v0] = samples[i];
        auto [t1, v1] = samples[i + 1];
        inc.push_back((v1 - v0) / (t1 - t0));
        mid.push_back(0.5 * (t0 + t1));
    }
    const size_t K = inc.size();
    const double a = inc[K - 3], b = inc[K - 2], c = inc[K - 1];
    const double ma = mid[K - 3], mb = mid[K - 2], mc = mid[K - 1];

    SlopeEstimate est;
    est.name = std::move(name);
    est.samples = samples;
    est.slope = c;
    // increments s + A/m give differences in the ratio of the 1/m gaps
    double d1 = b - a, d2 = c - b;
    if (d1 != 0 && d2 != 0 && (d1 > 0) == (d2 > 0)) {
        double expected = (1 / mb - 1 / ma) / (1 / mc - 1 / mb);
        double r = d1 / d2 / expected;
        if (r > 2.0 / 3 && r < 1.5) {
            est.slope = (mc * c - mb * b) / (mc - mb);
            est.extrapolated = true;
        }
    }
    est.error_bar = std::max({std::abs(a - est.slope), std::abs(b - est.slope), std::abs(c - est.slope)});
    est.intercept = samples.back().second - est.slope * samples.back().first;
    return est;
}

std::vector<double> geometric_times(double t_max)
{
    double l = std::log2(t_max);
    if (!(t_max >= 8) || l != std::round(l)) throw ValidationError("t_max must be a power of two >= 8");
    std::vector<double> t;
    for (double s = 1; s <= t_max; s *= 2) t.push_back(s);
    return t;
}

std::vector<std::pair<double, double>> FunctionalSeries::samples(const std::vector<double>& v) const
{
    std::vector<std::pair<double, double>> out;
    for (size_t m = 0; m < v.size(); ++m) out.push_back({times[m], v[m]});
    return out;
}

void require_compatible(const Ray& ray)
{
    if (ray.compatibility != "C11" && ray.compatibility != "smooth")
        throw ValidationError(std::string("ray of kind ") + to_string(ray.kind) + " carries no compatibility certificate with a test configuration");
}

namespace {

Grid series_grid(const std::vector<TestConfig<double>>& tcs, const SlopeOptions& opt)
{
    const int n = tcs.front().dim();
    return ray_grid(tcs, opt.t_max, n == 1 ? opt.h1 : opt.h2, opt.margin);
}

double log_mass(const Grid& g, const Field& beta)
{
    double top = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < g.size(); ++k)
        if (g.interior(k)) top = std::max(top, beta[k]);
    if (!std::isfinite(top)) throw ValidationError("beta family is not finite");
    Accumulator acc;
    for (size_t k = 0; k < g.size(); ++k)
        if (g.interior(k)) acc.add(std::exp(beta[k] - top));
    if (!(acc.value() > 0)) throw ValidationError("non-positive beta integrand");
    return top + std::log(acc.value() * g.cell());
}

}  // namespace

FunctionalSeries functional_series(const TestConfig<double>& tc, RayKind kind, const SlopeOptions& opt, bool with_beta)
{
    if (kind == RayKind::subgeodesic) throw ValidationError("subgeodesic rays carry no compatibility certificate with a test configuration");
    if (with_beta && tc.dim() != 1) throw ValidationError("beta family is implemented in one dimension only");
    auto times = geometric_times(opt.t_max);
    Grid g = series_grid({tc}, opt);
    Reference ref = guillemin_reference(tc.base(), g);
    const double C = tc.max_value() + 1;
    Ray ray = kind == RayKind::geodesic ? geodesic_ray(tc, ref.guillemin, g, times) : smooth_ray(tc, C, g, times);
    require_compatible(ray);
    std::vector<Field> beta;
    if (with_beta) beta = beta_family(tc, C, g, times);

    FunctionalSeries s;
    s.kind = kind;
    s.compatibility = ray.compatibility;
    for (size_t m = 0; m < times.size(); ++m) {
        SField phi = ray.phi(m, ref.psi);
        EnergySuite e;
        try {
            e = energy_suite(ref, phi, false);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::runtime_error& err) {
            std::ostringstream os;
            os << "entropy failed at t = " << times[m] << "; series kept up to t = " << (m ? times[m - 1] : 0.0) << " (" << err.what() << ")";
            s.truncated = os.str();
            break;
        }
        s.times.push_back(times[m]);
        s.E.push_back(e.E.value);
        s.ERic.push_back(e.ERic.value);
        s.J.push_back(e.J.value);
        s.entropy.push_back(e.entropy.value);
        s.M.push_back(e.M.value);
        if (with_beta) {
            Field xi(g.size());
            for (size_t k = 0; k < g.size(); ++k) xi[k] = beta[m][k] - ref.logdet[k];
            double mb = mabuchi_proxy(ref, phi, xi);
            s.MB.push_back(mb);
            s.Gamma.push_back(e.M.value - mb);
            s.log_beta_mass.push_back(log_mass(g, beta[m]));
        }
    }
    return s;
}

DeligneSlope deligne_slope(const std::vector<TestConfig<double>>& tcs, const SlopeOptions& opt)
{
    if (tcs.empty()) throw ValidationError("Deligne slope needs configurations");
    const int n = tcs.front().dim();
    if (static_cast<int>(tcs.size()) != n + 1) throw ValidationError("Deligne slope needs n+1 configurations");
    const auto& base = tcs.front().base();
    for (const auto& tc : tcs)
        if (tc.base().facets().size() != base.facets().size()) throw ValidationError("Deligne slots must share the polytope");
    auto times = geometric_times(opt.t_max);
    Grid g = series_grid(tcs, opt);
    Reference ref = guillemin_reference(base, g);
    std::vector<Ray> rays;
    for (const auto& tc : tcs) {
        rays.push_back(geodesic_ray(tc, ref.guillemin, g, times));
        require_compatible(rays.back());
    }
    std::vector<std::pair<double, double>> samples;
    for (size_t m = 0; m < times.size(); ++m) {
        std::vector<SField> phis;
        for (const auto& r : rays) phis.push_back(r.phi(m, ref.psi));
        std::vector<Slot> slots;
        for (const auto& p : phis) slots.push_back({&ref.psi, &p});
        samples.push_back({times[m], deligne(g, slots)});
    }
    DeligneSlope d;
    d.slope = slope_estimate(samples, "deligne");
    std::vector<VRep<double>> classes;
    double csum = 0;
    for (const auto& tc : tcs) {
        double C = tc.max_value() + 1;
        csum += C;
        classes.push_back(tc.total_polytope(C).vrep());
    }
    d.intersection = intersection_number(classes) - csum * kahler_volume(base);
    return d;
}

std::vector<double> beta_mass(const TestConfig<double>& tc, const SlopeOptions& opt, const std::vector<double>& times)
{
    Grid g = series_grid({tc}, opt);
    auto beta = beta_family(tc, tc.max_value() + 1, g, times);
    std::vector<double> out;
    for (const auto& b : beta) out.push_back(log_mass(g, b));
    return out;
}

double growth_exponent(const std::vector<std::pair<double, double>>& s)
{
    if (s.empty()) throw ValidationError("growth exponent needs samples");
    const double t_max = s.back().first;
    std::vector<std::pair<double, double>> pts;
    for (auto [t, l] : s) {
        if (!std::isfinite(l)) throw ValidationError("non-positive integrand in growth samples");
        if (t >= t_max / 8 && t > 0) pts.push_back({std::log(t), l});
    }
    if (pts.size() < 2) throw ValidationError("growth exponent needs two samples with t >= t_max/8");
    double mx = 0, my = 0;
    for (auto [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0, sxx = 0;
    for (auto [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------

namespace {

CheckRow two_sided(const std::string& suite, const std::string& name, double lhs, double rhs, double tol)
{
    double d = std::abs(lhs - rhs);
    return {suite, name, lhs, rhs, d, tol, d <= tol};
}

CheckRow at_most(const std::string& suite, const std::string& name, double lhs, double rhs, double tol)
{
    return {suite, name, lhs, rhs, std::abs(lhs - rhs), tol, lhs <= rhs + tol};
}

CheckRow exact_equal(const std::string& suite, const std::string& name, const Rat& lhs, const Rat& rhs)
{
    return {suite, name, to_double(lhs), to_double(rhs), std::abs(to_double(Rat(lhs - rhs))), 0.0, lhs == rhs};
}

Polytope<Rat> segment_q() { return Polytope<Rat>(1, {{{1}, Rat(0)}, {{-1}, Rat(1)}}); }
Polytope<Rat> square_q() { return Polytope<Rat>(2, {{{1, 0}, Rat(0)}, {{-1, 0}, Rat(1)}, {{0, 1}, Rat(0)}, {{0, -1}, Rat(1)}}); }
Polytope<Rat> simplex_q() { return Polytope<Rat>(2, {{{1, 0}, Rat(0)}, {{0, 1}, Rat(0)}, {{-1, -1}, Rat(1)}}); }
Polytope<Rat> hirzebruch_q() { return Polytope<Rat>(2, {{{1, 0}, Rat(0)}, {{0, 1}, Rat(0)}, {{0, -1}, Rat(1)}, {{-1, -1}, Rat(2)}}); }

Case make_case(std::string name, const Polytope<Rat>& p, std::vector<Piece<Rat>> pieces)
{
    TestConfig<Rat> tc(p, std::move(pieces));
    return {std::move(name), to_double(tc), tc, {}};
}

Piece<Rat> pc(std::vector<Rat> a, Rat b) { return {std::move(a), std::move(b)}; }

Case p1_trivial() { return make_case("p1-trivial", segment_q(), {pc({0}, 0)}); }
Case p1_linear() { return make_case("p1-linear", segment_q(), {pc({1}, Rat(-1, 4))}); }
Case p1_step() { return make_case("p1-step", segment_q(), {pc({0}, 0), pc({1}, Rat(-1, 2))}); }
Case p1_vee() { return make_case("p1-vee", segment_q(), {pc({-1}, Rat(1, 4)), pc({0}, 0), pc({1}, Rat(-3, 4))}); }
Case p1_steep() { return make_case("p1-steep", segment_q(), {pc({0}, 0), pc({2}, Rat(-1))}); }
Case p1_half() { return make_case("p1-half", segment_q(), {pc({0}, 0), pc({Rat(1, 2)}, Rat(-1, 4))}); }
Case p1_third() { return make_case("p1-two-thirds", segment_q(), {pc({0}, 0), pc({Rat(2, 3)}, Rat(-1, 3))}); }
Case p1p1_diagonal() { return make_case("p1p1-diagonal", square_q(), {pc({0, 0}, 0), pc({1, 1}, Rat(-1))}); }
Case p1p1_corner() { return make_case("p1p1-corner", square_q(), {pc({0, 0}, 0), pc({1, 1}, Rat(-1, 2))}); }
Case p2_pl() { return make_case("p2-pl", simplex_q(), {pc({0, 0}, 0), pc({1, 0}, Rat(-1, 3))}); }
Case f1_pl() { return make_case("f1-pl", hirzebruch_q(), {pc({0, 0}, 0), pc({0, 1}, Rat(-1, 2)), pc({1, 0}, Rat(-1))}); }

Case mixed(std::string name, std::vector<Case> parts)
{
    Case c = parts.front();
    c.name = std::move(name);
    c.exact.reset();
    for (auto& p : parts) c.mixed.push_back(p.tc);
    return c;
}

double tol_or(const VerifyOptions& opt, double t) { return opt.tol ? *opt.tol : t; }

std::string with_truncation(const std::string& name, const FunctionalSeries& s)
{
    return s.truncated.empty() ? name : name + " (t<=" + std::to_string(static_cast<int>(s.times.empty() ? 0 : s.times.back())) + ")";
}

SlopeEstimate series_slope(const FunctionalSeries& s, const std::vector<double>& v, const char* name)
{
    if (v.size() < 4) throw ValidationError(std::string("too few valid times for the slope of ") + name + ": " + s.truncated);
    return slope_estimate(s.samples(v), name);
}

void theorem_b(const Case& c, const VerifyOptions& opt, std::vector<CheckRow>& rows)
{
    const char* S = "theoremB";
    if (!c.mixed.empty()) {
        auto d = deligne_slope(c.mixed, opt.slope);
        rows.push_back(two_sided(S, c.name + "/deligne", d.slope.slope, d.intersection, tol_or(opt, std::max(kTolB, 3 * d.slope.error_bar))));
        return;
    }
    auto inv = na_invariants(c.tc);
    auto geo = functional_series(c.tc, RayKind::geodesic, opt.slope);
    auto sE = series_slope(geo, geo.E, "E"), sJ = series_slope(geo, geo.J, "J"), sM = series_slope(geo, geo.M, "M");
    std::string name = with_truncation(c.name, geo);
    rows.push_back(two_sided(S, name + "/E", sE.slope, inv.ENA, tol_or(opt, kTolB)));
    rows.push_back(two_sided(S, name + "/J", sJ.slope, inv.JNA, tol_or(opt, kTolB)));
    // a second compatible ray has the same slopes; it needs a smooth total space
    if (!inv.total_space_smooth) return;
    auto sm = functional_series(c.tc, RayKind::smooth, opt.slope);
    auto tE = series_slope(sm, sm.E, "E"), tJ = series_slope(sm, sm.J, "J"), tM = series_slope(sm, sm.M, "M");
    rows.push_back(two_sided(S, name + "/smooth-E", tE.slope, sE.slope, tol_or(opt, std::max(kTolB, tE.error_bar + sE.error_bar))));
    rows.push_back(two_sided(S, name + "/smooth-J", tJ.slope, sJ.slope, tol_or(opt, std::max(kTolB, tJ.error_bar + sJ.error_bar))));
    rows.push_back(two_sided(S, name + "/smooth-M", tM.slope, sM.slope, tol_or(opt, std::max(kTolC, tM.error_bar + sM.error_bar))));
}

void theorem_c(const Case& c, const VerifyOptions& opt, std::vector<CheckRow>& rows)
{
    const char* S = "theoremC";
    auto inv = na_invariants(c.tc);
    const bool beta = c.tc.dim() == 1;
    auto geo = functional_series(c.tc, RayKind::geodesic, opt.slope, beta);
    std::string name = with_truncation(c.name, geo);
    auto sM = series_slope(geo, geo.M, "M");
    rows.push_back(two_sided(S, name + "/M-MNA", sM.slope, inv.MNA, tol_or(opt, kTolC)));
    rows.push_back(at_most(S, name + "/M-below-DF", sM.slope, inv.DF, kTolWeak));
    if (inv.reduced)
        rows.push_back(two_sided(S, name + "/M-DF", sM.slope, inv.DF, tol_or(opt, kTolC)));
    else
        rows.push_back(two_sided(S, name + "/DF-M-correction", inv.DF - sM.slope, std::abs(inv.correction), tol_or(opt, kTolC)));
    if (beta) {
        auto sB = series_slope(geo, geo.MB, "MB"), sG = series_slope(geo, geo.Gamma, "Gamma");
        rows.push_back(two_sided(S, name + "/MB-DF", sB.slope, inv.DF, tol_or(opt, kTolC)));
        rows.push_back(two_sided(S, name + "/Gamma-correction", sG.slope, inv.correction, tol_or(opt, kTolC)));
    }
}

void weak_c(const Case& c, const VerifyOptions& opt, std::vector<CheckRow>& rows)
{
    auto inv = na_invariants(c.tc);
    auto geo = functional_series(c.tc, RayKind::geodesic, opt.slope);
    auto sM = series_slope(geo, geo.M, "M");
    rows.push_back(at_most("weakC", with_truncation(c.name, geo) + "/M-below-DF", sM.slope, inv.DF, kTolWeak));
}

void base_change(const Case& c, std::vector<CheckRow>& rows)
{
    const char* S = "basechange";
    for (Int d : {2, 3}) {
        std::string name = c.name + "/d=" + std::to_string(d);
        if (c.exact) {
            auto r = na_invariants(*c.exact);
            auto rd = na_invariants(c.exact->base_change(d));
            Rat D(d);
            rows.push_back(exact_equal(S, name + "/MNA", rd.MNA, Rat(D * r.MNA)));
            rows.push_back(exact_equal(S, name + "/ENA", rd.ENA, Rat(D * r.ENA)));
            rows.push_back(exact_equal(S, name + "/JNA", rd.JNA, Rat(D * r.JNA)));
        } else {
            auto r = na_invariants(c.tc);
            auto rd = na_invariants(c.tc.base_change(d));
            rows.push_back(two_sided(S, name + "/MNA", rd.MNA, d * r.MNA, kTolFloat));
            rows.push_back(two_sided(S, name + "/ENA", rd.ENA, d * r.ENA, kTolFloat));
            rows.push_back(two_sided(S, name + "/JNA", rd.JNA, d * r.JNA, kTolFloat));
        }
    }
}

void twist(const Case& c, std::vector<CheckRow>& rows)
{
    const char* S = "twist";
    if (c.exact) {
        Rat c0 = c.exact->max_value() + 1;
        auto a = na_invariants(*c.exact, std::optional<Rat>(c0), false);
        auto b = na_invariants(*c.exact, std::optional<Rat>(Rat(c0 + Rat(5, 2))), false);
        rows.push_back(exact_equal(S, c.name + "/DF", a.DF, b.DF));
        rows.push_back(exact_equal(S, c.name + "/MNA", a.MNA, b.MNA));
        rows.push_back(exact_equal(S, c.name + "/ENA", a.ENA, b.ENA));
        rows.push_back(exact_equal(S, c.name + "/JNA", a.JNA, b.JNA));
    } else {
        double c0 = c.tc.max_value() + 1;
        auto a = na_invariants(c.tc, std::optional<double>(c0), false);
        auto b = na_invariants(c.tc, std::optional<double>(c0 + 2.5), false);
        rows.push_back(two_sided(S, c.name + "/DF", a.DF, b.DF, kTolFloat));
        rows.push_back(two_sided(S, c.name + "/MNA", a.MNA, b.MNA, kTolFloat));
        rows.push_back(two_sided(S, c.name + "/ENA", a.ENA, b.ENA, kTolFloat));
        rows.push_back(two_sided(S, c.name + "/JNA", a.JNA, b.JNA, kTolFloat));
    }
}

void growth(const Case& c, const VerifyOptions& opt, std::vector<CheckRow>& rows)
{
    if (c.tc.dim() != 1) throw ValidationError("growth suite is implemented in one dimension only");
    auto times = geometric_times(opt.slope.t_max);
    auto lm = beta_mass(c.tc, opt.slope, times);
    std::vector<std::pair<double, double>> s;
    for (size_t m = 0; m < times.size(); ++m) s.push_back({times[m], lm[m]});
    const int p = c.tc.max_meeting();
    rows.push_back(two_sided("growth", c.name + "/exponent", growth_exponent(s), 2.0 * (p - 1), tol_or(opt, kTolExponent)));
    // log I(t)/t and the increments of log I share their limit
    rows.push_back(two_sided("growth", c.name + "/rate", slope_estimate(s).slope, 0.0, tol_or(opt, kTolRate)));
}

}  // namespace

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"theoremB", "theoremC", "weakC", "basechange", "twist", "growth"};
    return names;
}

std::vector<Case> builtin_cases(const std::string& suite)
{
    if (suite == "theoremB")
        return {p1_trivial(), p1_linear(), p1_step(), p1p1_corner(), mixed("p1-mixed", {p1_step(), p1_linear()}),
                mixed("p1p1-mixed", {p1p1_corner(), make_case("", square_q(), {pc({1, 0}, 0)}), make_case("", square_q(), {pc({0, 0}, 0), pc({0, 1}, Rat(-1, 2))})})};
    if (suite == "theoremC" || suite == "weakC") return {p1_trivial(), p1_step(), p1_vee(), p1_steep(), p1_half(), p1_third()};
    if (suite == "basechange" || suite == "twist") return {p1_step(), p1_half(), p1_third(), p1p1_diagonal(), p2_pl(), f1_pl()};
    if (suite == "growth") return {p1_trivial(), p1_step()};
    throw ValidationError("unknown suite '" + suite + "'");
}

std::vector<Case> random_segment_cases(int count, std::uint64_t seed)
{
    static const Rat pool[] = {Rat(-2), Rat(-3, 2), Rat(-1), Rat(-1, 2), Rat(-1, 3), Rat(0), Rat(1, 3), Rat(1, 2), Rat(1), Rat(3, 2), Rat(2)};
    const size_t np = sizeof(pool) / sizeof(pool[0]);
    std::mt19937_64 rng(seed);
    std::vector<Case> out;
    for (int i = 0; i < count; ++i) {
        int k = 1 + static_cast<int>(rng() % 3);
        std::vector<size_t> idx;
        while (static_cast<int>(idx.size()) < k) {
            size_t j = rng() % np;
            if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
        }
        std::vector<Piece<Rat>> ps;
        for (size_t j : idx) ps.push_back(pc({pool[j]}, Rat(static_cast<long long>(rng() % 65) - 32, 32)));
        out.push_back(make_case("random-" + std::to_string(i), segment_q(), ps));
    }
    return out;
}

std::vector<CheckRow> verify_suite(const std::string& suite, const std::vector<Case>& cases, const VerifyOptions& opt)
{
    std::vector<CheckRow> rows;
    if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
        throw ValidationError("unknown suite '" + suite + "'");
    std::vector<Case> all = cases;
    if (suite == "weakC")
        for (auto& c : random_segment_cases(opt.random_configs, opt.seed)) all.push_back(std::move(c));
    for (const auto& c : all) {
        if (suite == "theoremB")
            theorem_b(c, opt, rows);
        else if (suite == "theoremC")
            theorem_c(c, opt, rows);
        else if (suite == "weakC")
            weak_c(c, opt, rows);
        else if (suite == "basechange")
            base_change(c, rows);
        else if (suite == "twist")
            twist(c, rows);
        else
            growth(c, opt, rows);
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string describe(const TestConfig<double>& tc)
{
    std::ostringstream os;
    os.precision(17);
    os << "max(";
    for (size_t j = 0; j < tc.pieces().size(); ++j) {
        const auto& p = tc.pieces()[j];
        if (j) os << "; ";
        os << "[";
        for (size_t k = 0; k < p.a.size(); ++k) os << (k ? " " : "") << rat_to_string(p.a[k]);
        os << "] " << p.b;
    }
    os << ")";
    return os.str();
}

ScanResult semistability_scan(const Polytope<double>& p, const std::vector<QVec>& slopes, int samples, std::uint64_t seed)
{
    if (slopes.empty()) throw ValidationError("empty slope set");
    if (samples < 0) throw ValidationError("sample count must be non-negative");
    const int n = p.dim();
    for (const auto& a : slopes)
        if (static_cast<int>(a.size()) != n) throw ValidationError("slope has wrong dimension");

    std::vector<std::string> ids;
    std::vector<std::vector<Piece<double>>> cands;
    for (size_t i = 0; i < slopes.size(); ++i) {
        ids.push_back("L" + std::to_string(i));
        cands.push_back({{slopes[i], 0.0}});
    }
    if (slopes.size() >= 2) {
        std::array<double, 2> lo{0, 0}, hi{0, 0};
        for (int a = 0; a < n; ++a) {
            lo[a] = hi[a] = p.vertices()[0][a];
            for (const auto& v : p.vertices()) {
                lo[a] = std::min(lo[a], v[a]);
                hi[a] = std::max(hi[a], v[a]);
            }
        }
        // Kronecker sequence in 6 dimensions (3 anchors of up to 2 coordinates)
        static const double primes[] = {2, 3, 5, 7, 11, 13};
        std::mt19937_64 rng(seed);
        std::array<double, 6> alpha, shift;
        for (int d = 0; d < 6; ++d) {
            alpha[d] = std::sqrt(primes[d]) - std::floor(std::sqrt(primes[d]));
            shift[d] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        }
        const size_t kmax = std::min<size_t>(3, slopes.size());
        for (int i = 0; i < samples; ++i) {
            size_t k = 2 + rng() % (kmax - 1);
            std::vector<size_t> idx;
            while (idx.size() < k) {
                size_t j = rng() % slopes.size();
                if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
            }
            std::vector<Piece<double>> ps;
            for (size_t q = 0; q < k; ++q) {
                double b = 0;
                for (int a = 0; a < n; ++a) {
                    int d = static_cast<int>(q) * 2 + a;
                    double u = shift[d] + (i + 1) * alpha[d];
                    u -= std::floor(u);
                    b -= to_double(slopes[idx[q]][a]) * (lo[a] + u * (hi[a] - lo[a]));
                }
                // dyadic intercepts keep the candidates exactly representable
                ps.push_back({slopes[idx[q]], std::round(b * 64) / 64});
            }
            ids.push_back("P" + std::to_string(i));
            cands.push_back(std::move(ps));
        }
    }

    ScanResult res;
    res.rows.resize(cands.size());
    parallel_for(cands.size(), [&](size_t i) {
        ScanRow r;
        r.id = ids[i];
        r.tc = TestConfig<double>(p, cands[i]);
        auto inv = na_invariants(r.tc);
        r.DF = inv.DF;
        r.MNA = inv.MNA;
        r.JNA = inv.JNA;
        if (inv.JNA >= 1e-6) {
            r.ratio = inv.MNA / inv.JNA;
            r.has_ratio = true;
        }
        res.rows[i] = std::move(r);
    });
    res.min_df = res.rows[0].DF;
    for (size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        if (r.DF < res.min_df) {
            res.min_df = r.DF;
            res.argmin = i;
        }
        if (r.has_ratio && (!res.has_delta || r.ratio < res.delta)) {
            res.delta = r.ratio;
            res.has_delta = true;
        }
    }
    return res;
}

}  // namespace kstab
