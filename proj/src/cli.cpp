#include "kstab/cli.hpp"

#include "kstab/functionals.hpp"
#include "kstab/io.hpp"
#include "kstab/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace kstab {

namespace {

const std::vector<std::string> kFunctionals{"E", "ERic", "J", "entropy", "mabuchi", "deligne"};
constexpr double kTolHmae = 1e-6;

struct Options {
    // global
    std::string grid, out;
    double t_max = 64, tol = 0, margin = 40;
    std::uint64_t seed = 1;
    int threads = 1;
    // per command
    std::string poly, twist, kind = "geodesic", dump, suite, config, slopes;
    std::vector<std::string> tcs, functionals{"E", "J", "mabuchi"};
    int random = 50, samples = 200;

    CLI::App *polytope = nullptr, *invariants = nullptr, *ray = nullptr, *slope = nullptr, *verify = nullptr, *scan = nullptr;
    CLI::Option *tol_opt = nullptr, *t_max_opt = nullptr, *grid_opt = nullptr, *seed_opt = nullptr, *random_opt = nullptr,
                *margin_opt = nullptr;
};

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

void build(CLI::App& app, Options& o)
{
    app.name("kstab");
    app.description("Toric K-stability checks: non-Archimedean invariants, geodesic rays and asymptotic slopes.");
    app.set_help_flag("-h,--help", "Print this help (all commands) and exit");
    app.require_subcommand(1);

    o.grid_opt = app.add_option("--grid", o.grid, "Log-coordinate grid step: H for every dimension, or H1,H2 for one and two dimensions (default 1/16,1/2)");
    o.t_max_opt = app.add_option("--t-max", o.t_max, "Largest ray time, a power of two >= 8 (default 64)");
    o.margin_opt = app.add_option("--margin", o.margin, "Extra width of the log-coordinate box (default 40)")->check(CLI::PositiveNumber);
    o.tol_opt = app.add_option("--tol", o.tol, "Replace the two-sided tolerances of ray, slope and verify")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Write the table to this file instead of stdout; JSON when it ends in .json");
    o.seed_opt = app.add_option("--seed", o.seed, "Seed for random configurations and scan anchors (default 1)");
    app.add_option("--threads", o.threads, "Worker threads; a hint only, output does not depend on it (default 1)")->check(CLI::PositiveNumber);

    auto sub = [&](const char* name, const char* desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->fallthrough();
        s->set_help_flag();
        return s;
    };

    o.polytope = sub("polytope", "Volume, average scalar curvature, facets, vertices and Delzant check of a polytope");
    o.polytope->add_option("--poly", o.poly, "Polytope JSON file")->required();

    o.invariants = sub("invariants", "Non-Archimedean invariants (DF, M^NA, E^NA, J^NA, ...) of a test configuration");
    o.invariants->add_option("--poly", o.poly, "Polytope JSON file")->required();
    o.invariants->add_option("--tc", o.tcs, "Test configuration JSON file")->required()->expected(1);
    o.invariants->add_option("--twist", o.twist, "Twist constant C > max f (default max f + 1)");

    o.ray = sub("ray", "Sample a ray of a test configuration; rows (functional, t, value, err)");
    o.ray->add_option("--poly", o.poly, "Polytope JSON file")->required();
    o.ray->add_option("--tc", o.tcs, "Test configuration JSON file")->required()->expected(1);
    o.ray->add_option("--kind", o.kind, "Ray kind")->check(CLI::IsMember({"geodesic", "smooth"}));
    o.ray->add_option("--dump", o.dump, "Also write the sampled potentials to this binary file");

    o.slope = sub("slope", "Asymptotic slopes of energy functionals against their non-Archimedean values");
    o.slope->add_option("--poly", o.poly, "Polytope JSON file")->required();
    o.slope->add_option("--tc", o.tcs, "Test configuration JSON file; n+1 of them for deligne")->required();
    o.slope->add_option("--kind", o.kind, "Ray kind")->check(CLI::IsMember({"geodesic", "smooth"}));
    o.slope->add_option("--functional", o.functionals, "Functionals (default E J mabuchi)")
        ->transform(CLI::Transformer(std::map<std::string, std::string>{{"EJ", "ERic"}}).description(""))
        ->check(CLI::IsMember(kFunctionals));

    o.verify = sub("verify", "Run a check suite; rows (suite, case, lhs, rhs, diff, tol, pass)");
    o.verify->add_option("--suite", o.suite, "Suite to run")->required()->check(CLI::IsMember(suite_names()));
    o.verify->add_option("--config", o.config, "Run configuration JSON file (grid, times, seed, cases)");
    o.random_opt = o.verify->add_option("--random", o.random, "Random configurations added to weakC (default 50)")->check(CLI::NonNegativeNumber);

    o.scan = sub("scan", "Scan PL test configurations for negative Donaldson-Futaki invariants");
    o.scan->add_option("--poly", o.poly, "Polytope JSON file")->required();
    o.scan->add_option("--slopes", o.slopes, "Slope set JSON file")->required();
    o.scan->add_option("--samples", o.samples, "Piecewise-linear candidates besides the linear ones (default 200)")->check(CLI::NonNegativeNumber);

    app.footer("Suites: " + join(suite_names(), ", ") + "\n" +
               "Functionals: " + join(kFunctionals, ", ") + " (EJ is accepted for ERic)\n" +
               "Output: CSV whose first line is \"# kstab-csv v1\", or JSON with the same columns, rows and notes.\n"
               "Exit codes: 0 ok, 1 invalid input (schema errors name a JSON pointer), 2 tolerance failure.");
}

// ---------------------------------------------------------------------------

std::string load(const std::string& path) { return read_text_file(path); }

template <class F>
auto with_file(const std::string& path, F&& f)
{
    try {
        return f(load(path));
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ValidationError(path + ": " + msg);
    }
}

PolytopeInput load_polytope(const std::string& path)
{
    return with_file(path, [](const std::string& s) { return parse_polytope(s); });
}

TestConfigInput load_tc(const std::string& path, const PolytopeInput& p)
{
    return with_file(path, [&](const std::string& s) { return parse_testconfig(s, p); });
}

SlopeOptions slope_options(const Options& o)
{
    SlopeOptions s;
    s.t_max = o.t_max;
    s.margin = o.margin;
    geometric_times(s.t_max);
    if (!o.grid.empty()) {
        auto comma = o.grid.find(',');
        auto step = [](const std::string& text) {
            double h = parse_real(text).approx;
            if (!(h > 0)) throw ValidationError("--grid: steps must be positive");
            return h;
        };
        if (comma == std::string::npos) {
            s.h1 = s.h2 = step(o.grid);
        } else {
            s.h1 = step(o.grid.substr(0, comma));
            s.h2 = step(o.grid.substr(comma + 1));
        }
    }
    return s;
}

Cell cnt(size_t k) { return static_cast<long long>(k); }

// value column as double, exact column as "p/q" when known
template <class S>
std::vector<Cell> quantity(const std::string& name, const S& x)
{
    if constexpr (std::is_same_v<S, Rat>)
        return {name, to_double(x), rat_to_string(x)};
    else
        return {name, x, std::monostate{}};
}

template <class S>
std::string point_text(const Vec<S>& v)
{
    std::string s;
    for (size_t k = 0; k < v.size(); ++k) {
        if constexpr (std::is_same_v<S, Rat>)
            s += (k ? " " : "") + rat_to_string(v[k]);
        else
            s += (k ? " " : "") + format_number(v[k]);
    }
    return s;
}

std::string normal_text(const IVec& nu)
{
    std::string s;
    for (size_t k = 0; k < nu.size(); ++k) s += (k ? " " : "") + std::to_string(nu[k]);
    return s;
}

template <class S>
void polytope_rows(const Polytope<S>& p, Table& t)
{
    t.rows.push_back({"dim", static_cast<long long>(p.dim()), std::monostate{}});
    t.rows.push_back({"facets", cnt(p.facets().size()), std::monostate{}});
    t.rows.push_back({"vertices", cnt(p.vertices().size()), std::monostate{}});
    t.rows.push_back(quantity("volume", p.volume()));
    t.rows.push_back(quantity("V", kahler_volume(p)));
    t.rows.push_back(quantity("Sbar", average_scalar_curvature(p)));
    auto cert = p.delzant();
    t.rows.push_back({"delzant", cert.delzant, std::monostate{}});
    if (!cert.delzant) {
        t.rows.push_back({"delzant_failing_vertex", point_text(p.vertices()[cert.vertex]), std::monostate{}});
        t.rows.push_back({"delzant_reason", cert.reason, std::monostate{}});
        t.rows.push_back({"delzant_det", static_cast<long long>(cert.det), std::monostate{}});
    }
    for (size_t f = 0; f < p.facets().size(); ++f) {
        std::string k = "facet/" + std::to_string(f);
        t.rows.push_back({k + "/normal", normal_text(p.facets()[f].normal), std::monostate{}});
        t.rows.push_back(quantity(k + "/support", p.facets()[f].support));
        t.rows.push_back(quantity(k + "/lattice_volume", p.facet_lattice_volume(f)));
    }
    for (size_t v = 0; v < p.vertices().size(); ++v)
        t.rows.push_back({"vertex/" + std::to_string(v), point_text(p.vertices()[v]), std::monostate{}});
}

template <class S>
void invariant_rows(const InvariantReport<S>& r, Table& t)
{
    t.rows.push_back(quantity("V", r.V));
    t.rows.push_back(quantity("Sbar", r.Sbar));
    t.rows.push_back(quantity("twist_C", r.twist_C_used));
    t.rows.push_back(quantity("A_top", r.A_top));
    t.rows.push_back(quantity("K_A_n", r.K_A_n));
    t.rows.push_back(quantity("DF", r.DF));
    t.rows.push_back(quantity("correction", r.correction));
    t.rows.push_back(quantity("MNA", r.MNA));
    t.rows.push_back(quantity("ENA", r.ENA));
    t.rows.push_back(quantity("JNA", r.JNA));
    std::vector<std::string> ms;
    for (Int m : r.multiplicities) ms.push_back(std::to_string(m));
    t.rows.push_back({"multiplicities", join(ms, " "), std::monostate{}});
    t.rows.push_back({"reduced", r.reduced, std::monostate{}});
    t.rows.push_back({"total_space_smooth", r.total_space_smooth, std::monostate{}});
}

// ---------------------------------------------------------------------------

int run_polytope(const Options& o, Table& t)
{
    auto p = load_polytope(o.poly);
    t.columns = {"quantity", "value", "exact"};
    if (p.exact)
        polytope_rows(*p.exact, t);
    else
        polytope_rows(p.approx, t);
    return kExitOk;
}

int run_invariants(const Options& o, Table& t)
{
    auto p = load_polytope(o.poly);
    auto tc = load_tc(o.tcs.at(0), p);
    t.columns = {"quantity", "value", "exact"};
    std::optional<RealInput> twist;
    if (!o.twist.empty()) twist = parse_real(o.twist);
    if (tc.exact && (!twist || twist->exact)) {
        std::optional<Rat> c;
        if (twist) c = twist->q;
        invariant_rows(na_invariants(*tc.exact, c), t);
    } else {
        std::optional<double> c;
        if (twist) c = twist->approx;
        invariant_rows(na_invariants(tc.approx, c), t);
    }
    return kExitOk;
}

int run_ray(const Options& o, Table& t)
{
    auto p = load_polytope(o.poly);
    auto tc = load_tc(o.tcs.at(0), p).approx;
    auto so = slope_options(o);
    auto times = geometric_times(so.t_max);
    Grid g = ray_grid(tc, so.t_max, tc.dim() == 1 ? so.h1 : so.h2, so.margin);
    Reference ref = guillemin_reference(tc.base(), g);
    const double C = tc.max_value() + 1;
    Ray ray = o.kind == "smooth" ? smooth_ray(tc, C, g, times) : geodesic_ray(tc, ref.guillemin, g, times);

    t.columns = {"functional", "t", "value", "err"};
    std::string truncated;
    for (size_t m = 0; m < times.size(); ++m) {
        EnergySuite e;
        try {
            e = energy_suite(ref, ray.phi(m, ref.psi));
        } catch (const ValidationError&) {
            throw;
        } catch (const std::runtime_error& err) {
            truncated = "entropy failed at t = " + format_number(times[m]) + " (" + err.what() + ")";
            break;
        }
        for (const auto& [name, v] : std::vector<std::pair<const char*, FunctionalValue>>{
                 {"E", e.E}, {"ERic", e.ERic}, {"J", e.J}, {"entropy", e.entropy}, {"mabuchi", e.M}})
            t.rows.push_back({name, times[m], v.value, v.quadrature_error});
    }

    t.notes.push_back({"kind", o.kind});
    t.notes.push_back({"compatibility", ray.compatibility});
    std::string box, res;
    for (int a = 0; a < g.n; ++a) {
        box += (a ? " x " : "") + std::string("[") + format_number(g.lo[a]) + ", " + format_number(g.hi[a]) + "]";
        res += (a ? " x " : "") + std::to_string(g.N[a]);
    }
    t.notes.push_back({"box", box});
    t.notes.push_back({"resolution", res});
    if (!truncated.empty()) t.notes.push_back({"truncated", truncated});
    int code = kExitOk;
    if (ray.kind == RayKind::geodesic) {
        // the certificate differences in t, so it runs on a uniform time grid
        const double dt = 4 * g.h(0);
        std::vector<double> ut;
        for (int k = 0; k < 9; ++k) ut.push_back(k * dt);
        double r = hmae_residual(geodesic_ray(tc, ref.guillemin, g, ut));
        double tol = o.tol_opt->count() ? o.tol : kTolHmae;
        t.notes.push_back({"hmae_residual", format_number(r)});
        t.notes.push_back({"hmae_tol", format_number(tol)});
        if (!(r <= tol)) code = kExitTolerance;
    }
    if (!o.dump.empty()) {
        std::ofstream f(o.dump, std::ios::binary);
        if (!f) throw ValidationError(o.dump + ": cannot open for writing");
        write_ray(ray, f);
    }
    return code;
}

int run_slope(const Options& o, Table& t)
{
    auto p = load_polytope(o.poly);
    std::vector<TestConfigInput> tcs;
    for (const auto& f : o.tcs) tcs.push_back(load_tc(f, p));
    auto so = slope_options(o);
    auto kind = o.kind == "smooth" ? RayKind::smooth : RayKind::geodesic;
    const bool deligne = std::find(o.functionals.begin(), o.functionals.end(), "deligne") != o.functionals.end();
    const bool others = std::any_of(o.functionals.begin(), o.functionals.end(), [](const std::string& f) { return f != "deligne"; });
    if (deligne && static_cast<int>(tcs.size()) != p.approx.dim() + 1)
        throw ValidationError("deligne needs --tc exactly " + std::to_string(p.approx.dim() + 1) + " times");
    if (!deligne && tcs.size() != 1) throw ValidationError("--tc takes one file unless --functional deligne is requested");

    t.columns = {"functional", "slope", "intercept", "error_bar", "extrapolated", "target", "target_value", "diff", "tol", "pass"};
    bool ok = true;
    auto add = [&](const SlopeEstimate& s, const char* target, std::optional<double> value, double tol) {
        std::vector<Cell> r{s.name, s.slope, s.intercept, s.error_bar, s.extrapolated};
        if (value) {
            double d = std::abs(s.slope - *value);
            bool pass = d <= tol;
            ok = ok && pass;
            r.insert(r.end(), {target, *value, d, tol, pass});
        } else {
            r.insert(r.end(), {std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{}});
        }
        t.rows.push_back(std::move(r));
    };
    auto tol_or = [&](double d) { return o.tol_opt->count() ? o.tol : d; };

    if (others) {
        const auto& tc = tcs.front();
        InvariantReport<double> inv;
        if (tc.exact) {
            auto q = na_invariants(*tc.exact);
            inv.ENA = to_double(q.ENA);
            inv.JNA = to_double(q.JNA);
            inv.MNA = to_double(q.MNA);
        } else {
            inv = na_invariants(tc.approx);
        }
        auto fs = functional_series(tc.approx, kind, so);
        if (!fs.truncated.empty()) t.notes.push_back({"truncated", fs.truncated});
        t.notes.push_back({"compatibility", fs.compatibility});
        for (const auto& f : o.functionals) {
            if (f == "deligne") continue;
            auto series = [&](const std::vector<double>& v) {
                if (v.size() < 4) throw ValidationError("too few valid times for a slope of " + f);
                return slope_estimate(fs.samples(v), f);
            };
            if (f == "E") add(series(fs.E), "ENA", inv.ENA, tol_or(kTolB));
            if (f == "J") add(series(fs.J), "JNA", inv.JNA, tol_or(kTolB));
            if (f == "mabuchi") add(series(fs.M), "MNA", inv.MNA, tol_or(kTolC));
            if (f == "ERic") add(series(fs.ERic), "", std::nullopt, 0);
            if (f == "entropy") add(series(fs.entropy), "", std::nullopt, 0);
        }
    }
    if (deligne) {
        std::vector<TestConfig<double>> v;
        for (const auto& tc : tcs) v.push_back(tc.approx);
        auto d = deligne_slope(v, so);
        add(d.slope, "intersection", d.intersection, tol_or(std::max(kTolB, 3 * d.slope.error_bar)));
    }
    t.notes.push_back({"t_max", format_number(so.t_max)});
    return ok ? kExitOk : kExitTolerance;
}

int run_verify(const Options& o, Table& t)
{
    RunConfig rc;
    if (!o.config.empty()) rc = with_file(o.config, [](const std::string& s) { return parse_run_config(s); });
    auto& v = rc.verify;
    if (o.t_max_opt->count()) v.slope.t_max = o.t_max;
    if (o.margin_opt->count()) v.slope.margin = o.margin;
    if (o.grid_opt->count()) {
        auto s = slope_options(o);
        v.slope.h1 = s.h1;
        v.slope.h2 = s.h2;
    }
    geometric_times(v.slope.t_max);
    if (o.seed_opt->count()) v.seed = o.seed;
    if (o.random_opt->count()) v.random_configs = o.random;
    if (o.tol_opt->count()) v.tol = o.tol;
    auto cases = rc.cases.empty() ? builtin_cases(o.suite) : rc.cases;
    auto rows = verify_suite(o.suite, cases, v);

    t.columns = {"suite", "case", "lhs", "rhs", "diff", "tol", "pass"};
    size_t passed = 0;
    for (const auto& r : rows) {
        t.rows.push_back({r.suite, r.case_name, r.lhs, r.rhs, r.diff, r.tol, r.pass});
        passed += r.pass;
    }
    t.notes.push_back({"passed", std::to_string(passed) + "/" + std::to_string(rows.size())});
    return passed == rows.size() ? kExitOk : kExitTolerance;
}

int run_scan(const Options& o, Table& t)
{
    auto p = load_polytope(o.poly);
    auto slopes = with_file(o.slopes, [](const std::string& s) { return parse_slopes(s); });
    auto res = semistability_scan(p.approx, slopes, o.samples, o.seed);
    t.columns = {"id", "DF", "MNA", "JNA", "ratio", "tc"};
    for (const auto& r : res.rows)
        t.rows.push_back({r.id, r.DF, r.MNA, r.JNA, r.has_ratio ? Cell(r.ratio) : Cell(std::monostate{}), describe(r.tc)});
    t.notes.push_back({"candidates", std::to_string(res.rows.size())});
    t.notes.push_back({"min_df", format_number(res.min_df)});
    t.notes.push_back({"argmin", res.rows[res.argmin].id + " " + describe(res.rows[res.argmin].tc)});
    if (res.has_delta) t.notes.push_back({"delta_upper_bound", format_number(res.delta)});
    return kExitOk;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string help_text()
{
    CLI::App app;
    Options o;
    build(app, o);
    return app.help("", CLI::AppFormatMode::All);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app;
    Options o;
    build(app, o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << help_text();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "kstab: " << e.what() << "\nRun 'kstab --help' for usage.\n";
        return kExitInvalid;
    }

    try {
        set_threads(o.threads);
        Table t;
        int code = kExitOk;
        if (*o.polytope)
            code = run_polytope(o, t);
        else if (*o.invariants)
            code = run_invariants(o, t);
        else if (*o.ray)
            code = run_ray(o, t);
        else if (*o.slope)
            code = run_slope(o, t);
        else if (*o.verify)
            code = run_verify(o, t);
        else
            code = run_scan(o, t);

        std::ostringstream buf;
        if (ends_with(o.out, ".json"))
            write_json(t, buf);
        else
            write_csv(t, buf);
        if (o.out.empty()) {
            out << buf.str();
        } else {
            std::ofstream f(o.out, std::ios::binary);
            if (!f) throw ValidationError(o.out + ": cannot open for writing");
            f << buf.str();
        }
        return code;
    } catch (const ValidationError& e) {
        err << "kstab: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const InternalConsistencyError& e) {
        err << "kstab: " << e.what() << "\n";
        return kExitTolerance;
    } catch (const std::exception& e) {
        err << "kstab: " << e.what() << "\n";
        return kExitInvalid;
    }
}

}  // namespace kstab
