#include "kstab/cli.hpp"
#include "kstab/io.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace kstab;

namespace {

template <class S>
py::dict report(const InvariantReport<S>& r)
{
    auto val = [](const S& x) -> py::object {
        if constexpr (std::is_same_v<S, Rat>)
            return py::make_tuple(to_double(x), rat_to_string(x));
        else
            return py::make_tuple(x, py::none());
    };
    py::dict d;
    d["V"] = val(r.V);
    d["Sbar"] = val(r.Sbar);
    d["twist_C"] = val(r.twist_C_used);
    d["A_top"] = val(r.A_top);
    d["K_A_n"] = val(r.K_A_n);
    d["DF"] = val(r.DF);
    d["correction"] = val(r.correction);
    d["MNA"] = val(r.MNA);
    d["ENA"] = val(r.ENA);
    d["JNA"] = val(r.JNA);
    d["multiplicities"] = r.multiplicities;
    d["reduced"] = r.reduced;
    d["total_space_smooth"] = r.total_space_smooth;
    return d;
}

}  // namespace

PYBIND11_MODULE(_kstab, m)
{
    m.doc() = "Toric K-stability checks";
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def("run", [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"kstab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run a kstab command line; returns (exit code, stdout, stderr).");

    m.def("help_text", &help_text);

    m.def("invariants", [](const std::string& polytope, const std::string& tc) {
        auto p = parse_polytope(polytope);
        auto t = parse_testconfig(tc, p);
        return t.exact ? report(na_invariants(*t.exact)) : report(na_invariants(t.approx));
    }, py::arg("polytope"), py::arg("tc"), "Invariants from JSON texts; values are (float, exact string or None).");

    m.def("verify", [](const std::string& suite, int random_configs, std::uint64_t seed, double t_max) {
        VerifyOptions opt;
        opt.random_configs = random_configs;
        opt.seed = seed;
        opt.slope.t_max = t_max;
        std::vector<CheckRow> rows;
        {
            py::gil_scoped_release release;
            rows = verify_suite(suite, builtin_cases(suite), opt);
        }
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["suite"] = r.suite;
            d["case"] = r.case_name;
            d["lhs"] = r.lhs;
            d["rhs"] = r.rhs;
            d["diff"] = r.diff;
            d["tol"] = r.tol;
            d["pass"] = r.pass;
            out.append(d);
        }
        return out;
    }, py::arg("suite"), py::arg("random_configs") = 50, py::arg("seed") = 1, py::arg("t_max") = 64.0);

    m.def("scan", [](const std::string& polytope, const std::string& slopes, int samples, std::uint64_t seed) {
        auto p = parse_polytope(polytope);
        auto s = parse_slopes(slopes);
        auto res = semistability_scan(p.approx, s, samples, seed);
        py::list rows;
        for (const auto& r : res.rows) {
            py::dict d;
            d["id"] = r.id;
            d["DF"] = r.DF;
            d["MNA"] = r.MNA;
            d["JNA"] = r.JNA;
            d["ratio"] = r.has_ratio ? py::object(py::float_(r.ratio)) : py::object(py::none());
            d["tc"] = describe(r.tc);
            rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["min_df"] = res.min_df;
        out["argmin"] = res.rows[res.argmin].id;
        out["delta_upper_bound"] = res.has_delta ? py::object(py::float_(res.delta)) : py::object(py::none());
        return out;
    }, py::arg("polytope"), py::arg("slopes"), py::arg("samples") = 200, py::arg("seed") = 1);

    m.def("slope_estimate", [](const std::vector<std::pair<double, double>>& samples) {
        auto s = slope_estimate(samples);
        py::dict d;
        d["slope"] = s.slope;
        d["intercept"] = s.intercept;
        d["error_bar"] = s.error_bar;
        d["extrapolated"] = s.extrapolated;
        return d;
    }, py::arg("samples"), "Asymptotic slope of (t, value) samples.");

    m.def("suite_names", &suite_names);
}
