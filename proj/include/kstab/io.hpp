#pragma once

#include "kstab/slopes.hpp"

#include <iosfwd>
#include <variant>

namespace kstab {

// Input files. Errors name the offending element by JSON pointer.
//
//   polytope: {"dim": 2, "facets": [{"normal": [1, 0], "support": 0}, ...]}
//   tc:       {"pieces": [{"slope": [1, "1/2"], "intercept": "-1/4"}, ...]}
//   slopes:   {"slopes": [[1, 0], [0, 1], ...]}  or a bare array
//   run:      {"t_max": 64, "grid": {"h1": "1/16", "h2": 0.5}, "margin": 40,
//              "seed": 1, "random": 50, "tol": 0.01,
//              "cases": [{"name": "...", "polytope": {...}, "tc": {...}}
//                        or {"name": "...", "polytope": {...}, "mixed": [{tc}, ...]}]}
//
// Numbers are JSON numbers or strings accepted by parse_real.

struct PolytopeInput {
    Polytope<double> approx;
    std::optional<Polytope<Rat>> exact;
};

struct TestConfigInput {
    TestConfig<double> approx;
    std::optional<TestConfig<Rat>> exact;
};

struct RunConfig {
    VerifyOptions verify;
    std::vector<Case> cases;  // empty: the built-in cases of the suite
};

std::string read_text_file(const std::string& path);

PolytopeInput parse_polytope(const std::string& json_text);
TestConfigInput parse_testconfig(const std::string& json_text, const PolytopeInput& p);
std::vector<QVec> parse_slopes(const std::string& json_text);
RunConfig parse_run_config(const std::string& json_text);

// Output table written as CSV (first line "# kstab-csv v1") or as JSON with
// the same columns, rows and notes.
using Cell = std::variant<std::monostate, std::string, double, long long, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, std::string>> notes;  // trailing "# key: value" lines
};

std::string format_number(double x);
void write_csv(const Table& t, std::ostream& os);
void write_json(const Table& t, std::ostream& os);

}  // namespace kstab
