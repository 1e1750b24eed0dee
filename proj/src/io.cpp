#include "kstab/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace kstab {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& msg)
{
    throw ValidationError((ptr.empty() ? "/" : ptr) + ": " + msg);
}

json parse_text(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail("", std::string("invalid JSON (") + e.what() + ")");
    }
}

const json& member(const json& j, const std::string& ptr, const char* key)
{
    if (!j.is_object()) fail(ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(ptr + "/" + key, "required member is missing");
    return *it;
}

const json& array_at(const json& j, const std::string& ptr, const char* key)
{
    const json& a = member(j, ptr, key);
    if (!a.is_array()) fail(ptr + "/" + key, "expected an array");
    return a;
}

RealInput real(const json& j, const std::string& ptr)
{
    try {
        if (j.is_string()) return parse_real(j.get<std::string>());
        // dump() prints the shortest round-trip text, so 0.1 reads as 1/10
        if (j.is_number()) return parse_real(j.dump());
    } catch (const ValidationError& e) {
        fail(ptr, e.what());
    }
    fail(ptr, "expected a number or a numeric string");
}

Rat rational(const json& j, const std::string& ptr)
{
    auto r = real(j, ptr);
    if (!r.exact) fail(ptr, "expected a rational number");
    return r.q;
}

Int integer(const json& j, const std::string& ptr)
{
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    return j.get<Int>();
}

double positive(const json& j, const std::string& ptr)
{
    double x = real(j, ptr).approx;
    if (!(x > 0)) fail(ptr, "must be positive");
    return x;
}

PolytopeInput polytope_from(const json& j, const std::string& ptr)
{
    Int dim = integer(member(j, ptr, "dim"), ptr + "/dim");
    if (dim < 1 || dim > 6) fail(ptr + "/dim", "dimension must be between 1 and 6");
    const json& fj = array_at(j, ptr, "facets");
    std::vector<Facet<double>> fd;
    std::vector<Facet<Rat>> fq;
    bool exact = true;
    for (size_t i = 0; i < fj.size(); ++i) {
        std::string fp = ptr + "/facets/" + std::to_string(i);
        const json& nj = array_at(fj[i], fp, "normal");
        if (static_cast<Int>(nj.size()) != dim) fail(fp + "/normal", "expected " + std::to_string(dim) + " entries");
        IVec nu;
        for (size_t k = 0; k < nj.size(); ++k) nu.push_back(integer(nj[k], fp + "/normal/" + std::to_string(k)));
        if (!is_primitive(nu)) fail(fp + "/normal", "normal must be a primitive integer vector");
        auto s = real(member(fj[i], fp, "support"), fp + "/support");
        exact = exact && s.exact;
        fd.push_back({nu, s.approx});
        fq.push_back({nu, s.q});
    }
    if (fj.size() < static_cast<size_t>(dim + 1)) fail(ptr + "/facets", "too few facets for a bounded polytope");
    PolytopeInput out;
    try {
        if (exact) {
            out.exact = Polytope<Rat>(static_cast<int>(dim), fq);
            out.approx = to_double(*out.exact);
        } else {
            out.approx = Polytope<double>(static_cast<int>(dim), fd);
        }
    } catch (const ValidationError& e) {
        fail(ptr + "/facets", e.what());
    }
    return out;
}

TestConfigInput testconfig_from(const json& j, const std::string& ptr, const PolytopeInput& p)
{
    const json& pj = array_at(j, ptr, "pieces");
    if (pj.empty()) fail(ptr + "/pieces", "at least one piece is required");
    const int n = p.approx.dim();
    std::vector<Piece<double>> pd;
    std::vector<Piece<Rat>> pq;
    bool exact = p.exact.has_value();
    for (size_t i = 0; i < pj.size(); ++i) {
        std::string pp = ptr + "/pieces/" + std::to_string(i);
        const json& aj = array_at(pj[i], pp, "slope");
        if (static_cast<int>(aj.size()) != n) fail(pp + "/slope", "expected " + std::to_string(n) + " entries");
        QVec a;
        for (size_t k = 0; k < aj.size(); ++k) a.push_back(rational(aj[k], pp + "/slope/" + std::to_string(k)));
        auto b = real(member(pj[i], pp, "intercept"), pp + "/intercept");
        exact = exact && b.exact;
        pd.push_back({a, b.approx});
        pq.push_back({a, b.q});
    }
    TestConfigInput out;
    try {
        if (exact) {
            out.exact = TestConfig<Rat>(*p.exact, pq);
            out.approx = to_double(*out.exact);
        } else {
            out.approx = TestConfig<double>(p.approx, pd);
        }
    } catch (const ValidationError& e) {
        fail(ptr + "/pieces", e.what());
    }
    return out;
}

std::vector<QVec> slopes_from(const json& j)
{
    std::string ptr;
    const json* arr = &j;
    if (j.is_object()) {
        arr = &array_at(j, "", "slopes");
        ptr = "/slopes";
    } else if (!j.is_array()) {
        fail("", "expected an array of slopes or an object with \"slopes\"");
    }
    std::vector<QVec> out;
    for (size_t i = 0; i < arr->size(); ++i) {
        std::string sp = ptr + "/" + std::to_string(i);
        const json& s = (*arr)[i];
        if (!s.is_array() || s.empty()) fail(sp, "expected a non-empty array of rationals");
        QVec a;
        for (size_t k = 0; k < s.size(); ++k) a.push_back(rational(s[k], sp + "/" + std::to_string(k)));
        if (!out.empty() && a.size() != out[0].size()) fail(sp, "slopes differ in dimension");
        out.push_back(std::move(a));
    }
    if (out.empty()) fail(ptr, "at least one slope is required");
    return out;
}

}  // namespace

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PolytopeInput parse_polytope(const std::string& text) { return polytope_from(parse_text(text), ""); }

TestConfigInput parse_testconfig(const std::string& text, const PolytopeInput& p) { return testconfig_from(parse_text(text), "", p); }

std::vector<QVec> parse_slopes(const std::string& text) { return slopes_from(parse_text(text)); }

RunConfig parse_run_config(const std::string& text)
{
    json j = parse_text(text);
    if (!j.is_object()) fail("", "expected an object");
    static const char* known[] = {"t_max", "grid", "margin", "seed", "random", "tol", "cases"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) fail("/" + it.key(), "unknown member");

    RunConfig rc;
    auto& o = rc.verify;
    if (j.contains("t_max")) {
        o.slope.t_max = positive(j["t_max"], "/t_max");
        try {
            geometric_times(o.slope.t_max);
        } catch (const ValidationError& e) {
            fail("/t_max", e.what());
        }
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_object()) fail("/grid", "expected an object");
        if (g.contains("h1")) o.slope.h1 = positive(g["h1"], "/grid/h1");
        if (g.contains("h2")) o.slope.h2 = positive(g["h2"], "/grid/h2");
    }
    if (j.contains("margin")) o.slope.margin = positive(j["margin"], "/margin");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("/seed", "expected a non-negative integer");
        o.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("random")) {
        Int r = integer(j["random"], "/random");
        if (r < 0) fail("/random", "must be non-negative");
        o.random_configs = static_cast<int>(r);
    }
    if (j.contains("tol")) o.tol = positive(j["tol"], "/tol");
    if (j.contains("cases")) {
        const json& cs = j["cases"];
        if (!cs.is_array()) fail("/cases", "expected an array");
        for (size_t i = 0; i < cs.size(); ++i) {
            std::string cp = "/cases/" + std::to_string(i);
            const json& c = cs[i];
            const json& nm = member(c, cp, "name");
            if (!nm.is_string()) fail(cp + "/name", "expected a string");
            auto p = polytope_from(member(c, cp, "polytope"), cp + "/polytope");
            Case out;
            out.name = nm.get<std::string>();
            if (c.contains("mixed")) {
                const json& mx = c["mixed"];
                if (!mx.is_array()) fail(cp + "/mixed", "expected an array");
                if (static_cast<int>(mx.size()) != p.approx.dim() + 1)
                    fail(cp + "/mixed", "expected " + std::to_string(p.approx.dim() + 1) + " configurations");
                for (size_t k = 0; k < mx.size(); ++k)
                    out.mixed.push_back(testconfig_from(mx[k], cp + "/mixed/" + std::to_string(k), p).approx);
                out.tc = out.mixed.front();
            } else {
                auto t = testconfig_from(member(c, cp, "tc"), cp + "/tc", p);
                out.tc = t.approx;
                out.exact = t.exact;
            }
            rc.cases.push_back(std::move(out));
        }
    }
    return rc;
}

// ---------------------------------------------------------------------------

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0) return "0";  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c)
{
    struct V {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(double x) const { return format_number(x); }
        std::string operator()(long long x) const { return std::to_string(x); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

nlohmann::ordered_json cell_json(const Cell& c)
{
    struct V {
        nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
        nlohmann::ordered_json operator()(double x) const
        {
            // JSON has no inf/nan; keep the CSV spelling as a string
            if (!std::isfinite(x)) return format_number(x);
            return x;
        }
        nlohmann::ordered_json operator()(long long x) const { return x; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
    };
    return std::visit(V{}, c);
}

}  // namespace

void write_csv(const Table& t, std::ostream& os)
{
    os << "# kstab-csv v1\n";
    for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
    os << "\n";
    for (const auto& r : t.rows) {
        for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(r[i]));
        os << "\n";
    }
    for (const auto& [k, v] : t.notes) os << "# " << k << ": " << v << "\n";
}

void write_json(const Table& t, std::ostream& os)
{
    nlohmann::ordered_json j;
    j["format"] = "kstab-csv v1";
    j["columns"] = t.columns;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        auto row = nlohmann::ordered_json::array();
        for (const auto& c : r) row.push_back(cell_json(c));
        j["rows"].push_back(row);
    }
    j["notes"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.notes) j["notes"][k] = v;
    os << j.dump(2) << "\n";
}

}  // namespace kstab
