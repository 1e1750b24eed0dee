#include "kstab/cli.hpp"
#include "kstab/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace kstab;

namespace {

const std::string kData = KSTAB_TEST_DIR "/data/";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "kstab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) v.push_back(l);
    return v;
}

std::vector<std::string> fields(const std::string& line)
{
    std::vector<std::string> v;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, ',');) v.push_back(f);
    return v;
}

}  // namespace

TEST_CASE("help output matches the golden file")
{
    std::string golden = read_text_file(KSTAB_TEST_DIR "/golden/help.txt");
    auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out == golden);
    CHECK(help_text() == golden);
    for (const auto& s : suite_names()) CHECK(golden.find(s) != std::string::npos);
    for (const char* flag : {"--grid", "--t-max", "--tol", "--out", "--seed", "--threads"}) CHECK(golden.find(flag) != std::string::npos);
    for (const char* cmd : {"polytope", "invariants", "ray", "slope", "verify", "scan"}) CHECK(golden.find(cmd) != std::string::npos);
}

TEST_CASE("invariants command prints the closed-form report")
{
    auto r = run({"invariants", "--poly", kData + "p1.json", "--tc", kData + "step.json"});
    REQUIRE(r.code == 0);
    auto ls = lines(r.out);
    CHECK(ls.at(0) == "# kstab-csv v1");
    CHECK(ls.at(1) == "quantity,value,exact");
    // DF of max(0, y - 1/2) on [0, 1]: f(0) + f(1) - 2 * int f = 1/2 - 2/8
    bool found = false;
    for (const auto& l : ls)
        if (l.rfind("DF,", 0) == 0) {
            CHECK(fields(l).at(2) == "1/4");
            found = true;
        }
    CHECK(found);

    // a twist constant does not change DF
    auto t = run({"invariants", "--poly", kData + "p1.json", "--tc", kData + "step.json", "--twist", "7/3"});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("DF,0.25,1/4") != std::string::npos);
    CHECK(t.out.find("twist_C,2.3333333333333335,7/3") != std::string::npos);
}

TEST_CASE("verify twist passes exactly")
{
    auto r = run({"verify", "--suite", "twist"});
    CHECK(r.code == 0);
    auto ls = lines(r.out);
    CHECK(ls.at(1) == "suite,case,lhs,rhs,diff,tol,pass");
    for (size_t i = 2; i < ls.size(); ++i) {
        if (ls[i][0] == '#') continue;
        auto f = fields(ls[i]);
        if (f.at(1).rfind("p1-", 0) == 0) CHECK(f.at(5) == "0");
        CHECK(f.back() == "true");
    }

    auto c = run({"verify", "--suite", "twist", "--config", kData + "run_twist.json"});
    CHECK(c.code == 0);
    CHECK(c.out.find("p1-quarter/DF") != std::string::npos);
    CHECK(c.out.find("p1-step") == std::string::npos);
}

TEST_CASE("a tolerance failure exits with code 2")
{
    // the slope of J sits about 1e-14 from J^NA; demand less
    auto r = run({"--tol", "1e-300", "slope", "--poly", kData + "p1.json", "--tc", kData + "step.json", "--functional", "J"});
    CHECK(r.code == 2);
    CHECK(r.out.find(",false") != std::string::npos);
    auto ok = run({"slope", "--poly", kData + "p1.json", "--tc", kData + "step.json", "--functional", "E", "J"});
    CHECK(ok.code == 0);
}

TEST_CASE("scan finds a destabilizing linear function on F1")
{
    auto r = run({"scan", "--poly", kData + "f1.json", "--slopes", kData + "lin.json", "--samples", "200", "--seed", "7"});
    REQUIRE(r.code == 0);
    auto ls = lines(r.out);
    CHECK(ls.at(1) == "id,DF,MNA,JNA,ratio,tc");
    int negative_linear = 0;
    for (size_t i = 2; i < ls.size(); ++i) {
        if (ls[i][0] == '#') continue;
        auto f = fields(ls[i]);
        if (f.at(0)[0] == 'L' && std::stod(f.at(1)) < 0) ++negative_linear;
    }
    CHECK(negative_linear >= 1);
    CHECK(r.out.find("# min_df: -") != std::string::npos);
}

TEST_CASE("schema errors name a JSON pointer and exit with code 1")
{
    auto r = run({"polytope", "--poly", kData + "bad_normal.json"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("/facets/2/normal/1: expected an integer") != std::string::npos);

    auto c = run({"verify", "--suite", "twist", "--config", kData + "run_bad.json"});
    CHECK(c.code == 1);
    CHECK(c.err.find("/cases/0/tc/pieces/1/slope/0") != std::string::npos);

    CHECK(run({"polytope", "--poly", kData + "nope.json"}).code == 1);
    CHECK(run({"verify", "--suite", "theoremZ"}).code == 1);
    CHECK(run({"polytope", "--poly", kData + "p1.json", "--frobnicate"}).code == 1);
    CHECK(run({"--t-max", "48", "slope", "--poly", kData + "p1.json", "--tc", kData + "step.json"}).code == 1);
    CHECK(run({"slope", "--poly", kData + "p1.json", "--tc", kData + "step.json", "--functional", "deligne"}).code == 1);
}

TEST_CASE("output is byte-identical across runs and thread counts")
{
    std::vector<std::string> scan{"scan", "--poly", kData + "p1p1_sqrt2.json", "--slopes", kData + "lin.json", "--samples", "50", "--seed", "3"};
    auto a = run(scan);
    auto t = scan;
    t.insert(t.begin(), {"--threads", "4"});
    auto b = run(t);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);

    std::vector<std::string> ray{"--t-max", "8", "ray", "--poly", kData + "p1.json", "--tc", kData + "half.json"};
    auto c = run(ray);
    ray.insert(ray.begin(), {"--threads", "3"});
    auto d = run(ray);
    REQUIRE(c.code == 0);
    CHECK(c.out == d.out);
}

TEST_CASE("JSON output mirrors the CSV table")
{
    std::string path = "kstab_cli_test_out.json";
    auto r = run({"--out", path, "invariants", "--poly", kData + "p1.json", "--tc", kData + "half.json"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::string j = read_text_file(path);
    std::remove(path.c_str());
    CHECK(j.find("\"format\": \"kstab-csv v1\"") != std::string::npos);
    auto csv = run({"invariants", "--poly", kData + "p1.json", "--tc", kData + "half.json"});
    // every exact value of the CSV appears in the JSON rows
    for (const auto& l : lines(csv.out)) {
        if (l[0] == '#' || l == "quantity,value,exact") continue;
        auto f = fields(l);
        CHECK(j.find("\"" + f.at(0) + "\"") != std::string::npos);
        if (f.size() > 2) CHECK(j.find("\"" + f.at(2) + "\"") != std::string::npos);
    }
}

TEST_CASE("ray dump has the documented layout")
{
    std::string path = "kstab_cli_test_ray.bin";
    auto r = run({"--t-max", "8", "ray", "--poly", kData + "p1.json", "--tc", kData + "linear.json", "--dump", path});
    REQUIRE(r.code == 0);
    std::string bin = read_text_file(path);
    std::remove(path.c_str());
    REQUIRE(bin.size() > 8 + 4 + 20 + 4);
    CHECK(bin.substr(0, 8) == "KSTABRAY");
    auto i32 = [&](size_t off) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bin[off + k])) << (8 * k);
        return static_cast<std::int32_t>(u);
    };
    CHECK(i32(8) == 1);
    int N = i32(12 + 16);
    int T = i32(12 + 20);
    CHECK(T == 4);
    CHECK(bin.size() == static_cast<size_t>(12 + 20 + 4 + 8 * T + 8 * T * N));
    CHECK(r.out.find("# hmae_residual: ") != std::string::npos);
}
