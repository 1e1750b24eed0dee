#pragma once

#include "kstab/invariants.hpp"
#include "kstab/rays.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace kstab {

// Default tolerances of the checks.
constexpr double kTolB = 1e-3;         // energy slopes against E^NA, J^NA
constexpr double kTolC = 1e-2;         // K-energy slopes against DF, M^NA
constexpr double kTolWeak = 1e-6;      // one-sided slope(M) <= DF
constexpr double kTolFloat = 1e-10;    // float path of identities exact in rationals
constexpr double kTolExponent = 0.3;   // growth exponent
constexpr double kTolRate = 1e-2;      // growth rate

struct SlopeEstimate {
    std::string name;
    std::vector<std::pair<double, double>> samples;
    double slope = 0;
    double intercept = 0;
    double error_bar = 0;
    bool extrapolated = false;  // Richardson step applied to the tail increments
};

// Slope from the last three increments. When they decay like 1/t the last two
// are extrapolated; otherwise the last increment is taken as is. The error bar
// is the largest distance of those three increments from the slope.
SlopeEstimate slope_estimate(const std::vector<std::pair<double, double>>& samples, std::string name = "");

// {1, 2, 4, ..., t_max}; t_max a power of two >= 8.
std::vector<double> geometric_times(double t_max);

struct SlopeOptions {
    double t_max = 64;
    double h1 = 1.0 / 16;  // grid step in one dimension
    double h2 = 0.5;       // and in two
    double margin = 40;
};

// Energy functionals of phi_t = psi_t - psi_ref along a ray of tc.
struct FunctionalSeries {
    RayKind kind = RayKind::geodesic;
    std::string compatibility;
    std::vector<double> times;
    std::vector<double> E, ERic, J, entropy, M;
    // one dimension, when requested: the proxy with the Guillemin volume forms
    // of Q_C, Gamma = M - M_B, and log of the total beta mass
    std::vector<double> MB, Gamma, log_beta_mass;
    // entropy breaks down past this time (series truncated), or empty
    std::string truncated;

    std::vector<std::pair<double, double>> samples(const std::vector<double>& v) const;
};

FunctionalSeries functional_series(const TestConfig<double>& tc, RayKind kind, const SlopeOptions& opt, bool with_beta = false);

// Slope of the Deligne functional <phi^t_0, ..., phi^t_n> of n+1 geodesic rays
// together with the intersection number of the corresponding classes.
struct DeligneSlope {
    SlopeEstimate slope;
    double intersection = 0;
};
DeligneSlope deligne_slope(const std::vector<TestConfig<double>>& tcs, const SlopeOptions& opt);

// Refuses rays that carry no compatibility certificate with their configuration.
void require_compatible(const Ray& ray);

// log of the integral of e^{beta_t} over the fibre, per time.
std::vector<double> beta_mass(const TestConfig<double>& tc, const SlopeOptions& opt, const std::vector<double>& times);

// Least-squares exponent k in I(t) ~ t^k over the samples with t >= t_max / 8.
double growth_exponent(const std::vector<std::pair<double, double>>& t_and_log_mass);

struct CheckRow {
    std::string suite, case_name;
    double lhs = 0, rhs = 0, diff = 0, tol = 0;
    bool pass = false;
};

struct Case {
    std::string name;
    TestConfig<double> tc;
    std::optional<TestConfig<Rat>> exact;  // present when all input numbers are rational
    std::vector<TestConfig<double>> mixed;  // n+1 configurations for a mixed Deligne check
};

struct VerifyOptions {
    SlopeOptions slope;
    std::uint64_t seed = 1;
    int random_configs = 50;
    std::optional<double> tol;  // replaces the two-sided numeric tolerances
};

const std::vector<std::string>& suite_names();
std::vector<Case> builtin_cases(const std::string& suite);
std::vector<CheckRow> verify_suite(const std::string& suite, const std::vector<Case>& cases, const VerifyOptions& opt);

// Random one-dimensional configurations with small rational slopes and dyadic
// intercepts.
std::vector<Case> random_segment_cases(int count, std::uint64_t seed);

struct ScanRow {
    std::string id;
    TestConfig<double> tc;
    double DF = 0, MNA = 0, JNA = 0, ratio = 0;
    bool has_ratio = false;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    double min_df = 0;
    size_t argmin = 0;
    // inf MNA / JNA over candidates with JNA >= 1e-6: an upper bound for the
    // uniform stability constant, never the constant itself
    double delta = 0;
    bool has_delta = false;
};

// Candidates: every slope as a linear function, then `samples` max-of-affine
// functions with 2 or 3 slopes from the set and anchors from a Kronecker
// sequence with a seeded shift.
ScanResult semistability_scan(const Polytope<double>& p, const std::vector<QVec>& slopes, int samples, std::uint64_t seed);

std::string describe(const TestConfig<double>& tc);

}  // namespace kstab
