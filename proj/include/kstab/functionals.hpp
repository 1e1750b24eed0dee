#pragma once

#include "kstab/potentials.hpp"

#include <string>

namespace kstab {

// One slot of the multivariate energy: reference function g (its dd^c is
// the form theta) and relative potential phi (nullptr means 0).
struct Slot {
    const SField* g = nullptr;
    const SField* phi = nullptr;
};

// <phi_0, ..., phi_n> by the telescoping sum
// sum_i int phi_i (theta_0 .. theta_{i-1}, theta_{i+1} + dd^c phi_{i+1}, ...).
double deligne(const Grid& grid, const std::vector<Slot>& slots);

struct FunctionalValue {
    std::string name;
    double value = 0;
    double quadrature_error = 0;
};

struct EnergySuite {
    FunctionalValue E, ERic, J, entropy, M;
};

// Closed-form energies, used as cross-checks of the Deligne identities.
double energy_direct(const Reference& ref, const SField& phi);
double twisted_energy_direct(const Reference& ref, const SField& theta, const SField& phi);

// Node masses of MA(phi) with the reference part taken analytically:
// q = MA_an(ref) + [MA(ref + phi) - MA(ref)], expanded multilinearly.
Field entropy_measure(const Reference& ref, const SField& phi);
// Same, also returning per node the sum of the absolute values of the terms.
Field entropy_measure(const Reference& ref, const SField& phi, Field* magnitude);
double entropy(const Reference& ref, const SField& phi);

// E, E^Ric, J, entropy and the Chen-Tian K-energy M = S̄ E - E^Ric + entropy.
// The quadrature error is |value - value on the 2x coarser grid| / 3 when the
// resolution allows it, else 0.
EnergySuite energy_suite(const Reference& ref, const SField& phi, bool estimate_error = true);

// M_B = S̄ E + V^{-1} <xi, phi, ..., phi> with slot forms (-Ric, omega, ..., omega).
double mabuchi_proxy(const Reference& ref, const SField& phi, const Field& xi);

// Reference restricted to every other node.
Reference coarsened(const Reference& ref);

}  // namespace kstab
