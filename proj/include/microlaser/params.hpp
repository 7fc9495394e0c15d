// Physical and dimensionless parameter model of the single-atom microlaser.
//
// All rates are angular frequencies in the same (arbitrary) time unit. The
// dimensionless form fixes g = 1, so kappa, gamma, R are expressed in units of g
// and tau in units of 1/g.

#pragma once

#include <string>
#include <vector>

namespace microlaser {

struct MicrolaserParams {
    double g = 1.0;      // atom-field coupling
    double kappa = 0.0;  // cavity amplitude decay
    double gamma = 0.0;  // atomic decay
    double R = 0.0;      // atomic flux (atoms per unit time)
    double tau = 0.0;    // flight time through the cavity

    // Atoms passing through the cavity per photon lifetime, R / 2kappa.
    double atoms_per_lifetime() const noexcept { return R / (2.0 * kappa); }
};

struct DimensionlessParams {
    double N = 0.0;
    double kappa_over_g = 0.0;
    double gamma_over_g = 0.0;
    double g_tau = 0.0;
};

struct ParamViolation {
    std::string field;
    std::string bound;
    double value = 0.0;

    std::string message() const;
};

// Builds params with g = 1. Throws InvalidParameter on a domain violation and
// SingleAtomRegimeViolation when R*tau >= 1.
MicrolaserParams from_dimensionless(double N, double kappa_over_g, double gamma_over_g,
                                    double g_tau);
MicrolaserParams from_dimensionless(const DimensionlessParams& d);

DimensionlessParams to_dimensionless(const MicrolaserParams& p) noexcept;

// D = sqrt(N) * g * tau.
double pump_parameter(const MicrolaserParams& p) noexcept;

// Every broken invariant, in field order. Never throws.
std::vector<ParamViolation> validate(const MicrolaserParams& p);

// Throws the first violation as an exception; the R*tau guard maps to
// SingleAtomRegimeViolation.
void require_valid(const MicrolaserParams& p);

}  // namespace microlaser
