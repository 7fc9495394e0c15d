#include "microlaser/params.hpp"

#include <cmath>
#include <sstream>

#include "microlaser/errors.hpp"

namespace microlaser {

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

SingleAtomRegimeViolation::SingleAtomRegimeViolation(double rate, double flight_time)
    : InvalidParameter("single-atom regime violated: R*tau = " + format_number(rate * flight_time) +
                       " (R = " + format_number(rate) + ", tau = " + format_number(flight_time) +
                       ") must be < 1"),
      product_(rate * flight_time) {}

ContinuedFractionSingular::ContinuedFractionSingular(int n)
    : NumericalError("continued fraction denominator collapsed at n = " + std::to_string(n)),
      index_(n) {}

TruncationLeak::TruncationLeak(double leaked, int n_fock)
    : NumericalError("Fock truncation leak: population " + format_number(leaked) +
                     " in the top two levels of n_fock = " + std::to_string(n_fock)),
      leaked_(leaked) {}

ParseError::ParseError(int line, const std::string& what)
    : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string ParamViolation::message() const {
    return field + " must be " + bound + " (got " + format_number(value) + ")";
}

MicrolaserParams from_dimensionless(double N, double kappa_over_g, double gamma_over_g,
                                    double g_tau) {
    if (!(N > 0.0)) throw InvalidParameter("N must be > 0 (got " + format_number(N) + ")");
    if (!(kappa_over_g > 0.0))
        throw InvalidParameter("kappa_over_g must be > 0 (got " + format_number(kappa_over_g) + ")");
    if (!(gamma_over_g >= 0.0))
        throw InvalidParameter("gamma_over_g must be >= 0 (got " + format_number(gamma_over_g) + ")");
    if (!(g_tau >= 0.0)) throw InvalidParameter("g_tau must be >= 0 (got " + format_number(g_tau) + ")");

    MicrolaserParams p;
    p.g = 1.0;
    p.kappa = kappa_over_g;
    p.gamma = gamma_over_g;
    p.tau = g_tau;
    p.R = 2.0 * kappa_over_g * N;
    if (!(p.R * p.tau < 1.0)) throw SingleAtomRegimeViolation(p.R, p.tau);
    return p;
}

MicrolaserParams from_dimensionless(const DimensionlessParams& d) {
    return from_dimensionless(d.N, d.kappa_over_g, d.gamma_over_g, d.g_tau);
}

DimensionlessParams to_dimensionless(const MicrolaserParams& p) noexcept {
    return {p.R / (2.0 * p.kappa), p.kappa / p.g, p.gamma / p.g, p.g * p.tau};
}

double pump_parameter(const MicrolaserParams& p) noexcept {
    return std::sqrt(p.R / (2.0 * p.kappa)) * p.g * p.tau;
}

std::vector<ParamViolation> validate(const MicrolaserParams& p) {
    std::vector<ParamViolation> out;
    auto check = [&](bool ok, const char* field, const char* bound, double value) {
        if (!ok) out.push_back({field, bound, value});
    };
    check(p.g > 0.0 && std::isfinite(p.g), "g", "> 0", p.g);
    check(p.kappa > 0.0 && std::isfinite(p.kappa), "kappa", "> 0", p.kappa);
    check(p.gamma >= 0.0 && std::isfinite(p.gamma), "gamma", ">= 0", p.gamma);
    check(p.R > 0.0 && std::isfinite(p.R), "R", "> 0", p.R);
    check(p.tau >= 0.0 && std::isfinite(p.tau), "tau", ">= 0", p.tau);
    check(p.R * p.tau < 1.0, "R*tau", "< 1", p.R * p.tau);
    return out;
}

void require_valid(const MicrolaserParams& p) {
    const auto violations = validate(p);
    if (violations.empty()) return;
    const auto& first = violations.front();
    if (first.field == "R*tau") throw SingleAtomRegimeViolation(p.R, p.tau);
    throw InvalidParameter(first.message());
}

}  // namespace microlaser
