#include "microlaser/coefficients.hpp"

#include <cmath>
#include <string>

#include "microlaser/errors.hpp"

namespace microlaser {

namespace {

// 1 - exp(-x) without cancellation for small x.
double one_minus_exp_neg(double x) { return -std::expm1(-x); }

}  // namespace

double coeff_A(int n, const MicrolaserParams& p) { return 2.0 * n * p.kappa; }

double coeff_X(int n, const MicrolaserParams& p) {
    if (n < 1) throw InvalidParameter("coeff_X requires n >= 1 (got " + std::to_string(n) + ")");
    const double s = std::sin(p.g * std::sqrt(double(n)) * p.tau);
    return p.R * s * s * std::exp(-(p.gamma + (2.0 * n - 1.0) * p.kappa) * p.tau);
}

double coeff_F(int i, int n, const MicrolaserParams& p) {
    if (i != 1 && i != 2) throw InvalidParameter("coeff_F index must be 1 or 2 (got " + std::to_string(i) + ")");
    if (n < -1) throw InvalidParameter("coeff_F requires n >= -1 (got " + std::to_string(n) + ")");

    const double root_hi = std::sqrt(double(n + 2));
    const double root_lo = std::sqrt(double(n + 1));
    const double sum = root_hi + root_lo;
    // root_hi - root_lo == 1 / sum; the direct difference loses digits at large n.
    const double diff = 1.0 / sum;
    const double sum2 = sum * sum;
    const double diff2 = diff * diff;

    const int m = (i == 1) ? n + 2 : n + 1;
    const double phase = 2.0 * p.g * std::sqrt(double(m)) * p.tau;
    const double sn = std::sin(phase);
    const double cs = std::cos(phase);
    const double sign = (i == 1) ? 1.0 : -1.0;

    const double g_ratio = p.gamma / p.g;
    const double k_ratio = p.gamma / p.kappa;
    const double prefactor = p.kappa / (4.0 * p.g);

    // 2n+3 + 2 sqrt((n+1)(n+2)) == sum^2 and 2n+3 - 2 sqrt((n+1)(n+2)) == diff^2.
    const double first = k_ratio * diff * sn - g_ratio * cs - sum2 * diff * sn;
    const double second = sign * k_ratio * sum * sn - g_ratio * cs - sign * diff2 * sum * sn;
    return prefactor / diff2 * first + prefactor / sum2 * second;
}

double coeff_Y(int n, const MicrolaserParams& p) {
    if (n < 0) throw InvalidParameter("coeff_Y requires n >= 0 (got " + std::to_string(n) + ")");
    const double half_rate = 0.5 * (p.gamma / p.kappa + 2.0 * n + 1.0);
    const double decay_upper = std::exp(-(p.gamma + (2.0 * n + 1.0) * p.kappa) * p.tau);
    const double decay_lower = std::exp(-(p.gamma + (2.0 * n - 1.0) * p.kappa) * p.tau);
    const double c = std::cos(p.g * std::sqrt(double(n + 1)) * p.tau);
    const double F1 = coeff_F(1, n - 1, p);
    const double F2 = coeff_F(2, n - 1, p);

    // half_rate * (decay_lower - decay_upper) rewritten through expm1.
    const double transfer = half_rate * decay_lower * one_minus_exp_neg(2.0 * p.kappa * p.tau);
    return 0.5 * p.R * ((2.0 * c * c + F1) * decay_upper - F2 * decay_lower + transfer);
}

double coeff_Z(int n, const MicrolaserParams& p) {
    if (n < 0) throw InvalidParameter("coeff_Z requires n >= 0 (got " + std::to_string(n) + ")");
    const double half_rate = 0.5 * (p.gamma / p.kappa + 2.0 * n + 3.0);
    const double decay_mid = std::exp(-(p.gamma + (2.0 * n + 1.0) * p.kappa) * p.tau);
    const double decay_top = std::exp(-(p.gamma + (2.0 * n + 3.0) * p.kappa) * p.tau);
    const double F1 = coeff_F(1, n, p);
    const double F2 = coeff_F(2, n, p);

    // half_rate * (decay_mid - decay_top) rewritten through expm1.
    const double transfer = half_rate * decay_mid * one_minus_exp_neg(2.0 * p.kappa * p.tau);
    return 0.5 * p.R * (F2 * decay_mid - F1 * decay_top + transfer);
}

FractionTerms fraction_terms(int n, const MicrolaserParams& p) {
    if (n < 1) throw InvalidParameter("fraction_terms requires n >= 1 (got " + std::to_string(n) + ")");
    const double N = p.atoms_per_lifetime();
    FractionTerms t;
    t.n = n;
    t.f1 = (coeff_Z(n, p) + coeff_A(n + 1, p)) / p.kappa;
    t.f2 = -2.0 * N + (coeff_Y(n, p) - coeff_A(n, p)) / p.kappa;
    t.f3 = -coeff_X(n, p) / p.kappa;
    return t;
}

}  // namespace microlaser
