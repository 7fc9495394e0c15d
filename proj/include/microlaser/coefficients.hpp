// Coefficient functions of the three-term steady-state recurrence
//
//     f3(n) P[n-1] = f2(n) P[n] + f1(n) P[n+1],
//
// built from the per-transit rates X_n (n-1 -> n), Y_n (n -> n) and
// Z_n (n+1 -> n), the between-transit cavity decay A_n = 2 n kappa, and the
// interference corrections F_1, F_2.

#pragma once

#include "microlaser/params.hpp"

namespace microlaser {

struct FractionTerms {
    int n = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
};

double coeff_A(int n, const MicrolaserParams& p);

// R sin^2(g sqrt(n) tau) exp(-[gamma + (2n-1) kappa] tau), n >= 1.
double coeff_X(int n, const MicrolaserParams& p);

// F_i(n) for i in {1, 2} and n >= -1. The sine/cosine argument is
// 2 g sqrt(m) tau with m = n+2 for i = 1 and m = n+1 for i = 2; the upper
// signs of the second bracket belong to i = 1.
double coeff_F(int i, int n, const MicrolaserParams& p);

// Uses F_1(n-1) and F_2(n-1); at n = 0 this evaluates F at n = -1.
double coeff_Y(int n, const MicrolaserParams& p);

double coeff_Z(int n, const MicrolaserParams& p);

// (f1, f2, f3) for n >= 1. f3 = -X_n / kappa is never positive.
FractionTerms fraction_terms(int n, const MicrolaserParams& p);

}  // namespace microlaser
