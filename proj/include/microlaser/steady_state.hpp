// Steady-state photon statistics from the continued-fraction solution
//
//     v_n = f3(n) / (f2(n) + f1(n) v_{n+1}),   P_n = P_0 prod_{m<=n} v_m,
//
// plus the lossless-flight baseline and field moments.

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "microlaser/params.hpp"

namespace microlaser {

struct ContinuedFraction {
    // values[n] = v_n = P_n / P_{n-1} for n = 1..n_max; values[0] is 1 by convention.
    std::vector<double> values;
    // Indices n with v_n < 0. Non-fatal; the distribution clamps them to zero support.
    std::vector<int> negative_weights;

    int n_max() const noexcept { return static_cast<int>(values.size()) - 1; }
};

// Backward recursion from n_max down to 1, seeded with v_{n_max+1} = tail_v.
// Throws ContinuedFractionSingular when a denominator drops below 1e-300.
ContinuedFraction continued_fraction(const MicrolaserParams& p, int n_max, double tail_v = 0.0);

struct PhotonDistribution {
    std::vector<double> log_p;  // ln P_n for n = 0..n_max; -inf outside the support
    int n_max = 0;
    // Crude geometric bound P_{n_max} * n_max on the discarded tail.
    double tail_mass_bound = 0.0;
    DimensionlessParams params_echo;
    std::vector<int> negative_weights;

    double probability(int n) const;
    std::vector<double> probabilities() const;
    // Largest n with P_n > 0.
    int support_end() const;
};

enum class Classification { sub_poissonian, poissonian, super_poissonian, undefined };

std::string_view to_string(Classification c) noexcept;

struct FieldMoments {
    double mean_n = 0.0;
    double second_moment = 0.0;
    // sqrt(variance / mean); empty when mean_n < 1e-12.
    std::optional<double> variance_ratio_v;
    Classification classification = Classification::undefined;
};

struct TruncationPolicy {
    double rel_tol = 1e-10;
    int hard_cap = 20000;
    // Overrides the ceil(4N + 20) starting truncation when positive.
    int initial_n_max = 0;
    double tail_mass_limit = 1e-9;
};

// Adaptive truncation: doubles n_max until the last retained P_n is below
// rel_tol * max P, the retained P_n agree with the doubled truncation to
// rel_tol, and the tail bound is below tail_mass_limit.
PhotonDistribution photon_distribution(const MicrolaserParams& p, const TruncationPolicy& policy = {});

// Same pump model with no dissipation during the flight:
// P_n = P_0 prod_{m<=n} N sin^2(g sqrt(m) tau) / m.
PhotonDistribution lossless_baseline(const MicrolaserParams& p, const TruncationPolicy& policy = {});

// Builds a normalized distribution from arbitrary nonnegative weights (used for
// constructed test distributions and oracle estimates).
PhotonDistribution distribution_from_weights(std::span<const double> weights);

FieldMoments moments(const PhotonDistribution& d);

struct Solution {
    PhotonDistribution distribution;
    FieldMoments moments;
    double D = 0.0;
};

Solution solve(const MicrolaserParams& p, const TruncationPolicy& policy = {});

// 0.5 * sum |a_n - b_n|, with the shorter input padded by zeros.
double total_variation_distance(std::span<const double> a, std::span<const double> b);

}  // namespace microlaser
