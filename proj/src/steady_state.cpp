#include "microlaser/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microlaser/coefficients.hpp"
#include "microlaser/errors.hpp"

namespace microlaser {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cumulative log-product of the ratios, normalized with log-sum-exp.
// A nonpositive ratio ends the support.
PhotonDistribution assemble(std::span<const double> ratios, const MicrolaserParams& p) {
    PhotonDistribution d;
    d.n_max = static_cast<int>(ratios.size()) - 1;
    d.log_p.assign(ratios.size(), kNegInf);
    d.log_p[0] = 0.0;
    for (int n = 1; n <= d.n_max; ++n) {
        const double v = ratios[n];
        if (!(v > 0.0) || d.log_p[n - 1] == kNegInf) break;
        d.log_p[n] = d.log_p[n - 1] + std::log(v);
    }

    const double peak = *std::max_element(d.log_p.begin(), d.log_p.end());
    double sum = 0.0;
    for (double lp : d.log_p) sum += std::exp(lp - peak);
    const double log_norm = peak + std::log(sum);
    for (double& lp : d.log_p)
        if (lp != kNegInf) lp -= log_norm;

    d.tail_mass_bound = std::exp(d.log_p.back()) * d.n_max;
    d.params_echo = to_dimensionless(p);
    return d;
}

bool retained_agree(const PhotonDistribution& coarse, const PhotonDistribution& fine, double rel_tol) {
    double peak = 0.0;
    for (int n = 0; n <= fine.n_max; ++n) peak = std::max(peak, fine.probability(n));
    for (int n = 0; n <= coarse.n_max; ++n) {
        const double a = coarse.probability(n);
        const double b = fine.probability(n);
        if (std::max(a, b) < rel_tol * peak) continue;
        if (std::abs(a - b) > rel_tol * b) return false;
    }
    return true;
}

bool tail_settled(const PhotonDistribution& d, double rel_tol) {
    double peak = 0.0;
    for (int n = 0; n <= d.n_max; ++n) peak = std::max(peak, d.probability(n));
    return d.probability(d.n_max) < rel_tol * peak;
}

int initial_truncation(const MicrolaserParams& p, const TruncationPolicy& policy) {
    if (policy.initial_n_max > 0) return policy.initial_n_max;
    return std::max(1, static_cast<int>(std::ceil(4.0 * p.atoms_per_lifetime() + 20.0)));
}

template <class RatioFn>
PhotonDistribution adaptive(const MicrolaserParams& p, const TruncationPolicy& policy, RatioFn&& ratios_for) {
    require_valid(p);
    if (!(policy.rel_tol > 0.0)) throw InvalidParameter("rel_tol must be > 0");
    int n_max = initial_truncation(p, policy);
    while (true) {
        if (n_max > policy.hard_cap)
            throw TruncationNotConverged("photon distribution not converged below the hard cap n_max = " +
                                         std::to_string(policy.hard_cap));
        auto [coarse_ratios, coarse_negative] = ratios_for(n_max);
        const int doubled = 2 * n_max;
        auto fine_ratios = ratios_for(doubled).first;
        PhotonDistribution coarse = assemble(coarse_ratios, p);
        const PhotonDistribution fine = assemble(fine_ratios, p);
        if (tail_settled(coarse, policy.rel_tol) && retained_agree(coarse, fine, policy.rel_tol) &&
            coarse.tail_mass_bound <= policy.tail_mass_limit) {
            coarse.negative_weights = std::move(coarse_negative);
            return coarse;
        }
        n_max = doubled;
    }
}

}  // namespace

ContinuedFraction continued_fraction(const MicrolaserParams& p, int n_max, double tail_v) {
    if (n_max < 1) throw InvalidParameter("continued_fraction requires n_max >= 1");
    ContinuedFraction cf;
    cf.values.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    cf.values[0] = 1.0;
    double next = tail_v;
    for (int n = n_max; n >= 1; --n) {
        const FractionTerms t = fraction_terms(n, p);
        const double denominator = t.f2 + t.f1 * next;
        if (!(std::abs(denominator) >= 1e-300)) throw ContinuedFractionSingular(n);
        const double v = t.f3 / denominator;
        if (!std::isfinite(v)) throw ContinuedFractionSingular(n);
        if (v < 0.0) cf.negative_weights.push_back(n);
        cf.values[n] = v;
        next = v;
    }
    std::reverse(cf.negative_weights.begin(), cf.negative_weights.end());
    return cf;
}

double PhotonDistribution::probability(int n) const {
    if (n < 0 || n > n_max) return 0.0;
    return std::exp(log_p[n]);
}

std::vector<double> PhotonDistribution::probabilities() const {
    std::vector<double> out(log_p.size());
    std::transform(log_p.begin(), log_p.end(), out.begin(), [](double lp) { return std::exp(lp); });
    return out;
}

int PhotonDistribution::support_end() const {
    for (int n = n_max; n >= 0; --n)
        if (log_p[n] != kNegInf && std::exp(log_p[n]) > 0.0) return n;
    return 0;
}

std::string_view to_string(Classification c) noexcept {
    switch (c) {
        case Classification::sub_poissonian: return "sub_poissonian";
        case Classification::poissonian: return "poissonian";
        case Classification::super_poissonian: return "super_poissonian";
        case Classification::undefined: break;
    }
    return "undefined";
}

PhotonDistribution photon_distribution(const MicrolaserParams& p, const TruncationPolicy& policy) {
    return adaptive(p, policy, [&](int n_max) {
        ContinuedFraction cf = continued_fraction(p, n_max);
        return std::make_pair(std::move(cf.values), std::move(cf.negative_weights));
    });
}

PhotonDistribution lossless_baseline(const MicrolaserParams& p, const TruncationPolicy& policy) {
    const double N = p.atoms_per_lifetime();
    return adaptive(p, policy, [&](int n_max) {
        std::vector<double> ratios(static_cast<std::size_t>(n_max) + 1, 1.0);
        for (int m = 1; m <= n_max; ++m) {
            const double s = std::sin(p.g * std::sqrt(double(m)) * p.tau);
            ratios[m] = N * s * s / m;
        }
        return std::make_pair(std::move(ratios), std::vector<int>{});
    });
}

PhotonDistribution distribution_from_weights(std::span<const double> weights) {
    if (weights.empty()) throw InvalidParameter("distribution needs at least one weight");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidParameter("weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidParameter("weights sum to zero");
    PhotonDistribution d;
    d.n_max = static_cast<int>(weights.size()) - 1;
    d.log_p.resize(weights.size());
    for (std::size_t n = 0; n < weights.size(); ++n)
        d.log_p[n] = weights[n] > 0.0 ? std::log(weights[n] / total) : kNegInf;
    d.tail_mass_bound = std::exp(d.log_p.back()) * d.n_max;
    return d;
}

FieldMoments moments(const PhotonDistribution& d) {
    FieldMoments m;
    const auto probs = d.probabilities();
    for (std::size_t n = 0; n < probs.size(); ++n) {
        m.mean_n += double(n) * probs[n];
        m.second_moment += double(n) * double(n) * probs[n];
    }
    if (m.mean_n < 1e-12) return m;

    double variance = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        const double dev = double(n) - m.mean_n;
        variance += dev * dev * probs[n];
    }
    const double v = std::sqrt(std::max(variance, 0.0) / m.mean_n);
    m.variance_ratio_v = v;
    if (std::abs(v - 1.0) <= 1e-9)
        m.classification = Classification::poissonian;
    else if (v < 1.0)
        m.classification = Classification::sub_poissonian;
    else
        m.classification = Classification::super_poissonian;
    return m;
}

Solution solve(const MicrolaserParams& p, const TruncationPolicy& policy) {
    Solution s;
    s.distribution = photon_distribution(p, policy);
    s.moments = moments(s.distribution);
    s.D = pump_parameter(p);
    return s;
}

double total_variation_distance(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        sum += std::abs(x - y);
    }
    return 0.5 * sum;
}

}  // namespace microlaser
