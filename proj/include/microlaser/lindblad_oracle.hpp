// Brute-force reference for the steady state: the dissipative Jaynes-Cummings
// master equation integrated in a truncated Fock space, driven by a Monte-Carlo
// sequence of single-atom transits separated by random field-only gaps.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "microlaser/params.hpp"

namespace microlaser {

using ComplexMatrix = Eigen::MatrixXcd;

struct StateCheck {
    double hermiticity_error = 0.0;  // max |rho - rho^dagger| elementwise
    double trace_error = 0.0;        // |Tr rho - 1|
    double min_eigenvalue = 0.0;

    bool ok(double hermitian_tol = 1e-12, double trace_tol = 1e-10, double positivity_tol = 1e-10) const {
        return hermiticity_error <= hermitian_tol && trace_error <= trace_tol && min_eigenvalue >= -positivity_tol;
    }
};

StateCheck check_density_matrix(const ComplexMatrix& rho);

// Field density operator over Fock states 0..n_fock.
class FieldState {
public:
    explicit FieldState(ComplexMatrix rho);

    static FieldState vacuum(int n_fock);
    static FieldState fock(int n_fock, int n);
    static FieldState from_populations(std::span<const double> populations);

    int n_fock() const noexcept { return static_cast<int>(rho_.rows()) - 1; }
    const ComplexMatrix& matrix() const noexcept { return rho_; }
    std::vector<double> populations() const;
    double mean_photon_number() const;
    StateCheck check() const { return check_density_matrix(rho_); }

private:
    ComplexMatrix rho_;
};

// Atom (excited, ground) tensor field; basis index = atom * (n_fock + 1) + n,
// atom 0 = excited, atom 1 = ground.
class JointState {
public:
    JointState(ComplexMatrix rho, int n_fock);

    static int index(int atom, int n, int n_fock) noexcept { return atom * (n_fock + 1) + n; }

    int n_fock() const noexcept { return n_fock_; }
    const ComplexMatrix& matrix() const noexcept { return rho_; }
    double excited_population() const;
    std::vector<double> photon_populations() const;
    StateCheck check() const { return check_density_matrix(rho_); }

private:
    ComplexMatrix rho_;
    int n_fock_;
};

struct IntegratorTolerances {
    double absolute = 1e-12;
    double relative = 1e-10;
    double leak_limit = 1e-8;         // population allowed in the top two Fock levels
    double trace_drift_limit = 1e-9;
};

// Full master equation for the flight time; H = g (a S+ + a^dagger S-) at resonance.
// Throws IntegrationFailure on step-size collapse or trace drift, TruncationLeak
// when the top two Fock levels exceed the leak limit.
JointState evolve_joint(const JointState& s, const MicrolaserParams& p, double duration,
                        const IntegratorTolerances& tol = {});

// Cavity-only decay (H = gamma = 0), evaluated with the closed-form
// amplitude-damping solution with eta = exp(-2 kappa t).
FieldState evolve_field_only(const FieldState& s, double kappa, double duration,
                             const IntegratorTolerances& tol = {});

// Same Lindbladian as evolve_field_only, through the adaptive integrator.
FieldState evolve_field_only_integrated(const FieldState& s, double kappa, double duration,
                                        const IntegratorTolerances& tol = {});

JointState inject_atom(const FieldState& f);
FieldState extract_field(const JointState& s);

enum class GapLaw {
    // Exponential gap with mean 1/R after each exit (arrivals Poisson at rate R
    // whenever the cavity is empty).
    poisson_after_exit,
    // Exponential gap with mean 1/R - tau, so the mean cycle equals 1/R.
    dead_time_corrected,
};

double mean_gap(const MicrolaserParams& p, GapLaw law);
double sample_gap(const MicrolaserParams& p, std::mt19937_64& rng, GapLaw law = GapLaw::poisson_after_exit);

enum class SamplingMode {
    pre_injection,  // field just before each arrival
    time_averaged,  // gap-length-weighted field at a uniform instant of each gap
};

struct OracleConfig {
    int n_atoms = 2200;  // per trajectory, including burn-in
    int burn_in = 200;
    int n_trajectories = 10;
    int n_fock = 40;
    std::uint64_t seed = 1;
    GapLaw gap_law = GapLaw::poisson_after_exit;
    SamplingMode sampling = SamplingMode::pre_injection;
    // kappa = gamma = 0 during the flight; the field still decays between atoms.
    bool lossless_flight = false;
    // Reuse per-Fock-element transit images (exact by linearity) instead of
    // re-integrating each transit.
    bool cache_transit = true;
    int workers = 0;  // 0 = hardware concurrency
    IntegratorTolerances tolerances;
};

struct OracleEstimate {
    std::vector<double> p_hat;
    std::vector<double> standard_error;
    int n_atoms_used = 0;  // post-burn-in atoms per trajectory
    int n_trajectories = 0;
    std::uint64_t seed = 0;

    double summed_standard_error() const;
};

OracleEstimate simulate_steady_state(const MicrolaserParams& p, const OracleConfig& cfg);

}  // namespace microlaser
