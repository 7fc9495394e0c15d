#include "microlaser/lindblad_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "microlaser/errors.hpp"

namespace microlaser {

namespace {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
constexpr Complex kI{0.0, 1.0};

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

double top_levels_population(std::span<const double> photon_populations) {
    const std::size_t n = photon_populations.size();
    double leak = photon_populations[n - 1];
    if (n >= 2) leak += photon_populations[n - 2];
    return leak;
}

// Lindblad generator rho' = -i (Heff rho - rho Heff^dagger) + sum_k 2 c_k J_k rho J_k^dagger,
// with Heff = H - i sum_k c_k J_k^dagger J_k.
struct Lindbladian {
    SparseMatrix effective_hamiltonian;
    std::vector<std::pair<double, SparseMatrix>> jumps;  // (rate c_k, J_k)
    double rate_scale = 1.0;

    ComplexMatrix operator()(const ComplexMatrix& rho) const {
        ComplexMatrix out = -kI * (effective_hamiltonian * rho);
        out += kI * (rho * effective_hamiltonian.adjoint());
        for (const auto& [rate, jump] : jumps) {
            if (rate == 0.0) continue;
            const ComplexMatrix left = jump * rho;
            out += (2.0 * rate) * (left * jump.adjoint());
        }
        return out;
    }
};

SparseMatrix from_triplets(int dim, const std::vector<Eigen::Triplet<Complex>>& entries) {
    SparseMatrix m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    return m;
}

Lindbladian joint_lindbladian(int n_fock, double g, double kappa, double gamma) {
    const int levels = n_fock + 1;
    const int dim = 2 * levels;
    auto idx = [&](int atom, int n) { return JointState::index(atom, n, n_fock); };

    std::vector<Eigen::Triplet<Complex>> h, a, sm;
    for (int n = 0; n < levels; ++n) {
        // a S+ |g, n+1> = sqrt(n+1) |e, n>
        if (n + 1 < levels) {
            const double amp = g * std::sqrt(double(n + 1));
            h.emplace_back(idx(0, n), idx(1, n + 1), amp);
            h.emplace_back(idx(1, n + 1), idx(0, n), amp);
        }
        // Decay terms folded into Heff.
        h.emplace_back(idx(0, n), idx(0, n), Complex(0.0, -(kappa * n + gamma)));
        h.emplace_back(idx(1, n), idx(1, n), Complex(0.0, -kappa * n));
        if (n >= 1) {
            a.emplace_back(idx(0, n - 1), idx(0, n), std::sqrt(double(n)));
            a.emplace_back(idx(1, n - 1), idx(1, n), std::sqrt(double(n)));
        }
        sm.emplace_back(idx(1, n), idx(0, n), 1.0);
    }
    Lindbladian L;
    L.effective_hamiltonian = from_triplets(dim, h);
    L.jumps.emplace_back(kappa, from_triplets(dim, a));
    L.jumps.emplace_back(gamma, from_triplets(dim, sm));
    L.rate_scale = g * std::sqrt(double(levels)) + kappa * levels + gamma + 1e-300;
    return L;
}

Lindbladian field_lindbladian(int n_fock, double kappa) {
    const int levels = n_fock + 1;
    std::vector<Eigen::Triplet<Complex>> h, a;
    for (int n = 0; n < levels; ++n) {
        h.emplace_back(n, n, Complex(0.0, -kappa * n));
        if (n >= 1) a.emplace_back(n - 1, n, std::sqrt(double(n)));
    }
    Lindbladian L;
    L.effective_hamiltonian = from_triplets(levels, h);
    L.jumps.emplace_back(kappa, from_triplets(levels, a));
    L.rate_scale = kappa * levels + 1e-300;
    return L;
}

double error_norm(const ComplexMatrix& err, const ComplexMatrix& y0, const ComplexMatrix& y1,
                  const IntegratorTolerances& tol) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < err.cols(); ++j)
        for (Eigen::Index i = 0; i < err.rows(); ++i) {
            const double scale = tol.absolute + tol.relative * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
            worst = std::max(worst, std::abs(err(i, j)) / scale);
        }
    return worst;
}

// Dormand-Prince 5(4) with FSAL and elementwise mixed error control.
ComplexMatrix integrate(const Lindbladian& L, ComplexMatrix y, double duration, const IntegratorTolerances& tol) {
    if (duration <= 0.0) return y;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = 0.0;
    double h = std::min(duration, 0.05 / L.rate_scale + 1e-3 * duration);
    const double h_min = 1e-14 * std::max(1.0, duration);
    ComplexMatrix k1 = L(y);
    long steps = 0;
    while (t < duration) {
        if (++steps > 10'000'000) throw IntegrationFailure("integrator exceeded the step budget");
        h = std::min(h, duration - t);
        const ComplexMatrix k2 = L(y + h * (a21 * k1));
        const ComplexMatrix k3 = L(y + h * (a31 * k1 + a32 * k2));
        const ComplexMatrix k4 = L(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const ComplexMatrix k5 = L(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const ComplexMatrix k6 = L(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        ComplexMatrix next = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        ComplexMatrix k7 = L(next);
        const ComplexMatrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double norm = error_norm(err, y, next, tol);
        if (!std::isfinite(norm)) throw IntegrationFailure("non-finite error estimate");
        if (norm <= 1.0) {
            t += h;
            y = std::move(next);
            k1 = std::move(k7);
        }
        const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        h *= norm <= 1.0 ? factor : std::min(factor, 1.0);
        if (h < h_min && t < duration) throw IntegrationFailure("step size collapsed below " + std::to_string(h_min));
    }
    return y;
}

void require_trace(const ComplexMatrix& before, const ComplexMatrix& after, const IntegratorTolerances& tol) {
    const double drift = std::abs(after.trace() - before.trace());
    if (drift > tol.trace_drift_limit)
        throw IntegrationFailure("trace drift " + std::to_string(drift) + " exceeds limit");
}

void require_no_leak(std::span<const double> photon_populations, int n_fock, const IntegratorTolerances& tol) {
    const double leak = top_levels_population(photon_populations);
    if (leak > tol.leak_limit) throw TruncationLeak(leak, n_fock);
}

ComplexMatrix propagate_joint(const ComplexMatrix& rho, int n_fock, double g, double kappa, double gamma,
                              double duration, const IntegratorTolerances& tol) {
    return integrate(joint_lindbladian(n_fock, g, kappa, gamma), rho, duration, tol);
}

ComplexMatrix partial_trace_atom(const ComplexMatrix& rho, int n_fock) {
    const int levels = n_fock + 1;
    return rho.topLeftCorner(levels, levels) + rho.bottomRightCorner(levels, levels);
}

// Closed-form amplitude damping: rho'_{mn} = sum_k sqrt(C(m+k,k) C(n+k,k))
// eta^{(m+n)/2} (1-eta)^k rho_{m+k,n+k}.
class DampingChannel {
public:
    explicit DampingChannel(int n_fock) : levels_(n_fock + 1), log_binomial_(levels_ * levels_) {
        for (int m = 0; m < levels_; ++m)
            for (int k = 0; m + k < levels_; ++k)
                log_binomial_[m * levels_ + k] = std::lgamma(m + k + 1.0) - std::lgamma(m + 1.0) - std::lgamma(k + 1.0);
    }

    ComplexMatrix apply(const ComplexMatrix& rho, double kappa, double duration) const {
        if (kappa == 0.0 || duration == 0.0) return rho;
        const double log_eta = -2.0 * kappa * duration;
        const double log_loss = std::log(-std::expm1(log_eta));
        ComplexMatrix out = ComplexMatrix::Zero(levels_, levels_);
        for (int src_n = 0; src_n < levels_; ++src_n)
            for (int src_m = 0; src_m < levels_; ++src_m) {
                const Complex value = rho(src_m, src_n);
                if (value == Complex(0.0, 0.0)) continue;
                const int k_max = std::min(src_m, src_n);
                for (int k = 0; k <= k_max; ++k) {
                    const int m = src_m - k;
                    const int n = src_n - k;
                    double log_w = 0.5 * (log_binomial_[m * levels_ + k] + log_binomial_[n * levels_ + k]) +
                                   0.5 * (m + n) * log_eta;
                    if (k > 0) log_w += k * log_loss;
                    out(m, n) += std::exp(log_w) * value;
                }
            }
        return out;
    }

private:
    int levels_;
    std::vector<double> log_binomial_;
};

// Transit channel on the field: images Phi(|j><k|) of each field matrix unit,
// computed on demand. Thread safe.
class TransitChannel {
public:
    TransitChannel(int n_fock, double g, double kappa, double gamma, double tau, IntegratorTolerances tol)
        : n_fock_(n_fock), g_(g), kappa_(kappa), gamma_(gamma), tau_(tau), tol_(tol) {}

    ComplexMatrix apply(const ComplexMatrix& field) {
        const int levels = n_fock_ + 1;
        ComplexMatrix out = ComplexMatrix::Zero(levels, levels);
        for (int k = 0; k < levels; ++k)
            for (int j = 0; j < levels; ++j) {
                const Complex value = field(j, k);
                if (value == Complex(0.0, 0.0)) continue;
                out += value * image(j, k);
            }
        return out;
    }

private:
    const ComplexMatrix& image(int j, int k) {
        std::lock_guard lock(mutex_);
        auto it = cache_.find({j, k});
        if (it != cache_.end()) return it->second;
        const int levels = n_fock_ + 1;
        ComplexMatrix joint = ComplexMatrix::Zero(2 * levels, 2 * levels);
        joint(JointState::index(0, j, n_fock_), JointState::index(0, k, n_fock_)) = 1.0;
        const ComplexMatrix evolved = propagate_joint(joint, n_fock_, g_, kappa_, gamma_, tau_, tol_);
        return cache_.emplace(std::make_pair(j, k), partial_trace_atom(evolved, n_fock_)).first->second;
    }

    int n_fock_;
    double g_, kappa_, gamma_, tau_;
    IntegratorTolerances tol_;
    std::mutex mutex_;
    std::map<std::pair<int, int>, ComplexMatrix> cache_;
};

// Neumaier-compensated running sum per histogram bin.
class CompensatedHistogram {
public:
    explicit CompensatedHistogram(std::size_t bins) : sum_(bins, 0.0), carry_(bins, 0.0) {}

    void add(std::span<const double> values, double weight) {
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            const double x = weight * values[i];
            const double t = sum_[i] + x;
            if (std::abs(sum_[i]) >= std::abs(x))
                carry_[i] += (sum_[i] - t) + x;
            else
                carry_[i] += (x - t) + sum_[i];
            sum_[i] = t;
        }
    }

    std::vector<double> total() const {
        std::vector<double> out(sum_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sum_[i] + carry_[i];
        return out;
    }

private:
    std::vector<double> sum_, carry_;
};

std::vector<double> real_diagonal(const ComplexMatrix& rho) {
    std::vector<double> out(static_cast<std::size_t>(rho.rows()));
    for (Eigen::Index i = 0; i < rho.rows(); ++i) out[i] = rho(i, i).real();
    return out;
}

std::vector<double> run_trajectory(const MicrolaserParams& p, const OracleConfig& cfg, int trajectory,
                                   TransitChannel* cached, const DampingChannel& damping) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(trajectory)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double kappa_flight = cfg.lossless_flight ? 0.0 : p.kappa;
    const double gamma_flight = cfg.lossless_flight ? 0.0 : p.gamma;
    MicrolaserParams flight = p;
    flight.kappa = kappa_flight;
    flight.gamma = gamma_flight;

    const std::size_t levels = static_cast<std::size_t>(cfg.n_fock) + 1;
    CompensatedHistogram histogram(levels);
    double total_weight = 0.0;
    ComplexMatrix field = FieldState::vacuum(cfg.n_fock).matrix();

    for (int atom = 0; atom < cfg.n_atoms; ++atom) {
        if (cached != nullptr) {
            ComplexMatrix after = hermitian_part(cached->apply(field));
            require_trace(field, after, cfg.tolerances);
            require_no_leak(real_diagonal(after), cfg.n_fock, cfg.tolerances);
            field = std::move(after);
        } else {
            const JointState joint = evolve_joint(inject_atom(FieldState(field)), flight, p.tau, cfg.tolerances);
            field = extract_field(joint).matrix();
        }

        const double gap = sample_gap(p, rng, cfg.gap_law);
        const bool record = atom >= cfg.burn_in;
        if (record && cfg.sampling == SamplingMode::time_averaged) {
            const double instant = gap * uniform(rng);
            histogram.add(real_diagonal(damping.apply(field, p.kappa, instant)), gap);
            total_weight += gap;
        }
        field = hermitian_part(damping.apply(field, p.kappa, gap));
        require_no_leak(real_diagonal(field), cfg.n_fock, cfg.tolerances);
        if (record && cfg.sampling == SamplingMode::pre_injection) {
            histogram.add(real_diagonal(field), 1.0);
            total_weight += 1.0;
        }
    }

    std::vector<double> mean = histogram.total();
    double norm = 0.0;
    for (double& x : mean) {
        x /= total_weight;
        norm += x;
    }
    for (double& x : mean) x /= norm;
    return mean;
}

}  // namespace

StateCheck check_density_matrix(const ComplexMatrix& rho) {
    StateCheck c;
    c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(rho), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = solver.eigenvalues().minCoeff();
    return c;
}

FieldState::FieldState(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() < 2)
        throw InvalidParameter("field density matrix must be square with n_fock >= 1");
}

FieldState FieldState::vacuum(int n_fock) { return fock(n_fock, 0); }

FieldState FieldState::fock(int n_fock, int n) {
    if (n_fock < 1 || n < 0 || n > n_fock) throw InvalidParameter("Fock state index out of range");
    ComplexMatrix rho = ComplexMatrix::Zero(n_fock + 1, n_fock + 1);
    rho(n, n) = 1.0;
    return FieldState(std::move(rho));
}

FieldState FieldState::from_populations(std::span<const double> populations) {
    const auto levels = static_cast<Eigen::Index>(populations.size());
    ComplexMatrix rho = ComplexMatrix::Zero(levels, levels);
    for (Eigen::Index i = 0; i < levels; ++i) rho(i, i) = populations[i];
    return FieldState(std::move(rho));
}

std::vector<double> FieldState::populations() const { return real_diagonal(rho_); }

double FieldState::mean_photon_number() const {
    double mean = 0.0;
    for (Eigen::Index n = 0; n < rho_.rows(); ++n) mean += double(n) * rho_(n, n).real();
    return mean;
}

JointState::JointState(ComplexMatrix rho, int n_fock) : rho_(std::move(rho)), n_fock_(n_fock) {
    if (n_fock < 1 || rho_.rows() != 2 * (n_fock + 1) || rho_.cols() != rho_.rows())
        throw InvalidParameter("joint density matrix must be 2(n_fock+1) square");
}

double JointState::excited_population() const {
    double sum = 0.0;
    for (int n = 0; n <= n_fock_; ++n) sum += rho_(index(0, n, n_fock_), index(0, n, n_fock_)).real();
    return sum;
}

std::vector<double> JointState::photon_populations() const {
    return real_diagonal(partial_trace_atom(rho_, n_fock_));
}

JointState evolve_joint(const JointState& s, const MicrolaserParams& p, double duration,
                        const IntegratorTolerances& tol) {
    if (!(duration >= 0.0)) throw InvalidParameter("duration must be >= 0");
    if (!(p.g >= 0.0 && p.kappa >= 0.0 && p.gamma >= 0.0)) throw InvalidParameter("rates must be nonnegative");
    const ComplexMatrix evolved =
        hermitian_part(propagate_joint(s.matrix(), s.n_fock(), p.g, p.kappa, p.gamma, duration, tol));
    require_trace(s.matrix(), evolved, tol);
    JointState out(evolved, s.n_fock());
    require_no_leak(out.photon_populations(), s.n_fock(), tol);
    return out;
}

FieldState evolve_field_only(const FieldState& s, double kappa, double duration, const IntegratorTolerances& tol) {
    if (!(duration >= 0.0) || !(kappa >= 0.0)) throw InvalidParameter("kappa and duration must be >= 0");
    const DampingChannel channel(s.n_fock());
    const ComplexMatrix evolved = hermitian_part(channel.apply(s.matrix(), kappa, duration));
    require_trace(s.matrix(), evolved, tol);
    FieldState out(evolved);
    require_no_leak(out.populations(), s.n_fock(), tol);
    return out;
}

FieldState evolve_field_only_integrated(const FieldState& s, double kappa, double duration,
                                        const IntegratorTolerances& tol) {
    if (!(duration >= 0.0) || !(kappa >= 0.0)) throw InvalidParameter("kappa and duration must be >= 0");
    const ComplexMatrix evolved =
        hermitian_part(integrate(field_lindbladian(s.n_fock(), kappa), s.matrix(), duration, tol));
    require_trace(s.matrix(), evolved, tol);
    FieldState out(evolved);
    require_no_leak(out.populations(), s.n_fock(), tol);
    return out;
}

JointState inject_atom(const FieldState& f) {
    const int n_fock = f.n_fock();
    const int levels = n_fock + 1;
    ComplexMatrix rho = ComplexMatrix::Zero(2 * levels, 2 * levels);
    rho.topLeftCorner(levels, levels) = f.matrix();
    return JointState(std::move(rho), n_fock);
}

FieldState extract_field(const JointState& s) { return FieldState(partial_trace_atom(s.matrix(), s.n_fock())); }

double mean_gap(const MicrolaserParams& p, GapLaw law) {
    if (law == GapLaw::poisson_after_exit) return 1.0 / p.R;
    return 1.0 / p.R - p.tau;
}

double sample_gap(const MicrolaserParams& p, std::mt19937_64& rng, GapLaw law) {
    const double mean = mean_gap(p, law);
    if (!(mean > 0.0)) throw SingleAtomRegimeViolation(p.R, p.tau);
    std::exponential_distribution<double> gap(1.0 / mean);
    return gap(rng);
}

double OracleEstimate::summed_standard_error() const {
    double sum = 0.0;
    for (double s : standard_error) sum += s;
    return sum;
}

OracleEstimate simulate_steady_state(const MicrolaserParams& p, const OracleConfig& cfg) {
    if (!(p.g >= 0.0 && p.kappa >= 0.0 && p.gamma >= 0.0 && p.R > 0.0 && p.tau >= 0.0))
        throw InvalidParameter("oracle requires g, kappa, gamma, tau >= 0 and R > 0");
    if (!(cfg.burn_in >= 0 && cfg.n_atoms > cfg.burn_in))
        throw InvalidParameter("oracle requires n_atoms > burn_in >= 0");
    if (cfg.n_trajectories < 1) throw InvalidParameter("oracle requires at least one trajectory");
    if (cfg.n_fock < 2) throw InvalidParameter("oracle requires n_fock >= 2");
    if (cfg.gap_law == GapLaw::dead_time_corrected && !(p.R * p.tau < 1.0))
        throw SingleAtomRegimeViolation(p.R, p.tau);

    const double kappa_flight = cfg.lossless_flight ? 0.0 : p.kappa;
    const double gamma_flight = cfg.lossless_flight ? 0.0 : p.gamma;
    TransitChannel channel(cfg.n_fock, p.g, kappa_flight, gamma_flight, p.tau, cfg.tolerances);
    TransitChannel* cached = cfg.cache_transit ? &channel : nullptr;
    const DampingChannel damping(cfg.n_fock);

    std::vector<std::vector<double>> per_trajectory(static_cast<std::size_t>(cfg.n_trajectories));
    std::vector<std::exception_ptr> failures(per_trajectory.size());
    const int workers = std::max(
        1, std::min(cfg.n_trajectories, cfg.workers > 0 ? cfg.workers : int(std::thread::hardware_concurrency())));
    {
        std::atomic<int> next{0};
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int t = next++; t < cfg.n_trajectories; t = next++) {
                    try {
                        per_trajectory[t] = run_trajectory(p, cfg, t, cached, damping);
                    } catch (...) {
                        failures[t] = std::current_exception();
                    }
                }
            });
    }
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);

    const std::size_t levels = static_cast<std::size_t>(cfg.n_fock) + 1;
    OracleEstimate est;
    est.n_atoms_used = cfg.n_atoms - cfg.burn_in;
    est.n_trajectories = cfg.n_trajectories;
    est.seed = cfg.seed;
    est.p_hat.assign(levels, 0.0);
    est.standard_error.assign(levels, 0.0);
    const double count = cfg.n_trajectories;
    for (const auto& traj : per_trajectory)
        for (std::size_t n = 0; n < levels; ++n) est.p_hat[n] += traj[n];
    for (double& x : est.p_hat) x /= count;
    if (cfg.n_trajectories > 1) {
        for (std::size_t n = 0; n < levels; ++n) {
            double ss = 0.0;
            for (const auto& traj : per_trajectory) ss += (traj[n] - est.p_hat[n]) * (traj[n] - est.p_hat[n]);
            est.standard_error[n] = std::sqrt(ss / (count - 1.0) / count);
        }
    }
    return est;
}

}  // namespace microlaser
