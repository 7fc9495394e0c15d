// microlaser: steady-state photon statistics of a single-atom microlaser.
//
//   microlaser solve    (--config FILE | --N .. --kappa-over-g .. --gamma-over-g .. --g-tau ..|--D ..)
//   microlaser sweep    --config FILE --out FILE.csv [--jobs K]
//   microlaser dist     --config FILE --out FILE.csv [--baseline]
//   microlaser validate --config FILE [--seed INT] [--jobs K]
//
// Exit codes: 0 success, 2 config error, 3 numerical failure (including a
// failed oracle comparison), 1 I/O and other errors.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "microlaser/errors.hpp"
#include "microlaser/params.hpp"
#include "microlaser/steady_state.hpp"
#include "microlaser/sweep.hpp"

namespace {

using namespace microlaser;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct PointOptions {
    std::string config;
    std::optional<double> N, kappa_over_g, gamma_over_g, g_tau, D;
};

PointSpec point_from(const PointOptions& o) {
    if (!o.config.empty()) return parse_point_config(read_text_file(o.config));
    if (!o.N || !o.kappa_over_g || !o.gamma_over_g || (!o.g_tau && !o.D) || (o.g_tau && o.D))
        throw ValidationError("give --config, or --N, --kappa-over-g, --gamma-over-g and one of --g-tau/--D");
    PointSpec spec;
    spec.params = {*o.N, *o.kappa_over_g, *o.gamma_over_g, o.g_tau ? *o.g_tau : *o.D / std::sqrt(*o.N)};
    return spec;
}

void add_point_options(CLI::App* cmd, PointOptions& o) {
    cmd->add_option("--config", o.config, "Point config file ([params] section)");
    cmd->add_option("--N", o.N, "Atoms per photon lifetime");
    cmd->add_option("--kappa-over-g", o.kappa_over_g, "Cavity decay kappa/g");
    cmd->add_option("--gamma-over-g", o.gamma_over_g, "Atomic decay gamma/g");
    cmd->add_option("--g-tau", o.g_tau, "Interaction angle g*tau");
    cmd->add_option("--D", o.D, "Pump parameter sqrt(N)*g*tau");
}

std::string fmt(double v) { return format_csv_number(v); }

int run_solve(const PointOptions& o) {
    const MicrolaserParams p = from_dimensionless(point_from(o).params);
    const Solution s = solve(p);
    std::cout << "D = " << fmt(s.D) << '\n'
              << "mean_n = " << fmt(s.moments.mean_n) << '\n'
              << "v = " << (s.moments.variance_ratio_v ? fmt(*s.moments.variance_ratio_v) : "undefined") << '\n'
              << "classification = " << to_string(s.moments.classification) << '\n'
              << "n_max = " << s.distribution.n_max << '\n'
              << "tail_mass_bound = " << fmt(s.distribution.tail_mass_bound) << '\n'
              << "negative_weights = " << s.distribution.negative_weights.size() << '\n';
    return 0;
}

int run_sweep_cmd(const std::string& config, const std::string& out_path, int jobs) {
    const SweepSpec spec = parse_config(read_text_file(config));
    const auto rows = run_sweep(spec, jobs);
    const std::size_t bytes = emit_csv(rows, spec.outputs, out_path);
    std::size_t skipped = 0, failed = 0;
    for (const auto& r : rows) {
        skipped += r.skipped;
        failed += !r.skipped && !r.error.empty();
    }
    std::cerr << rows.size() << " rows (" << skipped << " skipped, " << failed << " failed), " << bytes
              << " bytes -> " << out_path << '\n';
    return failed == 0 ? 0 : kExitNumerical;
}

int run_dist(const PointOptions& o, const std::string& out_path, bool baseline) {
    const MicrolaserParams p = from_dimensionless(point_from(o).params);
    const PhotonDistribution d = baseline ? lossless_baseline(p) : photon_distribution(p);
    std::size_t bytes = 0;
    if (out_path.empty() || out_path == "-") {
        bytes = emit_distribution(d, std::cout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error("cannot open " + out_path);
        bytes = emit_distribution(d, out);
        std::cerr << bytes << " bytes -> " << out_path << '\n';
    }
    return 0;
}

int run_validate(const PointOptions& o, std::optional<std::uint64_t> seed, int jobs) {
    const PointSpec spec = point_from(o);
    const MicrolaserParams p = from_dimensionless(spec.params);
    OracleConfig cfg = spec.oracle.value_or(OracleConfig{});
    if (seed) cfg.seed = *seed;
    cfg.workers = jobs;
    const ValidationReport r = validate_point(p, cfg);
    std::cout << "total_variation = " << fmt(r.total_variation) << '\n'
              << "summed_standard_error = " << fmt(r.summed_standard_error) << '\n'
              << "threshold = " << fmt(r.threshold) << '\n'
              << "trajectories = " << r.estimate.n_trajectories << ", atoms_per_trajectory = "
              << r.estimate.n_atoms_used << ", seed = " << r.estimate.seed << '\n'
              << "n,reference,oracle,stderr,z\n";
    for (std::size_t n = 0; n < r.estimate.p_hat.size(); ++n) {
        const double ref = n < r.reference.size() ? r.reference[n] : 0.0;
        if (ref < 1e-12 && r.estimate.p_hat[n] < 1e-12) continue;
        std::cout << n << ',' << fmt(ref) << ',' << fmt(r.estimate.p_hat[n]) << ','
                  << fmt(r.estimate.standard_error[n]) << ',' << fmt(r.z_scores[n]) << '\n';
    }
    std::cout << (r.pass ? "PASS" : "FAIL") << '\n';
    return r.pass ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state photon statistics of a single-atom microlaser"};
    app.require_subcommand(1);

    PointOptions solve_opts, dist_opts, validate_opts;
    std::string sweep_config, sweep_out, dist_out;
    int jobs = 0;
    bool baseline = false;
    std::optional<std::uint64_t> seed;

    auto* solve_cmd = app.add_subcommand("solve", "Solve a single point and print its moments");
    add_point_options(solve_cmd, solve_opts);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep and write CSV");
    sweep_cmd->add_option("--config", sweep_config, "Sweep config file")->required();
    sweep_cmd->add_option("--out", sweep_out, "Output CSV")->required();
    sweep_cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)");

    auto* dist_cmd = app.add_subcommand("dist", "Write the photon distribution (n, P_n) as CSV");
    add_point_options(dist_cmd, dist_opts);
    dist_cmd->add_option("--out", dist_out, "Output CSV ('-' for stdout)");
    dist_cmd->add_flag("--baseline", baseline, "Use the lossless-flight baseline");

    auto* validate_cmd = app.add_subcommand("validate", "Compare against the master-equation oracle");
    add_point_options(validate_cmd, validate_opts);
    validate_cmd->add_option("--seed", seed, "Oracle RNG seed");
    validate_cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve_cmd) return run_solve(solve_opts);
        if (*sweep_cmd) return run_sweep_cmd(sweep_config, sweep_out, jobs);
        if (*dist_cmd) return run_dist(dist_opts, dist_out, baseline);
        if (*validate_cmd) return run_validate(validate_opts, seed, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
