// Parameter sweeps over the steady-state solver, the sweep/point config
// format, CSV emission and oracle cross-validation of single points.
//
// Config format: '#' starts a comment, '[name]' opens a section, every other
// non-blank line is 'key = value'. Sections:
//
//   [params]  N, kappa_over_g, gamma_over_g, and one of g_tau | D
//             (the swept axis is left out)
//   [sweep]   axis = D | g_tau | N | kappa_over_g | gamma_over_g
//             start, stop, step  or  values = a, b, c
//             outputs = mean_n, v, classification, P:<n> ...
//             invalid_points = skip | reject
//   [oracle]  n_atoms, burn_in, n_trajectories, n_fock, seed,
//             sampling = pre_injection | time_averaged,
//             gap_law = poisson_after_exit | dead_time_corrected,
//             lossless_flight = true | false

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "microlaser/lindblad_oracle.hpp"
#include "microlaser/params.hpp"
#include "microlaser/steady_state.hpp"

namespace microlaser {

enum class SweepAxis { D, g_tau, N, kappa_over_g, gamma_over_g };

std::string_view to_string(SweepAxis axis) noexcept;

struct FixedParams {
    std::optional<double> N;
    std::optional<double> kappa_over_g;
    std::optional<double> gamma_over_g;
    std::optional<double> g_tau;
    std::optional<double> D;
};

struct OutputColumns {
    bool mean_n = true;
    bool v = true;
    bool classification = true;
    std::vector<int> snapshot_indices;  // P_n columns
};

struct SweepSpec {
    FixedParams fixed;
    SweepAxis axis = SweepAxis::D;
    std::vector<double> grid;
    OutputColumns outputs;
    bool skip_invalid = true;
    std::optional<OracleConfig> validate;

    // Dimensionless parameters of grid point i (D is converted to g_tau).
    DimensionlessParams point(std::size_t i) const;
};

struct PointSpec {
    DimensionlessParams params;
    std::optional<OracleConfig> oracle;
};

// Throws ParseError (all problems, one per line with its line number) or
// ValidationError.
SweepSpec parse_config(std::string_view text);

// Config holding only [params] (with g_tau or D) and optionally [oracle].
PointSpec parse_point_config(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

struct SweepRow {
    double axis_value = 0.0;
    double D = 0.0;
    std::optional<double> mean_n;
    std::optional<double> v;
    Classification classification = Classification::undefined;
    std::vector<double> snapshots;  // P_n for OutputColumns::snapshot_indices
    int negative_weight_count = 0;
    int n_max = 0;
    bool skipped = false;
    std::string error;
};

// One row per grid point in grid order; the result does not depend on the
// worker count. Solver failures are recorded in the row, never thrown.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int workers = 0,
                                const TruncationPolicy& policy = {});

std::size_t emit_csv(const std::vector<SweepRow>& rows, const OutputColumns& columns, std::ostream& out);
std::size_t emit_csv(const std::vector<SweepRow>& rows, const OutputColumns& columns,
                     const std::filesystem::path& destination);

// Two columns (n, P_n) over the solved support.
std::size_t emit_distribution(const PhotonDistribution& d, std::ostream& out);
std::size_t emit_distribution(const MicrolaserParams& p, std::ostream& out);
std::size_t emit_distribution(const MicrolaserParams& p, const std::filesystem::path& destination);

struct ValidationReport {
    double total_variation = 0.0;
    double summed_standard_error = 0.0;
    double threshold = 0.0;  // 0.02 + 3 * summed standard error
    std::vector<double> z_scores;
    bool pass = false;
    OracleEstimate estimate;
    std::vector<double> reference;  // continued-fraction (or lossless) P_n
};

inline constexpr double kValidationMaxN = 20.0;
inline constexpr int kValidationMaxFock = 200;

// Compares the continued-fraction distribution (lossless baseline when
// cfg.lossless_flight) with the Monte-Carlo master-equation estimate.
// Throws CapacityError above N = 20 or n_fock = 200.
ValidationReport validate_point(const MicrolaserParams& p, const OracleConfig& cfg);

// %.12g formatting used by every CSV writer.
std::string format_csv_number(double v);

}  // namespace microlaser
