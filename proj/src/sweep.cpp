#include "microlaser/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "microlaser/errors.hpp"

namespace microlaser {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

struct RawConfig {
    std::map<std::string, Section> sections;
    std::map<std::string, int> section_lines;
};

class ErrorList {
public:
    void add(int line, const std::string& what) {
        if (first_line_ == 0) first_line_ = line;
        if (!text_.empty()) text_ += '\n';
        text_ += "line " + std::to_string(line) + ": " + what;
    }
    bool empty() const { return text_.empty(); }
    [[noreturn]] void raise() const { throw ParseError(first_line_, text_.substr(text_.find(": ") + 2)); }

private:
    int first_line_ = 0;
    std::string text_;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long long> to_integer(std::string_view s) {
    long long v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"params", {"N", "kappa_over_g", "gamma_over_g", "g_tau", "D"}},
        {"sweep", {"axis", "start", "stop", "step", "values", "outputs", "invalid_points"}},
        {"oracle",
         {"n_atoms", "burn_in", "n_trajectories", "n_fock", "seed", "sampling", "gap_law", "lossless_flight"}},
    };
    return keys;
}

RawConfig tokenize(std::string_view text, ErrorList& errors) {
    RawConfig raw;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.add(line_no, "unterminated section header");
                continue;
            }
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_keys().contains(current)) {
                errors.add(line_no, "unknown section [" + current + "]");
                continue;
            }
            if (raw.section_lines.contains(current)) errors.add(line_no, "duplicate section [" + current + "]");
            raw.section_lines[current] = line_no;
            raw.sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.add(line_no, "expected 'key = value'");
            continue;
        }
        if (current.empty()) {
            errors.add(line_no, "key outside of any section");
            continue;
        }
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (!known_keys().at(current).contains(key)) {
            errors.add(line_no, "unknown key '" + key + "' in [" + current + "]");
            continue;
        }
        if (value.empty()) {
            errors.add(line_no, "empty value for '" + key + "'");
            continue;
        }
        auto& section = raw.sections[current];
        if (section.contains(key)) {
            errors.add(line_no, "duplicate key '" + key + "'");
            continue;
        }
        section[key] = {value, line_no};
    }
    return raw;
}

std::optional<double> number(const Section& s, const std::string& key, ErrorList& errors) {
    const auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    auto v = to_double(it->second.value);
    if (!v) errors.add(it->second.line, "'" + key + "' is not a number: " + it->second.value);
    return v;
}

FixedParams read_params(const RawConfig& raw, ErrorList& errors) {
    FixedParams fixed;
    const auto it = raw.sections.find("params");
    if (it == raw.sections.end()) return fixed;
    const Section& s = it->second;
    fixed.N = number(s, "N", errors);
    fixed.kappa_over_g = number(s, "kappa_over_g", errors);
    fixed.gamma_over_g = number(s, "gamma_over_g", errors);
    fixed.g_tau = number(s, "g_tau", errors);
    fixed.D = number(s, "D", errors);
    if (s.contains("g_tau") && s.contains("D")) errors.add(s.at("D").line, "give either g_tau or D, not both");
    return fixed;
}

std::optional<OracleConfig> read_oracle(const RawConfig& raw, ErrorList& errors) {
    const auto it = raw.sections.find("oracle");
    if (it == raw.sections.end()) return std::nullopt;
    OracleConfig cfg;
    for (const auto& [key, entry] : it->second) {
        if (key == "sampling") {
            if (entry.value == "pre_injection") cfg.sampling = SamplingMode::pre_injection;
            else if (entry.value == "time_averaged") cfg.sampling = SamplingMode::time_averaged;
            else errors.add(entry.line, "sampling must be pre_injection or time_averaged");
        } else if (key == "gap_law") {
            if (entry.value == "poisson_after_exit") cfg.gap_law = GapLaw::poisson_after_exit;
            else if (entry.value == "dead_time_corrected") cfg.gap_law = GapLaw::dead_time_corrected;
            else errors.add(entry.line, "gap_law must be poisson_after_exit or dead_time_corrected");
        } else if (key == "lossless_flight") {
            if (entry.value == "true") cfg.lossless_flight = true;
            else if (entry.value == "false") cfg.lossless_flight = false;
            else errors.add(entry.line, "lossless_flight must be true or false");
        } else {
            const auto v = to_integer(entry.value);
            if (!v || *v < 0) {
                errors.add(entry.line, "'" + key + "' must be a nonnegative integer");
                continue;
            }
            if (key == "seed") cfg.seed = static_cast<std::uint64_t>(*v);
            else if (key == "n_atoms") cfg.n_atoms = static_cast<int>(*v);
            else if (key == "burn_in") cfg.burn_in = static_cast<int>(*v);
            else if (key == "n_trajectories") cfg.n_trajectories = static_cast<int>(*v);
            else if (key == "n_fock") cfg.n_fock = static_cast<int>(*v);
        }
    }
    if (cfg.n_atoms <= cfg.burn_in) errors.add(raw.section_lines.at("oracle"), "n_atoms must exceed burn_in");
    if (cfg.n_trajectories < 1) errors.add(raw.section_lines.at("oracle"), "n_trajectories must be >= 1");
    return cfg;
}

std::optional<SweepAxis> axis_from(std::string_view s) {
    if (s == "D") return SweepAxis::D;
    if (s == "g_tau") return SweepAxis::g_tau;
    if (s == "N") return SweepAxis::N;
    if (s == "kappa_over_g") return SweepAxis::kappa_over_g;
    if (s == "gamma_over_g") return SweepAxis::gamma_over_g;
    return std::nullopt;
}

bool has_fixed(const FixedParams& f, SweepAxis axis) {
    switch (axis) {
        case SweepAxis::D:
        case SweepAxis::g_tau: return f.D.has_value() || f.g_tau.has_value();
        case SweepAxis::N: return f.N.has_value();
        case SweepAxis::kappa_over_g: return f.kappa_over_g.has_value();
        case SweepAxis::gamma_over_g: return f.gamma_over_g.has_value();
    }
    return false;
}

DimensionlessParams resolve(const FixedParams& f) {
    DimensionlessParams d;
    d.N = f.N.value_or(0.0);
    d.kappa_over_g = f.kappa_over_g.value_or(0.0);
    d.gamma_over_g = f.gamma_over_g.value_or(0.0);
    if (f.g_tau) d.g_tau = *f.g_tau;
    else if (f.D && d.N > 0.0) d.g_tau = *f.D / std::sqrt(d.N);
    return d;
}

void require_complete(const FixedParams& f, std::optional<SweepAxis> axis, int line, ErrorList& errors) {
    auto need = [&](bool present, SweepAxis which, const char* name) {
        if (!present && axis != which) errors.add(line, std::string("[params] is missing ") + name);
    };
    need(f.N.has_value(), SweepAxis::N, "N");
    need(f.kappa_over_g.has_value(), SweepAxis::kappa_over_g, "kappa_over_g");
    need(f.gamma_over_g.has_value(), SweepAxis::gamma_over_g, "gamma_over_g");
    if (!(f.g_tau || f.D) && axis != SweepAxis::D && axis != SweepAxis::g_tau)
        errors.add(line, "[params] is missing g_tau or D");
}

std::string describe_point(const SweepSpec& spec, std::size_t i) {
    return std::string(to_string(spec.axis)) + " = " + format_csv_number(spec.grid[i]);
}

std::ofstream open_output(const std::filesystem::path& destination) {
    std::ofstream out(destination, std::ios::binary);
    if (!out) throw Error("cannot open " + destination.string() + ": " + std::strerror(errno));
    return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& destination) {
    out.flush();
    if (!out) throw Error("write to " + destination.string() + " failed: " + std::strerror(errno));
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

std::string_view to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::D: return "D";
        case SweepAxis::g_tau: return "g_tau";
        case SweepAxis::N: return "N";
        case SweepAxis::kappa_over_g: return "kappa_over_g";
        case SweepAxis::gamma_over_g: return "gamma_over_g";
    }
    return "D";
}

std::string format_csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

DimensionlessParams SweepSpec::point(std::size_t i) const {
    FixedParams f = fixed;
    const double value = grid.at(i);
    switch (axis) {
        case SweepAxis::D: f.D = value; f.g_tau.reset(); break;
        case SweepAxis::g_tau: f.g_tau = value; f.D.reset(); break;
        case SweepAxis::N: f.N = value; break;
        case SweepAxis::kappa_over_g: f.kappa_over_g = value; break;
        case SweepAxis::gamma_over_g: f.gamma_over_g = value; break;
    }
    return resolve(f);
}

SweepSpec parse_config(std::string_view text) {
    ErrorList errors;
    const RawConfig raw = tokenize(text, errors);
    SweepSpec spec;
    spec.fixed = read_params(raw, errors);
    spec.validate = read_oracle(raw, errors);

    const auto sweep_it = raw.sections.find("sweep");
    if (sweep_it == raw.sections.end()) {
        errors.add(1, "missing [sweep] section");
        errors.raise();
    }
    const Section& s = sweep_it->second;
    const int sweep_line = raw.section_lines.at("sweep");
    std::optional<SweepAxis> axis;
    if (const auto a = s.find("axis"); a == s.end()) {
        errors.add(sweep_line, "[sweep] is missing axis");
    } else if (!(axis = axis_from(a->second.value))) {
        errors.add(a->second.line, "unknown axis '" + a->second.value + "'");
    }
    if (axis) spec.axis = *axis;

    const bool has_range = s.contains("start") || s.contains("stop") || s.contains("step");
    if (const auto vals = s.find("values"); vals != s.end()) {
        if (has_range) errors.add(vals->second.line, "give either values or start/stop/step, not both");
        for (const auto& item : split_list(vals->second.value)) {
            if (auto v = to_double(item)) spec.grid.push_back(*v);
            else errors.add(vals->second.line, "grid value is not a number: " + item);
        }
    } else if (has_range) {
        const auto start = number(s, "start", errors);
        const auto stop = number(s, "stop", errors);
        const auto step = number(s, "step", errors);
        if (!start || !stop || !step) {
            errors.add(sweep_line, "a range grid needs start, stop and step");
        } else if (!(*step > 0.0)) {
            errors.add(s.at("step").line, "step must be > 0");
        } else if (*stop >= *start) {
            const auto count = static_cast<std::size_t>(std::floor((*stop - *start) / *step + 1e-9)) + 1;
            spec.grid.reserve(count);
            for (std::size_t i = 0; i < count; ++i) spec.grid.push_back(*start + double(i) * *step);
        }
    }

    if (const auto out = s.find("outputs"); out != s.end()) {
        spec.outputs = OutputColumns{false, false, false, {}};
        for (const auto& item : split_list(out->second.value)) {
            if (item == "mean_n") spec.outputs.mean_n = true;
            else if (item == "v") spec.outputs.v = true;
            else if (item == "classification") spec.outputs.classification = true;
            else if (item.starts_with("P:")) {
                const auto n = to_integer(std::string_view(item).substr(2));
                if (n && *n >= 0) spec.outputs.snapshot_indices.push_back(static_cast<int>(*n));
                else errors.add(out->second.line, "bad snapshot index '" + item + "'");
            } else {
                errors.add(out->second.line, "unknown output column '" + item + "'");
            }
        }
    }
    if (const auto inv = s.find("invalid_points"); inv != s.end()) {
        if (inv->second.value == "skip") spec.skip_invalid = true;
        else if (inv->second.value == "reject") spec.skip_invalid = false;
        else errors.add(inv->second.line, "invalid_points must be skip or reject");
    }

    if (raw.sections.contains("params"))
        require_complete(spec.fixed, axis, raw.section_lines.at("params"), errors);
    else
        errors.add(1, "missing [params] section");
    if (!errors.empty()) errors.raise();

    if (has_fixed(spec.fixed, spec.axis))
        throw ValidationError("swept axis " + std::string(to_string(spec.axis)) + " is also fixed in [params]");
    if (spec.grid.empty()) throw ValidationError("sweep grid is empty");
    for (std::size_t i = 1; i < spec.grid.size(); ++i)
        if (!(spec.grid[i] > spec.grid[i - 1])) throw ValidationError("sweep grid must be strictly increasing");

    if (!spec.skip_invalid) {
        std::string problems;
        for (std::size_t i = 0; i < spec.grid.size(); ++i) {
            try {
                from_dimensionless(spec.point(i));
            } catch (const InvalidParameter& e) {
                problems += "\n  " + describe_point(spec, i) + ": " + e.what();
            }
        }
        if (!problems.empty()) throw ValidationError("invalid grid points:" + problems);
    }
    return spec;
}

PointSpec parse_point_config(std::string_view text) {
    ErrorList errors;
    const RawConfig raw = tokenize(text, errors);
    PointSpec spec;
    const FixedParams fixed = read_params(raw, errors);
    spec.oracle = read_oracle(raw, errors);
    if (raw.sections.contains("params"))
        require_complete(fixed, std::nullopt, raw.section_lines.at("params"), errors);
    else
        errors.add(1, "missing [params] section");
    if (!errors.empty()) errors.raise();
    spec.params = resolve(fixed);
    try {
        from_dimensionless(spec.params);
    } catch (const InvalidParameter& e) {
        throw ValidationError(e.what());
    }
    return spec;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string() + ": " + std::strerror(errno));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int workers, const TruncationPolicy& policy) {
    std::vector<SweepRow> rows(spec.grid.size());
    auto evaluate = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.axis_value = spec.grid[i];
        const DimensionlessParams d = spec.point(i);
        row.D = std::sqrt(d.N) * d.g_tau;
        MicrolaserParams p;
        try {
            p = from_dimensionless(d);
        } catch (const InvalidParameter& e) {
            row.skipped = true;
            row.error = e.what();
            return;
        }
        try {
            const Solution s = solve(p, policy);
            row.mean_n = s.moments.mean_n;
            row.v = s.moments.variance_ratio_v;
            row.classification = s.moments.classification;
            row.negative_weight_count = static_cast<int>(s.distribution.negative_weights.size());
            row.n_max = s.distribution.n_max;
            for (int n : spec.outputs.snapshot_indices) row.snapshots.push_back(s.distribution.probability(n));
        } catch (const Error& e) {
            row.error = e.what();
        }
    };

    const int pool_size = std::max(
        1, std::min<int>(static_cast<int>(rows.size()), workers > 0 ? workers : int(std::thread::hardware_concurrency())));
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < pool_size; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) evaluate(i);
        });
    return rows;
}

std::size_t emit_csv(const std::vector<SweepRow>& rows, const OutputColumns& columns, std::ostream& out) {
    if (rows.empty()) throw InvalidParameter("emit_csv needs at least one row");
    std::string text = "axis_value,D";
    if (columns.mean_n) text += ",mean_n";
    if (columns.v) text += ",v";
    if (columns.classification) text += ",classification";
    for (int n : columns.snapshot_indices) text += ",P_" + std::to_string(n);
    text += ",negative_weight_count,n_max,skipped,error\n";

    for (const SweepRow& row : rows) {
        const bool has_values = row.mean_n.has_value();
        text += format_csv_number(row.axis_value) + ',' + format_csv_number(row.D);
        if (columns.mean_n) text += ',' + (has_values ? format_csv_number(*row.mean_n) : "");
        if (columns.v) text += ',' + (row.v ? format_csv_number(*row.v) : "");
        if (columns.classification) text += ',' + (has_values ? std::string(to_string(row.classification)) : "");
        for (std::size_t k = 0; k < columns.snapshot_indices.size(); ++k)
            text += ',' + (has_values && k < row.snapshots.size() ? format_csv_number(row.snapshots[k]) : "");
        text += ',' + (has_values ? std::to_string(row.negative_weight_count) : "");
        text += ',' + (has_values ? std::to_string(row.n_max) : "");
        text += row.skipped ? ",true," : ",false,";
        text += csv_escape(row.error) + '\n';
    }
    out << text;
    if (!out) throw Error("CSV write failed");
    return text.size();
}

std::size_t emit_csv(const std::vector<SweepRow>& rows, const OutputColumns& columns,
                     const std::filesystem::path& destination) {
    auto out = open_output(destination);
    const std::size_t bytes = emit_csv(rows, columns, out);
    finish_output(out, destination);
    return bytes;
}

std::size_t emit_distribution(const PhotonDistribution& d, std::ostream& out) {
    std::string text = "n,P_n\n";
    const int last = d.support_end();
    for (int n = 0; n <= last; ++n) text += std::to_string(n) + ',' + format_csv_number(d.probability(n)) + '\n';
    out << text;
    if (!out) throw Error("CSV write failed");
    return text.size();
}

std::size_t emit_distribution(const MicrolaserParams& p, std::ostream& out) {
    return emit_distribution(photon_distribution(p), out);
}

std::size_t emit_distribution(const MicrolaserParams& p, const std::filesystem::path& destination) {
    const PhotonDistribution d = photon_distribution(p);
    auto out = open_output(destination);
    const std::size_t bytes = emit_distribution(d, out);
    finish_output(out, destination);
    return bytes;
}

ValidationReport validate_point(const MicrolaserParams& p, const OracleConfig& cfg) {
    const double N = p.atoms_per_lifetime();
    if (N > kValidationMaxN || cfg.n_fock > kValidationMaxFock)
        throw CapacityError("oracle validation is limited to N <= " + format_csv_number(kValidationMaxN) +
                            " and n_fock <= " + std::to_string(kValidationMaxFock) + " (got N = " +
                            format_csv_number(N) + ", n_fock = " + std::to_string(cfg.n_fock) + ")");
    ValidationReport report;
    report.reference = (cfg.lossless_flight ? lossless_baseline(p) : photon_distribution(p)).probabilities();
    report.estimate = simulate_steady_state(p, cfg);
    report.total_variation = total_variation_distance(report.reference, report.estimate.p_hat);
    report.summed_standard_error = report.estimate.summed_standard_error();
    report.threshold = 0.02 + 3.0 * report.summed_standard_error;
    report.pass = report.total_variation < report.threshold;
    const std::size_t bins = report.estimate.p_hat.size();
    report.z_scores.resize(bins);
    for (std::size_t n = 0; n < bins; ++n) {
        const double ref = n < report.reference.size() ? report.reference[n] : 0.0;
        const double diff = ref - report.estimate.p_hat[n];
        const double se = report.estimate.standard_error[n];
        report.z_scores[n] = std::abs(diff) <= 1e-15 ? 0.0 : diff / se;
    }
    return report;
}

}  // namespace microlaser
