#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "microlaser/errors.hpp"
#include "microlaser/steady_state.hpp"
#include "microlaser/sweep.hpp"

using namespace microlaser;

namespace {

const std::filesystem::path config_dir{MICROLASER_CONFIG_DIR};

std::string sweep_text(const std::string& grid, const std::string& extra = "") {
    return "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\n[sweep]\naxis = D\n" + grid + "\n" + extra;
}

std::string csv(const std::vector<SweepRow>& rows, const OutputColumns& cols) {
    std::ostringstream out;
    emit_csv(rows, cols, out);
    return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("shipped sweep config parses") {
    const auto spec = parse_config(read_text_file(config_dir / "fig1_sweep.cfg"));
    CHECK(spec.axis == SweepAxis::D);
    REQUIRE(spec.grid.size() == 4996);
    CHECK(spec.grid.front() == 0.1);
    CHECK(spec.grid.back() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(spec.outputs.snapshot_indices == std::vector<int>{0, 100});
    CHECK(spec.skip_invalid);
    const auto pt = spec.point(0);
    CHECK(pt.N == 100);
    CHECK(pt.g_tau == doctest::Approx(0.01));
}

TEST_CASE("shipped point configs parse") {
    const auto dist = parse_point_config(read_text_file(config_dir / "fig3_dist.cfg"));
    CHECK(dist.params.g_tau == doctest::Approx(0.17));
    CHECK(!dist.oracle);
    const auto val = parse_point_config(read_text_file(config_dir / "validate_n5.cfg"));
    REQUIRE(val.oracle);
    CHECK(val.oracle->n_fock == 40);
    CHECK(val.oracle->n_atoms - val.oracle->burn_in == 2000);
    CHECK(val.oracle->n_trajectories == 10);
}

TEST_CASE("grid and axis validation") {
    CHECK_THROWS_AS(parse_config(sweep_text("start = 2\nstop = 1\nstep = 0.1")), ValidationError);
    CHECK_THROWS_AS(parse_config(sweep_text("values = 1, 3, 2")), ValidationError);
    const std::string both = "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\nD = 1.0\n"
                             "[sweep]\naxis = D\nvalues = 1, 2\n";
    CHECK_THROWS_AS(parse_config(both), ValidationError);
    const std::string gt = "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\ng_tau = 0.1\n"
                           "[sweep]\naxis = D\nvalues = 1, 2\n";
    CHECK_THROWS_AS(parse_config(gt), ValidationError);
}

TEST_CASE("parse errors carry line numbers") {
    const std::string text = "[params]\nN = 100\nkappa_over_g = abc\ngamma_over_g = 0.1\n"
                             "[sweep]\naxis = D\nvalues = 1, 2\nbogus = 3\nno equals sign\n";
    try {
        parse_config(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("line 8") != std::string::npos);
        CHECK(msg.find("line 9") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(sweep_text("axis = sideways\nvalues = 1")), ParseError);
    CHECK_THROWS_AS(parse_config(sweep_text("values = 1", "outputs = mean_n, P:x")), ParseError);
}

TEST_CASE("invalid points: reject refuses, skip records") {
    const std::string grid = "values = 10, 49, 51, 70";
    try {
        parse_config(sweep_text(grid, "invalid_points = reject"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("51") != std::string::npos);
        CHECK(msg.find("70") != std::string::npos);
    }
    const auto rows = run_sweep(parse_config(sweep_text(grid)), 2);
    REQUIRE(rows.size() == 4);
    CHECK(!rows[0].skipped);
    CHECK(!rows[1].skipped);
    CHECK(rows[2].skipped);
    CHECK(rows[3].skipped);
    CHECK(!rows[2].mean_n);
    CHECK(!rows[2].error.empty());
    CHECK(rows[3].axis_value == 70.0);
}

TEST_CASE("sweep rows echo the grid and do not depend on the worker count") {
    const auto spec = parse_config(sweep_text("start = 0.1\nstop = 40\nstep = 0.37", "outputs = mean_n, v, P:0, P:50"));
    const auto one = run_sweep(spec, 1);
    const auto many = run_sweep(spec, 4);
    REQUIRE(one.size() == spec.grid.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].axis_value == spec.grid[i]);
        CHECK(std::abs(one[i].D - spec.grid[i]) < 1e-12);
    }
    CHECK(csv(one, spec.outputs) == csv(many, spec.outputs));
}

TEST_CASE("D stays consistent with the axis on other axes") {
    const std::string text = "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\n"
                             "[sweep]\naxis = g_tau\nvalues = 0.1, 0.2, 0.3\n";
    for (const auto& row : run_sweep(parse_config(text), 2))
        CHECK(std::abs(row.D - 10.0 * row.axis_value) < 1e-12);
    const std::string ntext = "[params]\ng_tau = 0.16\nkappa_over_g = 0.001\ngamma_over_g = 0.1\n"
                              "[sweep]\naxis = N\nvalues = 25, 100, 400\n";
    for (const auto& row : run_sweep(parse_config(ntext), 2))
        CHECK(std::abs(row.D - std::sqrt(row.axis_value) * 0.16) < 1e-12);
}

TEST_CASE("trapping row near D = 31.4") {
    const auto rows = run_sweep(parse_config(sweep_text("start = 30.4\nstop = 32.4\nstep = 0.02")), 2);
    const auto nearest = std::min_element(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::abs(a.D - 10 * std::numbers::pi) < std::abs(b.D - 10 * std::numbers::pi);
    });
    REQUIRE(nearest->mean_n);
    CHECK(*nearest->mean_n < 0.5);
}

TEST_CASE("single point at tau = 0") {
    const std::string text = "[params]\nN = 100\nkappa_over_g = 0.001\ngamma_over_g = 0.1\n"
                             "[sweep]\naxis = g_tau\nvalues = 0\n";
    const auto rows = run_sweep(parse_config(text));
    REQUIRE(rows.size() == 1);
    CHECK(*rows[0].mean_n == 0.0);
    CHECK(!rows[0].v);
    CHECK(rows[0].classification == Classification::undefined);
}

TEST_CASE("peak near D = 1.6 on each kappa curve") {
    // the kappa/g = 0.01 curve keeps rising past D = 3, so only the two
    // low-loss curves have their maximum near 1.6
    std::vector<double> at_peak;
    for (double kappa : {0.01, 0.001, 0.0001}) {
        const std::string text = "[params]\nN = 100\nkappa_over_g = " + format_csv_number(kappa) +
                                 "\ngamma_over_g = 0.1\n[sweep]\naxis = D\nstart = 1.0\nstop = 3.0\nstep = 0.02\n";
        const auto rows = run_sweep(parse_config(text));
        double best = 0.0, here = 0.0;
        for (const auto& r : rows) {
            best = std::max(best, *r.mean_n);
            if (std::abs(r.D - 1.6) < 1e-9) here = *r.mean_n;
        }
        at_peak.push_back(here);
        if (kappa < 0.005) CHECK(here >= 0.95 * best);
        else CHECK(here < 0.95 * best);
    }
    CHECK(at_peak[0] != at_peak[1]);
    CHECK(at_peak[1] != at_peak[2]);
    CHECK(at_peak[0] != at_peak[2]);
}

TEST_CASE("spot re-solve matches the sweep rows") {
    const auto spec = parse_config(read_text_file(config_dir / "fig1_sweep.cfg"));
    SweepSpec part = spec;
    part.grid.assign(spec.grid.begin(), spec.grid.begin() + 600);
    const auto rows = run_sweep(part);
    for (std::size_t i = 0; i < rows.size(); i += 97) {
        const auto d = photon_distribution(from_dimensionless(part.point(i)));
        CHECK(*rows[i].mean_n == moments(d).mean_n);
        CHECK(rows[i].n_max == d.n_max);
    }
}

TEST_CASE("CSV layout") {
    const auto spec = parse_config(sweep_text("values = 0.5, 1.6, 60", "outputs = mean_n, v, classification, P:2"));
    const auto rows = run_sweep(spec);
    const std::string text = csv(rows, spec.outputs);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == 4);
    CHECK(text.back() == '\n');
    CHECK(lines[0] == "axis_value,D,mean_n,v,classification,P_2,negative_weight_count,n_max,skipped,error");
    CHECK(lines[1].starts_with("0.5,0.5,"));
    CHECK(lines[3].starts_with("60,60,,,,,,,true,"));
    CHECK(csv(rows, spec.outputs) == text);

    std::ostringstream sink;
    CHECK_THROWS_AS(emit_csv({}, spec.outputs, sink), Error);
    CHECK(format_csv_number(0.1) == "0.1");
    CHECK(format_csv_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("CSV quoting") {
    SweepRow r;
    r.axis_value = 1;
    r.D = 1;
    r.skipped = true;
    r.error = "bad \"value\", here";
    const auto lines = lines_of(csv({r}, OutputColumns{}));
    CHECK(lines[1].ends_with(",true,\"bad \"\"value\"\", here\""));
}

TEST_CASE("CSV file output reports bytes and unwritable destinations") {
    const auto spec = parse_config(sweep_text("values = 1, 2"));
    const auto rows = run_sweep(spec);
    const auto path = std::filesystem::temp_directory_path() / "microlaser_test_sweep.csv";
    const std::size_t bytes = emit_csv(rows, spec.outputs, path);
    CHECK(bytes == std::filesystem::file_size(path));
    CHECK(read_text_file(path) == csv(rows, spec.outputs));
    std::filesystem::remove(path);
    try {
        emit_csv(rows, spec.outputs, "/nonexistent/dir/out.csv");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/out.csv") != std::string::npos);
    }
}

TEST_CASE("distribution files") {
    auto column2 = [](const std::string& text) {
        std::vector<double> p;
        auto lines = lines_of(text);
        CHECK(lines.front() == "n,P_n");
        // strtod rather than stod: the far tail holds subnormal values
        for (std::size_t i = 1; i < lines.size(); ++i)
            p.push_back(std::strtod(lines[i].c_str() + lines[i].find(',') + 1, nullptr));
        return p;
    };
    std::ostringstream a, b, c;
    emit_distribution(from_dimensionless(100, 0.001, 0.1, 1.7 / 10), a);
    const auto p3 = column2(a.str());
    CHECK(p3[0] > p3[1]);
    const auto far = std::max_element(p3.begin() + 10, p3.end()) - p3.begin();
    CHECK(std::abs(far - 100) <= 25);

    emit_distribution(from_dimensionless(100, 0.001, 0.1, 10.0 / 10), b);
    double s = 0;
    for (double x : column2(b.str())) s += x;
    CHECK(std::abs(s - 1.0) < 1e-9);

    emit_distribution(from_dimensionless(100, 0.001, 0.1, 0.0), c);
    const auto p0 = column2(c.str());
    CHECK(p0.size() == 1);
    CHECK(p0[0] == 1.0);
}

TEST_CASE("validation capacity and trivial cases") {
    OracleConfig cfg;
    cfg.n_atoms = 150;
    cfg.burn_in = 50;
    cfg.n_trajectories = 3;
    cfg.n_fock = 16;
    CHECK_THROWS_AS(validate_point(from_dimensionless(50, 0.01, 0.1, 0.3), cfg), CapacityError);
    OracleConfig big = cfg;
    big.n_fock = 201;
    CHECK_THROWS_AS(validate_point(from_dimensionless(5, 0.01, 0.1, 0.3), big), CapacityError);

    const auto r = validate_point(from_dimensionless(5, 0.01, 0.1, 0.0), cfg);
    CHECK(r.pass);
    CHECK(r.total_variation < 1e-6);
    CHECK(r.threshold == doctest::Approx(0.02 + 3 * r.summed_standard_error));
}
