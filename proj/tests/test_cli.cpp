#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "mfdr/commands.hpp"
#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"
#include "mfdr/run_config.hpp"

using namespace mfdr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mfdr_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

/// Column `name` of a CSV file as numbers.
std::vector<double> column(const fs::path& path, const std::string& name) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto header = split_csv_line(line);
    const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    REQUIRE(idx < header.size());
    std::vector<double> out;
    while (std::getline(in, line)) out.push_back(std::stod(split_csv_line(line).at(idx)));
    return out;
}

std::string summary_value(const fs::path& path, const std::string& key) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
    return "";
}

}  // namespace

TEST_CASE("INI parsing: sections, comments, values and errors with line numbers") {
    std::istringstream text("# comment\n[model]\nalpha = 0.25 ; trailing\n\n[simulation]\n agents=42\n");
    const IniFile ini = IniFile::parse(text);
    CHECK(ini.get("model", "alpha") == std::optional<std::string>("0.25"));
    CHECK(ini.get("simulation", "agents") == std::optional<std::string>("42"));
    CHECK(!ini.get("model", "gamma"));
    CHECK(ini.line_of("simulation", "agents") == 6);
    std::istringstream orphan("alpha = 1\n");
    CHECK_THROWS_AS(IniFile::parse(orphan), ParseError);
}

TEST_CASE("settings name their field on bad input and round-trip through the file form") {
    RunConfig c;
    apply_setting(c, "model", "alpha", "0.3");
    CHECK(c.alpha == 0.3);
    try {
        apply_setting(c, "simulation", "agents", "many");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("simulation.agents") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_setting(c, "model", "nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "capacity", "truncate", "maybe"), ConfigError);
    apply_setting(c, "capacity", "plus_mw", "40");
    apply_setting(c, "capacity", "minus_mw", "30");
    apply_setting(c, "verify", "fixtures", "iid2, ring3");
    CHECK(c.fixtures == std::vector<std::string>{"iid2", "ring3"});

    std::istringstream text(to_ini(c));
    RunConfig back;
    apply_file(back, IniFile::parse(text));
    CHECK(to_ini(back) == to_ini(c));
    for (const auto& f : config_fields()) CHECK(setting_value(back, f.section, f.key) == setting_value(c, f.section, f.key));
}

TEST_CASE("later settings override earlier ones, as flags override the file") {
    RunConfig c;
    std::istringstream text("[simulation]\nseed = 5\nm = 4\n");
    apply_file(c, IniFile::parse(text));
    apply_setting(c, "simulation", "seed", "9");
    CHECK(c.seed == 9);
    CHECK(c.m == 4);
}

TEST_CASE("validation names the offending field") {
    auto message = [](RunConfig c) {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    RunConfig c;
    CHECK(message(c).empty());
    c.alpha = 1.5;
    CHECK(message(c).find("model.alpha") != std::string::npos);
    c = RunConfig{};
    c.band_hi = 100.0;
    CHECK(message(c).find("reference.band_hi") != std::string::npos);
    c = RunConfig{};
    c.fixtures.clear();
    CHECK(message(c).find("verify.fixtures") != std::string::npos);
    c = RunConfig{};
    c.plus_mw = 10.0;
    CHECK(message(c).find("capacity.plus_mw") != std::string::npos);
    c = RunConfig{};
    c.gamma = 1.0;
    CHECK(message(c).find("model.gamma") != std::string::npos);
}

TEST_CASE("design: one half on at zero tilt and a convex welfare column") {
    RunConfig c;
    c.dir = scratch_dir("design").string();
    std::ostringstream log;
    CHECK(cmd_design(c, log) == kExitOk);
    CHECK(std::stod(summary_value(fs::path(c.dir) / "design_summary.txt", "on_fraction_at_zero")) == doctest::Approx(0.5));
    const auto zeta = column(fs::path(c.dir) / "sweep.csv", "zeta");
    const auto eta = column(fs::path(c.dir) / "sweep.csv", "eta_star");
    CHECK(zeta.size() == 121);
    CHECK(zeta.front() == -6.0);
    CHECK(zeta.back() == 6.0);
    for (std::size_t k = 1; k + 1 < eta.size(); ++k) CHECK(eta[k + 1] - 2.0 * eta[k] + eta[k - 1] >= -1e-9);
    const auto pi0 = column(fs::path(c.dir) / "nominal.csv", "pi0");
    CHECK(pi0.size() == 96);
    CHECK(fs::exists(fs::path(c.dir) / "eta_star.svg"));
    CHECK(fs::exists(fs::path(c.dir) / "model.csv"));
}

TEST_CASE("design with 8-hour cleaning: switch-on is late and switch-off is early") {
    RunConfig c;
    c.alpha = 1.0 / 3.0;
    c.dir = scratch_dir("design_cleaning").string();
    std::ostringstream log;
    CHECK(cmd_design(c, log) == kExitOk);
    const auto hours = column(fs::path(c.dir) / "switching_curve.csv", "hours");
    const auto on = column(fs::path(c.dir) / "switching_curve.csv", "p_on");
    const auto off = column(fs::path(c.dir) / "switching_curve.csv", "p_off");
    auto half_point = [&](const std::vector<double>& p) {
        std::size_t k = 0;
        while (p[k] < 0.5) ++k;
        return hours[k];
    };
    // Off stretches last about 16 hours and on stretches about 8.
    CHECK(half_point(on) == doctest::Approx(16.0).epsilon(0.05));
    CHECK(half_point(off) == doctest::Approx(8.0).epsilon(0.1));
}

TEST_CASE("analyze-lti: minimum phase, DC gain equal to the variance and eleven filter zeros") {
    RunConfig c;
    c.dir = scratch_dir("lti").string();
    std::ostringstream log;
    CHECK(cmd_analyze_lti(c, log) == kExitOk);
    const fs::path summary = fs::path(c.dir) / "lti_summary.txt";
    CHECK(summary_value(summary, "minimum_phase") == "true");
    CHECK(std::stod(summary_value(summary, "dc_gain")) == doctest::Approx(std::stod(summary_value(summary, "kappa2"))).epsilon(1e-6));
    const auto re = column(fs::path(c.dir) / "filter_zeros.csv", "re");
    const auto im = column(fs::path(c.dir) / "filter_zeros.csv", "im");
    CHECK(re.size() == 11);
    for (std::size_t k = 0; k < re.size(); ++k) CHECK(std::hypot(re[k], im[k]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(column(fs::path(c.dir) / "bode.csv", "omega").size() == 400);
    CHECK(column(fs::path(c.dir) / "bode_supersampled.csv", "omega").size() == 400);

    c.alpha = 1.0 / 3.0;
    c.dir = scratch_dir("lti_cleaning").string();
    CHECK(cmd_analyze_lti(c, log) == kExitOk);
    CHECK(summary_value(fs::path(c.dir) / "lti_summary.txt", "minimum_phase") == "true");
}

TEST_CASE("simulate writes aggregate and per-class outputs plus a snapshot") {
    RunConfig c;
    c.dir = scratch_dir("simulate").string();
    c.agents = 5000;
    c.hours = 6.0;
    std::ostringstream log;
    CHECK(cmd_simulate(c, log) == kExitOk);
    const auto y = column(fs::path(c.dir) / "simulate.csv", "y");
    CHECK(y.size() == 6 * 24 + 1);
    CHECK(column(fs::path(c.dir) / "simulate.csv", "y_class_11").size() == y.size());
    CHECK(fs::exists(fs::path(c.dir) / "population.txt"));
}

TEST_CASE("track: desk run within the envelope, deterministic output, histogram and windup flag") {
    RunConfig c;
    c.backend = "agent";
    c.agents = 20000;
    c.hours = 48.0;
    c.estimate = false;
    c.plus_mw = 0.4 * 20.0;
    c.minus_mw = 0.4 * 20.0;
    c.dir = scratch_dir("track").string();
    std::ostringstream log;
    CHECK(cmd_track(c, log) == kExitOk);
    const fs::path dir(c.dir);
    CHECK(std::stod(summary_value(dir / "track_summary.txt", "nrms")) < 0.05);
    CHECK(fs::exists(dir / "on_hours_histogram.csv"));
    const auto agents = column(dir / "on_hours_histogram.csv", "agents");
    CHECK(std::accumulate(agents.begin(), agents.end(), 0.0) == 20000.0);

    RunConfig again = c;
    again.dir = scratch_dir("track_again").string();
    CHECK(cmd_track(again, log) == kExitOk);
    CHECK(slurp(dir / "track.csv") == slurp(fs::path(again.dir) / "track.csv"));

    // Reference pushed 30% past the trackable envelope (about ±0.486 of the fleet) with truncation off.
    RunConfig over = c;
    over.backend = "mean_field";
    over.hours = 96.0;
    over.shift_to_envelope = true;
    over.amplitude_fraction = 1.3;
    over.plus_mw = over.minus_mw = 0.4856 * 20.0;
    over.truncate = false;
    over.dir = scratch_dir("track_over").string();
    CHECK(cmd_track(over, log) == kExitOk);
    CHECK(summary_value(fs::path(over.dir) / "track_summary.txt", "windup_flag") == "true");
}

TEST_CASE("verify: all fixtures pass and unknown or empty fixture lists are rejected") {
    RunConfig c;
    c.dir = scratch_dir("verify").string();
    std::ostringstream log;
    CHECK(cmd_verify(c, log) == kExitOk);
    CHECK(column(fs::path(c.dir) / "oracle_report.csv", "tolerance").size() > 100);
    c.fixtures = {"nope"};
    CHECK_THROWS_AS(cmd_verify(c, log), ConfigError);
    c.fixtures.clear();
    CHECK_THROWS_AS(cmd_verify(c, log), ConfigError);
}
