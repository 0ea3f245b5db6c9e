#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mfdr/errors.hpp"
#include "mfdr/signal.hpp"

using namespace mfdr;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

SignalSeries tone(double cph, double hours, double period) {
    SignalSeries s;
    s.period_seconds = period;
    const auto n = static_cast<std::size_t>(hours * 3600.0 / period);
    for (std::size_t k = 0; k < n; ++k) s.samples.push_back(std::sin(2.0 * std::numbers::pi * cph * k * period / 3600.0));
    return s;
}

}  // namespace

TEST_CASE("CSV loading: well-formed, header-only, jittered and malformed files") {
    const SignalSeries s = load_csv(write_temp("mfdr_ok.csv", "time_seconds,mw\n0,1.5\n4,2\n8,-3\n"));
    CHECK(s.size() == 3);
    CHECK(s.period_seconds == 4.0);
    CHECK(s.samples[2] == -3.0);
    CHECK(s.units == SignalUnits::MW);
    CHECK_THROWS_AS(load_csv(write_temp("mfdr_empty.csv", "time_seconds,mw\n")), ParseError);
    CHECK_THROWS_AS(load_csv(write_temp("mfdr_jitter.csv", "0,1\n4,1\n8.5,1\n12,1\n")), ParseError);
    CHECK_THROWS_AS(load_csv(write_temp("mfdr_bad.csv", "0,1\n4,abc\n")), ParseError);
    CHECK_THROWS_AS(load_csv("/nonexistent/mfdr.csv"), ConfigError);
    try {
        load_csv(write_temp("mfdr_bad2.csv", "t,v\n0,1\n4\n"));
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find('3') != std::string::npos);
    }
}

TEST_CASE("CSV round trip") {
    SignalSeries s;
    s.samples = {0.1, -0.25, 1.0 / 3.0};
    s.period_seconds = 150.0;
    const auto path = std::filesystem::temp_directory_path() / "mfdr_roundtrip.csv";
    write_csv(path, s);
    const SignalSeries back = load_csv(path);
    CHECK(back.samples == s.samples);
    CHECK(back.period_seconds == 150.0);
}

TEST_CASE("synthetic regulation: zero RMS, requested RMS and band confinement") {
    const SignalSeries zero = synth_regulation(48.0, 150.0, 1, 0.25, 2.0, 0.0);
    for (double x : zero.samples) CHECK(x == 0.0);

    const SignalSeries s = synth_regulation(168.0, 150.0, 7, 0.25, 2.0, 200.0);
    CHECK(s.size() == 4032);
    CHECK(std::abs(rms(s.samples) - 200.0) <= 0.05 * 200.0);
    CHECK(out_of_band_fraction(s, 0.25, 2.0) < 0.01);

    const SignalSeries slow = synth_regulation(96.0, 150.0, 3, 0.01, 0.1, 50.0);
    CHECK(out_of_band_fraction(slow, 0.01, 0.1) < 0.01);
    CHECK(synth_regulation(24.0, 150.0, 3, 0.25, 2.0, 1.0).samples == synth_regulation(24.0, 150.0, 3, 0.25, 2.0, 1.0).samples);
    CHECK_THROWS_AS(synth_regulation(24.0, 150.0, 3, 2.0, 1.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(synth_regulation(24.0, 150.0, 3, 0.25, 20.0, 1.0), ArgumentError);
}

TEST_CASE("low-pass filter: constant, zero and attenuated tone") {
    SignalSeries c;
    c.period_seconds = 150.0;
    c.samples.assign(500, 3.5);
    for (double x : lowpass(c, 0.5).samples) CHECK(x == doctest::Approx(3.5).epsilon(1e-12));
    c.samples.assign(500, 0.0);
    for (double x : lowpass(c, 0.5).samples) CHECK(x == 0.0);

    const SignalSeries t = tone(2.0, 48.0, 150.0);
    const SignalSeries f = lowpass(t, 0.5);
    std::vector<double> mid_in(t.samples.begin() + 300, t.samples.end() - 300);
    std::vector<double> mid_out(f.samples.begin() + 300, f.samples.end() - 300);
    CHECK(rms(mid_out) / rms(mid_in) < 0.5);
    CHECK(lowpass_gain(2.0, 0.5, 150.0) < 0.5);
    CHECK(lowpass_gain(0.0, 0.5, 150.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(lowpass(t, 0.0), ArgumentError);
}

TEST_CASE("low-pass filter obeys superposition") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    SignalSeries a, b, sum;
    a.period_seconds = b.period_seconds = sum.period_seconds = 150.0;
    for (int k = 0; k < 400; ++k) {
        a.samples.push_back(g(rng));
        b.samples.push_back(g(rng));
        sum.samples.push_back(2.0 * a.samples.back() - 0.5 * b.samples.back());
    }
    const SignalSeries fa = lowpass(a, 1.0), fb = lowpass(b, 1.0), fs = lowpass(sum, 1.0);
    for (std::size_t k = 0; k < 400; ++k) CHECK(fs.samples[k] == doctest::Approx(2.0 * fa.samples[k] - 0.5 * fb.samples[k]).epsilon(1e-10));
}

TEST_CASE("unit conversions: 500 MW is half of a million 1 kW pools") {
    SignalSeries mw;
    mw.samples = {500.0, 0.0, -123.456};
    mw.period_seconds = 150.0;
    const SignalSeries f = to_on_fraction(mw, 1000000, 1.0);
    CHECK(f.samples[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.samples[1] == 0.0);
    CHECK(f.units == SignalUnits::OnFraction);
    const SignalSeries back = to_mw(f, 1000000, 1.0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(back.samples[k] - mw.samples[k]) <= 1e-12 * std::max(1.0, std::abs(mw.samples[k])));
    CHECK_THROWS_AS(to_on_fraction(f, 1000000, 1.0), ArgumentError);
    CHECK_THROWS_AS(to_mw(mw, 1000000, 1.0), ArgumentError);
}

TEST_CASE("normalized RMS error") {
    CHECK(nrms({1.0, -1.0}, {1.0, -1.0}) == 0.0);
    CHECK(nrms({1.0, -1.0}, {0.9, -0.9}) == doctest::Approx(0.1));
    CHECK(nrms({5.0, 1.0, -1.0}, {0.0, 0.9, -0.9}, 1) == doctest::Approx(0.1));
    CHECK_THROWS_AS(nrms({0.0, 0.0}, {1.0, 1.0}), ArgumentError);
    CHECK_THROWS_AS(nrms({1.0}, {1.0, 1.0}), DimensionError);
    CHECK(to_string(SignalUnits::MW) == "MW");
}
