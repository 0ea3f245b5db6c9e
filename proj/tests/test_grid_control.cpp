#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "mfdr/agent_sim.hpp"
#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"
#include "mfdr/grid_control.hpp"
#include "mfdr/lti_model.hpp"
#include "support.hpp"

using namespace mfdr;
using namespace mfdr::testing;

namespace {

constexpr double kGridPeriod = 150.0;  // 30 min / 12

SignalSeries on_fraction_series(std::vector<double> samples) {
    SignalSeries s;
    s.samples = std::move(samples);
    s.period_seconds = kGridPeriod;
    s.units = SignalUnits::OnFraction;
    return s;
}

/// Largest constant demand increase tracked within 5% NRMS, by bisection on the agent backend.
/// Largest amplitude of a zero-mean 20-hour sine tracked within 5% NRMS over four days (N = 2e4).
double sine_capacity(const LoadModel& model, const NominalStats& stats, std::optional<GuardBand> guard) {
    PolicyCache cache(model);
    std::vector<double> unit(4 * 576);
    for (std::size_t k = 0; k < unit.size(); ++k) unit[k] = std::sin(2.0 * std::numbers::pi * k * kGridPeriod / (20.0 * 3600.0));
    auto ok = [&](double amplitude) {
        std::vector<double> r = unit;
        for (double& x : r) x *= amplitude;
        AgentBackend backend(cache, init_population(model, 20000, 12, 5));
        if (guard) backend.population().set_guard(*guard);
        return tracking_nrms(run_closed_loop(backend, stats.eta0, fade_in(on_fraction_series(r), 48), {})) < 0.05;
    };
    double lo = 0.1, hi = 1.0 - stats.eta0;
    REQUIRE(ok(lo));
    while (hi - lo > 0.02) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

TEST_CASE("PI law: zero error gives zero command and unit errors give 24 then 28") {
    PiController ctrl;
    for (int t = 0; t < 10; ++t) CHECK(pi_step(ctrl, 0.3, 0.3) == 0.0);
    PiController c2;
    CHECK(pi_step(c2, 1.0, 0.0) == 24.0);
    CHECK(pi_step(c2, 1.0, 0.0) == 28.0);
    CHECK(c2.integrator == 2.0);
    CHECK(c2.zeta == 28.0);
}

TEST_CASE("truncation clamps to the envelope and converts megawatts") {
    const std::size_t n = 1000000;
    const CapacityEnvelope sym = CapacityEnvelope::from_mw(500.0, 500.0, n);
    CHECK(sym.plus_demand == doctest::Approx(0.5));
    CHECK(truncate_reference(0.6, sym) == doctest::Approx(0.5));
    CHECK(truncate_reference(0.2, sym) == 0.2);
    CHECK(truncate_reference(-0.7, sym) == doctest::Approx(-0.5));

    const CapacityEnvelope cleaning = CapacityEnvelope::from_mw(695.0, 305.0, n);
    CHECK(truncate_reference(0.7, cleaning) * 1000.0 == doctest::Approx(695.0));
    CHECK(truncate_reference(-0.4, cleaning) * 1000.0 == doctest::Approx(-305.0));
    CHECK(cleaning.plus_mw(n) == doctest::Approx(695.0));
    CHECK(cleaning.minus_mw(n) == doctest::Approx(305.0));
    CHECK_THROWS_AS(CapacityEnvelope::from_mw(1.0, 1.0, 0), ArgumentError);
}

TEST_CASE("PI loop around the linear plant removes a step error") {
    const LoadModel model = cleaning_pool();
    const NominalStats s = compute_stats(model);
    const LtiSystem sys = linearize(model, s);
    PiController ctrl;
    Vector x = Vector::Zero(96);
    double e = 1.0;
    for (int t = 0; t <= 5000; ++t) {
        const double y = sys.C.dot(x);
        e = 0.05 - y;
        const double zeta = pi_step(ctrl, 0.05, y);
        x = sys.A * x + sys.B * zeta;
    }
    CHECK(std::abs(e) < 1e-4);
}

TEST_CASE("zero reference keeps the population at its nominal level") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    const std::size_t n = 20000;
    auto backend = make_backend(model, s, cache, {BackendKind::Agent, 12, n, 3});
    const ClosedLoopTrace trace = run_closed_loop(*backend, s.eta0, on_fraction_series(std::vector<double>(1000, 0.0)), {});
    for (std::size_t k = 0; k < trace.size(); ++k) CHECK(std::abs(trace.output[k] - s.eta0) <= 5.0 / std::sqrt(double(n)));
    double worst = 0.0;
    for (double z : trace.zeta) worst = std::max(worst, std::abs(z));
    CHECK(worst < 1.0);
}

TEST_CASE("closed loop records a consistent trace and replays from its logged streams") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    std::vector<double> r(600);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = 0.2 * std::sin(2.0 * std::numbers::pi * k / 400.0);
    const CapacityEnvelope env{0.15, 0.1};
    auto backend = make_backend(model, s, cache, {BackendKind::MeanField, 12, 1, 1});
    ClosedLoopOptions options;
    options.record_classes = true;
    const ClosedLoopTrace trace = run_closed_loop(*backend, s.eta0, on_fraction_series(r), {}, env, options);
    CHECK(trace.size() == r.size());
    CHECK(trace.class_output.size() == r.size());
    PiController replay;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        CHECK(trace.truncated[k] == truncate_reference(trace.reference[k], env));
        CHECK(trace.error[k] == trace.truncated[k] - (trace.output[k] - s.eta0));
        CHECK(pi_step(replay, trace.truncated[k], trace.output[k] - s.eta0) == trace.zeta[k]);
    }
}

TEST_CASE("tilt is clamped at the guard while the integrator keeps accumulating") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    auto backend = make_backend(model, s, cache, {BackendKind::MeanField, 12, 1, 1});
    ClosedLoopOptions options;
    options.zeta_guard = 5.0;
    const ClosedLoopTrace trace = run_closed_loop(*backend, s.eta0, on_fraction_series(std::vector<double>(200, 0.49)), {}, std::nullopt, options);
    CHECK(trace.clamped_ticks > 0);
    for (double z : trace.zeta) CHECK(std::abs(z) <= 5.0);
    SignalSeries mw = on_fraction_series({0.1});
    mw.units = SignalUnits::MW;
    CHECK_THROWS_AS(run_closed_loop(*backend, s.eta0, mw, {}), ArgumentError);
}

TEST_CASE("ramps and fades are raised cosines") {
    const SignalSeries r = ramped_constant(0.3, 100, 10, kGridPeriod);
    CHECK(r.samples[0] == 0.0);
    CHECK(r.samples[5] == doctest::Approx(0.15));
    CHECK(r.samples[10] == 0.3);
    CHECK(r.samples[99] == 0.3);
    for (std::size_t k = 1; k < 10; ++k) CHECK(r.samples[k] > r.samples[k - 1]);
    CHECK(r.units == SignalUnits::OnFraction);
    const SignalSeries f = fade_in(on_fraction_series({-1.0, -1.0, -1.0, -1.0}), 2);
    CHECK(f.samples[0] == 0.0);
    CHECK(f.samples[1] == doctest::Approx(-0.5));
    CHECK(f.samples[2] == -1.0);
    CHECK(f.samples[3] == -1.0);
}

TEST_CASE("desk-scale tracking within the envelope") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    std::vector<double> r(576 * 2);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = 0.15 * std::sin(2.0 * std::numbers::pi * k * kGridPeriod / (20.0 * 3600.0));
    auto backend = make_backend(model, s, cache, {BackendKind::MeanField, 12, 1, 1});
    const ClosedLoopTrace trace = run_closed_loop(*backend, s.eta0, fade_in(on_fraction_series(r), 48), {});
    CHECK(tracking_nrms(trace) < 0.05);
}

TEST_CASE("capacity: symmetric model is symmetric, cleaning model favours demand, tighter tolerance shrinks") {
    CapacityOptions quick;
    quick.horizon_days = 1.0;
    quick.resolution = 1e-2;
    const LoadModel sym = symmetric_pool();
    const CapacityEnvelope a = estimate_capacity(sym, compute_stats(sym), quick);
    CHECK(std::abs(a.plus_demand - a.minus_supply) < 0.1 * a.plus_demand);
    CapacityOptions tight = quick;
    tight.tolerance = 0.035;
    const CapacityEnvelope b = estimate_capacity(sym, compute_stats(sym), tight);
    CHECK(b.plus_demand <= a.plus_demand);
    CHECK(b.minus_supply <= a.minus_supply);

    const LoadModel cleaning = cleaning_pool();
    const CapacityEnvelope c = estimate_capacity(cleaning, compute_stats(cleaning), quick);
    CHECK(c.plus_demand > c.minus_supply);
    quick.tolerance = 0.0;
    CHECK_THROWS_AS(estimate_capacity(sym, compute_stats(sym), quick), ConfigError);
}

TEST_CASE("a two-hour guard band around the 12-hour target costs little capacity") {
    // Judged on a three-day window: over a single day the nominal spread of on-hours already leaves the band.
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    const double free = sine_capacity(model, s, std::nullopt);
    const double guarded = sine_capacity(model, s, GuardBand{3, 11.0, 13.0});
    MESSAGE("sine capacity without guard " << free << ", with guard " << guarded);
    CHECK(guarded >= 0.8 * free);
}

TEST_CASE("windup analysis measures errors after each saturation episode") {
    ClosedLoopTrace t;
    t.reference = {0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0};
    t.error = {0.1, -0.1, 0.1, -0.1, 0.0, 0.0, 0.9, 0.3, 0.0};
    const WindupReport rep = analyze_windup(t, {0.2, 0.2}, 2);
    CHECK(rep.episodes == 1);
    CHECK(rep.first_episode == 4);
    CHECK(rep.baseline_rms == doctest::Approx(0.1));
    CHECK(rep.max_post_error == doctest::Approx(0.9));
    CHECK(rep.ratio == doctest::Approx(9.0));
    t.reference[0] = 0.5;
    CHECK_THROWS_AS(analyze_windup(t, {0.2, 0.2}), ArgumentError);
}

TEST_CASE("backend names parse and the trace CSV has the documented columns") {
    CHECK(parse_backend("agent") == BackendKind::Agent);
    CHECK(parse_backend("mean_field") == BackendKind::MeanField);
    CHECK(to_string(BackendKind::Agent) == "agent");
    CHECK_THROWS_AS(parse_backend("gpu"), ConfigError);

    ClosedLoopTrace t;
    t.y0 = 0.5;
    t.reference = t.truncated = {0.0, 0.1};
    t.zeta = {0.0, 2.0};
    t.output = {0.5, 0.55};
    t.error = {0.0, 0.05};
    const auto path = std::filesystem::temp_directory_path() / "mfdr_trace.csv";
    write_trace_csv(path, t, kGridPeriod);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::getline(in, row);
    CHECK(header == "t,time_seconds,r,r_truncated,zeta,y,e");
    CHECK(split_csv_line(row).size() == 7);
    CHECK(split_csv_line(row)[1] == "150");
}
