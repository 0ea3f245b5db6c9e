#include <cmath>

#include "doctest.h"
#include "mfdr/errors.hpp"
#include "mfdr/lti_model.hpp"
#include "mfdr/mean_field.hpp"
#include "mfdr/policy_cache.hpp"
#include "mfdr/spectral_design.hpp"
#include "support.hpp"

using namespace mfdr;
using namespace mfdr::testing;

TEST_CASE("policy sampling inverts the row CDF") {
    const LoadModel c = coin();
    const auto policy = make_policy(c.transition(), Vector::Ones(2), 0.0);
    CHECK(policy->sample(0, 0.25) == 0);
    CHECK(policy->sample(0, 0.75) == 1);
    CHECK(policy->sample(1, 0.999999) == 1);
    CHECK(policy->cdf.back() == 1.0);
    CHECK(policy->row_start.size() == 3);
}

TEST_CASE("policy of a single row keeps every positive column") {
    Matrix row(1, 4);
    row << 0.1, 0.0, 0.6, 0.3;
    const auto policy = make_policy(row, Vector::Ones(4), 0.0);
    CHECK(policy->column == std::vector<std::uint32_t>{0, 2, 3});
    CHECK(policy->sample(0, 0.05) == 0);
    CHECK(policy->sample(0, 0.5) == 2);
    CHECK(policy->sample(0, 0.95) == 3);
}

TEST_CASE("policy cache quantizes, counts hits and evicts the least recently used entry") {
    const LoadModel model = symmetric_pool();
    PolicyCache cache(model, 2);
    const auto a = cache.get(0.5);
    CHECK(cache.get(0.5 + 4e-7) == a);  // same quantum
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(a->zeta == doctest::Approx(0.5).epsilon(1e-15));
    cache.get(1.0);
    cache.get(0.5);  // refresh 0.5
    cache.get(2.0);  // evicts 1.0
    CHECK(cache.size() == 2);
    const std::size_t misses = cache.misses();
    cache.get(0.5);
    CHECK(cache.misses() == misses);
    cache.get(1.0);
    CHECK(cache.misses() == misses + 1);
    CHECK_THROWS_AS(cache.get(NAN), ArgumentError);
    CHECK_THROWS_AS(PolicyCache(model, 0), ArgumentError);
}

TEST_CASE("cached policy equals a fresh solve") {
    const LoadModel model = cleaning_pool();
    PolicyCache cache(model);
    cache.get(0.3);
    const auto p = cache.get(-1.25);  // warm-started from 0.3
    CHECK((p->P_check - solve(model, -1.25).P_check).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("nominal invariant law is a fixed point") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    const MeanFieldState next = step(MeanFieldState{s.pi0, 0}, cache, 0.0);
    CHECK((next.mu - s.pi0).cwiseAbs().sum() <= 1e-14);
    CHECK(next.t == 1);
    CHECK(output(MeanFieldState{s.pi0, 0}, model) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("one step from the first off bin reads off the nominal row") {
    const LoadModel model = symmetric_pool();
    PolicyCache cache(model);
    Vector mu = Vector::Zero(96);
    mu(static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::Off, 1, 48))) = 1.0;
    const MeanFieldState next = step(MeanFieldState{mu, 0}, cache, 0.0);
    const double p1 = model.curve()->switch_on_probability(1);
    const auto on1 = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::On, 1, 48));
    const auto off2 = static_cast<Eigen::Index>(LoadModel::pool_index(PumpMode::Off, 2, 48));
    CHECK(next.mu(on1) == doctest::Approx(p1).epsilon(1e-14));
    CHECK(next.mu(off2) == doctest::Approx(1.0 - p1).epsilon(1e-14));
    CHECK(next.mu(on1) + next.mu(off2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("output is one on the on-states and the steady on-fraction at the twisted law") {
    const LoadModel model = cleaning_pool();
    Vector on = model.utility() / model.utility().sum();
    CHECK(output(MeanFieldState{on, 0}, model) == doctest::Approx(1.0).epsilon(1e-14));
    const SpectralDesign d = solve(model, 0.7);
    CHECK(output(MeanFieldState{d.pi_check, 0}, model) == doctest::Approx(steady_state_on_fraction(d, model)).epsilon(1e-14));
}

TEST_CASE("constant tilt drives the distribution to the twisted invariant law and keeps it on the simplex") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    MeanFieldState state{s.pi0, 0};
    for (int t = 0; t < 2000; ++t) {
        state = step(state, cache, 1.0);
        CHECK_NOTHROW(validate_distribution(state.mu, 96));
    }
    CHECK((state.mu - solve(model, 1.0).pi_check).cwiseAbs().sum() < 1e-8);
}

TEST_CASE("small tilt impulse follows the linear impulse response") {
    // Relative error is second order in the impulse height: the skewed cleaning model needs a smaller one.
    auto relative_error = [](const LoadModel& model, double height) {
        const NominalStats s = compute_stats(model);
        const std::vector<double> h = impulse_response(linearize(model, s), 200);
        PolicyCache cache(model);
        MeanFieldState state{s.pi0, 0};
        double num = 0.0, den = 0.0;
        for (std::size_t t = 1; t <= 200; ++t) {
            state = step(state, cache, t == 1 ? height : 0.0);
            const double predicted = height * h[t - 1];
            num += std::pow(output(state, model) - s.eta0 - predicted, 2);
            den += predicted * predicted;
        }
        return std::sqrt(num / den);
    };
    CHECK(relative_error(symmetric_pool(), 0.1) < 0.02);
    const double big = relative_error(cleaning_pool(), 0.1), small = relative_error(cleaning_pool(), 0.01);
    CHECK(small < 0.02);
    CHECK(small / big == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("classed field advances one class per tick") {
    const LoadModel model = symmetric_pool();
    const NominalStats s = compute_stats(model);
    PolicyCache cache(model);
    ClassedMeanField field(model, 3, s.pi0);
    field.tick(cache, 2.0);
    CHECK(field.time() == 1);
    CHECK(field.class_output(0) != doctest::Approx(s.eta0));
    CHECK(field.class_output(1) == doctest::Approx(s.eta0).epsilon(1e-13));
    CHECK(field.class_output(2) == doctest::Approx(s.eta0).epsilon(1e-13));
    CHECK(field.output() == doctest::Approx((field.class_output(0) + 2.0 * s.eta0) / 3.0).epsilon(1e-14));
    CHECK(field.distribution().sum() == doctest::Approx(1.0).epsilon(1e-14));

    ClassedMeanField single(model, 1, s.pi0);
    MeanFieldState plain{s.pi0, 0};
    for (int t = 0; t < 5; ++t) {
        single.tick(cache, 0.4);
        plain = step(plain, cache, 0.4);
    }
    CHECK((single.distribution() - plain.mu).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(ClassedMeanField(model, 0, s.pi0), ArgumentError);
    CHECK_THROWS_AS(ClassedMeanField(model, 2, Vector::Ones(96)), ArgumentError);
}
