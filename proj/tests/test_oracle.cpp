#include <cmath>
#include <set>

#include "doctest.h"
#include "mfdr/errors.hpp"
#include "mfdr/oracle.hpp"
#include "mfdr/spectral_design.hpp"
#include "support.hpp"

using namespace mfdr;
using namespace mfdr::testing;

TEST_CASE("fixture set covers fast and slow mixing within the enumeration guard") {
    const std::vector<TinyChain> fixtures = fixture_set();
    CHECK(fixtures.size() == 4);
    for (const auto& f : fixtures) {
        for (StateIndex x0 = 0; x0 < f.model.size(); ++x0) {
            CHECK(support_path_count(f.model, 12, x0) <= kMaxEnumeratedPaths);
            CHECK(std::abs(enumerated_mass(f.model, 12, x0) - 1.0) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(enumerated_mass(symmetric_pool(), 40, 0), ArgumentError);
}

TEST_CASE("path log-MGF: zero tilt and the one-step coin") {
    for (const auto& f : fixture_set()) CHECK(std::abs(brute_lambda_T(f.model, 0.0, 6, 0)) <= 1e-12);
    for (double zeta : {-2.0, 0.7, 3.0})
        for (StateIndex x0 : {0, 1})
            CHECK(brute_lambda_T(coin(), zeta, 1, x0) == doctest::Approx(std::log((1.0 + std::exp(zeta)) / 2.0)).epsilon(1e-14));
}

TEST_CASE("finite-horizon log-MGF stays within one span of T times the optimal rate") {
    for (const auto& f : fixture_set())
        for (double zeta : {-2.0, 1.0, 2.0}) {
            const SpectralDesign d = solve(f.model, zeta);
            const double sp = d.h_star.maxCoeff() - d.h_star.minCoeff();
            for (int T : {4, 8, 12})
                for (StateIndex x0 = 0; x0 < f.model.size(); ++x0)
                    CHECK(std::abs(T * d.eta_star - brute_lambda_T(f.model, zeta, T, x0)) <= sp + 1e-12);
        }
}

TEST_CASE("twisted path law attains the log-MGF and beats the stationary policy by at most two spans") {
    for (const auto& f : fixture_set())
        for (double zeta : {-1.0, 2.0}) {
            const SpectralDesign d = solve(f.model, zeta);
            const double sp = d.h_star.maxCoeff() - d.h_star.minCoeff();
            for (int T : {4, 8}) {
                const double optimal = brute_welfare(f.model, zeta, T, 0, WelfarePolicy::Twisted);
                const double check = brute_welfare(f.model, zeta, T, 0, WelfarePolicy::Check);
                CHECK(std::abs(optimal - brute_lambda_T(f.model, zeta, T, 0)) <= 1e-10);
                CHECK(optimal - check >= -1e-12);
                CHECK(optimal - check <= 2.0 * sp);
            }
        }
}

TEST_CASE("zero tilt: both welfares vanish") {
    for (const auto& f : fixture_set()) {
        CHECK(std::abs(brute_welfare(f.model, 0.0, 6, 0, WelfarePolicy::Twisted)) <= 1e-12);
        CHECK(std::abs(brute_welfare(f.model, 0.0, 6, 0, WelfarePolicy::Check)) <= 1e-12);
    }
}

TEST_CASE("regenerative Monte Carlo: zero tilt is exact") {
    const RegenerativeEstimate e = mc_regenerative(symmetric_pool(), 0.0, 20000, 3);
    CHECK(e.eta_hat == 0.0);
    for (Eigen::Index x = 0; x < e.v_hat.size(); ++x)
        if (e.v_visits[static_cast<std::size_t>(x)] > 0) CHECK(std::abs(e.v_hat(x) - 1.0) <= 3.0 * e.v_se(x) + 1e-12);
    CHECK(e.cycles == 20000);
    CHECK_THROWS_AS(mc_regenerative(symmetric_pool(), 0.0, 100, 3), ArgumentError);
}

TEST_CASE("regenerative Monte Carlo agrees with the spectral rate and the asymptotic variance") {
    const LoadModel model = symmetric_pool();
    const RegenerativeEstimate e = mc_regenerative(model, 1.0, 200000, 11);
    CHECK(std::abs(e.eta_hat - solve(model, 1.0).eta_star) <= 3.0 * e.eta_se);

    for (const LoadModel& m : {symmetric_pool(), cleaning_pool()}) {
        const RegenerativeEstimate z = mc_regenerative(m, 0.0, 1000000, 5);
        const NominalStats s = compute_stats(m);
        CHECK(std::abs(z.kappa2_hat - s.kappa2) <= 3.0 * z.kappa2_se);
        CHECK(std::abs(z.eta0_hat - s.eta0) <= 0.01);
    }
}

TEST_CASE("oracle suite passes, rejects an empty fixture list and reports every check family") {
    OracleSuiteOptions options;
    const std::vector<OracleCheck> checks = run_oracle_suite(fixture_set(), options);
    std::set<std::string> families;
    for (const auto& c : checks) {
        CHECK_MESSAGE(c.pass, c.fixture << " " << c.quantity << " zeta=" << c.zeta << " T=" << c.horizon);
        families.insert(c.quantity);
    }
    for (const char* q : {"path_mass_error", "optimal_welfare_minus_log_mgf", "welfare_gap_max_vs_twice_span",
                          "welfare_gap_min_nonnegative", "horizon_gap_vs_span", "mc_eta_star", "mc_v_max_standard_score",
                          "mc_kappa2"})
        CHECK(families.count(q) == 1);
    CHECK_THROWS(run_oracle_suite({}, options));
}
