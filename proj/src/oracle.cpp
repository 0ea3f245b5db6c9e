#include "mfdr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"
#include "mfdr/nominal_stats.hpp"
#include "mfdr/policy_cache.hpp"
#include "mfdr/spectral_design.hpp"

namespace mfdr {

namespace {

/// Calls visit(log p₀(path), Σ U, log q(path)) for every support path of length T.
void enumerate_paths(const LoadModel& model, int T, StateIndex x0, const Matrix* Q,
                     const std::function<void(double, double, double)>& visit) {
    if (T < 1) throw ArgumentError("enumeration horizon must be at least 1");
    if (x0 >= model.size()) throw ArgumentError("enumeration start state out of range");
    const double count = support_path_count(model, T, x0);
    if (count > kMaxEnumeratedPaths)
        throw ArgumentError("enumeration refused: " + std::to_string(count) + " support paths exceed the guard");
    const Matrix& P = model.transition();
    const Vector& U = model.utility();
    const auto d = P.rows();

    std::function<void(Eigen::Index, int, double, double, double)> walk = [&](Eigen::Index x, int depth, double logp,
                                                                             double sum, double logq) {
        if (depth == T) {
            visit(logp, sum, logq);
            return;
        }
        for (Eigen::Index y = 0; y < d; ++y) {
            const double p = P(x, y);
            if (p <= 0.0) continue;
            walk(y, depth + 1, logp + std::log(p), sum + U(y), Q ? logq + std::log((*Q)(x, y)) : 0.0);
        }
    };
    walk(static_cast<Eigen::Index>(x0), 0, 0.0, 0.0, 0.0);
}

LoadModel two_state(double stay0, double stay1) {
    Matrix P(2, 2);
    P << stay0, 1.0 - stay0, 1.0 - stay1, stay1;
    Vector U(2);
    U << 0.0, 1.0;
    return build_custom_model(P, U, 0, 30.0);
}

double span(const Vector& h) { return h.maxCoeff() - h.minCoeff(); }

}  // namespace

std::vector<TinyChain> fixture_set() {
    std::vector<TinyChain> out;
    out.push_back({"iid2", two_state(0.5, 0.5)});
    out.push_back({"sticky2", two_state(0.9, 0.9)});
    {
        const double eps = 0.05;
        Matrix P(3, 3);
        P << eps, 1 - eps, 0, 0, eps, 1 - eps, 1 - eps, 0, eps;
        Vector U(3);
        U << 0.0, 0.5, 1.0;
        out.push_back({"ring3", build_custom_model(P, U, 0, 30.0)});
    }
    SwitchingCurve curve;
    curve.bins = 4;
    out.push_back({"minipool8", build_pool_model(curve)});
    return out;
}

double support_path_count(const LoadModel& model, int T, StateIndex x0) {
    const Matrix& P = model.transition();
    Vector count = Vector::Ones(P.rows());
    const Matrix adjacency = (P.array() > 0.0).cast<double>().matrix();
    for (int t = 0; t < T; ++t) count = adjacency * count;
    return count(static_cast<Eigen::Index>(x0));
}

double enumerated_mass(const LoadModel& model, int T, StateIndex x0) {
    double mass = 0.0;
    enumerate_paths(model, T, x0, nullptr, [&](double logp, double, double) { mass += std::exp(logp); });
    return mass;
}

double brute_lambda_T(const LoadModel& model, double zeta, int T, StateIndex x0) {
    std::vector<double> terms;
    enumerate_paths(model, T, x0, nullptr, [&](double logp, double sum, double) { terms.push_back(logp + zeta * sum); });
    const double peak = *std::max_element(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += std::exp(t - peak);
    return peak + std::log(total);
}

double brute_welfare(const LoadModel& model, double zeta, int T, StateIndex x0, WelfarePolicy policy) {
    if (policy == WelfarePolicy::Twisted) {
        const double lambda_T = brute_lambda_T(model, zeta, T, x0);
        double welfare = 0.0;
        enumerate_paths(model, T, x0, nullptr, [&](double logp, double sum, double) {
            const double log_star = logp + zeta * sum - lambda_T;
            welfare += std::exp(log_star) * (zeta * sum - (log_star - logp));
        });
        return welfare;
    }
    SolveOptions options;
    options.compute_invariant = false;
    const SpectralDesign design = solve(model, zeta, options);
    double welfare = 0.0;
    enumerate_paths(model, T, x0, &design.P_check, [&](double logp, double sum, double logq) {
        welfare += std::exp(logq) * (zeta * sum - (logq - logp));
    });
    return welfare;
}

RegenerativeEstimate mc_regenerative(const LoadModel& model, double zeta, std::size_t n_cycles, std::uint64_t seed) {
    if (n_cycles < 10000) throw ArgumentError("mc_regenerative: at least 10^4 cycles are required");
    const auto d = static_cast<std::size_t>(model.size());
    const Vector& U = model.utility();
    const StateIndex anchor = model.anchor();
    const auto nominal = make_policy(model.transition(), Vector::Ones(static_cast<Eigen::Index>(d)), 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // Store the cycles: per cycle the visited states in order.
    std::vector<std::uint32_t> offsets{0};
    std::vector<std::uint16_t> states;
    std::vector<double> sums, lengths;
    sums.reserve(n_cycles);
    lengths.reserve(n_cycles);
    for (std::size_t c = 0; c < n_cycles; ++c) {
        StateIndex x = anchor;
        double s = 0.0;
        std::size_t tau = 0;
        do {
            states.push_back(static_cast<std::uint16_t>(x));
            s += U(static_cast<Eigen::Index>(x));
            ++tau;
            x = nominal->sample(x, uniform(rng));
        } while (x != anchor);
        offsets.push_back(static_cast<std::uint32_t>(states.size()));
        sums.push_back(s);
        lengths.push_back(static_cast<double>(tau));
    }
    const auto n = static_cast<double>(n_cycles);

    RegenerativeEstimate est;
    est.cycles = n_cycles;

    // η̂: mean_c exp(ζ S_c − η τ_c) = 1, decreasing in η.
    auto excess = [&](double eta) {
        double total = 0.0;
        for (std::size_t c = 0; c < n_cycles; ++c) total += std::exp(zeta * sums[c] - eta * lengths[c]);
        return total / n - 1.0;
    };
    double lo = zeta * U.minCoeff(), hi = zeta * U.maxCoeff();
    if (lo > hi) std::swap(lo, hi);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    est.eta_hat = 0.5 * (lo + hi);
    {
        double mean_g = 0.0, mean_g2 = 0.0, mean_tg = 0.0;
        for (std::size_t c = 0; c < n_cycles; ++c) {
            const double g = std::exp(zeta * sums[c] - est.eta_hat * lengths[c]);
            mean_g += g / n;
            mean_g2 += g * g / n;
            mean_tg += lengths[c] * g / n;
        }
        const double var_g = std::max(0.0, mean_g2 - mean_g * mean_g) * n / (n - 1.0);
        est.eta_se = std::sqrt(var_g / n) / mean_tg;
    }

    // v̂(x): exp(Σ_{t ≥ first visit}(ζU − η̂)) to the end of the cycle.
    Vector v_sum = Vector::Zero(static_cast<Eigen::Index>(d)), v_sq = v_sum;
    est.v_visits.assign(d, 0);
    std::vector<long> seen(d, -1);
    std::vector<double> suffix;
    for (std::size_t c = 0; c < n_cycles; ++c) {
        const std::size_t begin = offsets[c], end = offsets[c + 1];
        suffix.assign(end - begin + 1, 0.0);
        for (std::size_t j = end; j-- > begin;)
            suffix[j - begin] = suffix[j - begin + 1] + zeta * U(states[j]) - est.eta_hat;
        for (std::size_t j = begin; j < end; ++j) {
            const std::size_t x = states[j];
            if (seen[x] == static_cast<long>(c)) continue;
            seen[x] = static_cast<long>(c);
            const double g = std::exp(suffix[j - begin]);
            v_sum(static_cast<Eigen::Index>(x)) += g;
            v_sq(static_cast<Eigen::Index>(x)) += g * g;
            ++est.v_visits[x];
        }
    }
    est.v_hat = Vector::Zero(static_cast<Eigen::Index>(d));
    est.v_se = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t x = 0; x < d; ++x) {
        const auto k = static_cast<double>(est.v_visits[x]);
        const auto i = static_cast<Eigen::Index>(x);
        if (k < 1) continue;
        est.v_hat(i) = v_sum(i) / k;
        if (k > 1) est.v_se(i) = std::sqrt(std::max(0.0, v_sq(i) / k - est.v_hat(i) * est.v_hat(i)) / (k - 1.0));
    }
    // Every cycle starts at the anchor, so its sample is exp(ζS_c − η̂τ_c) with mean 1 at η̂.
    est.v_hat(static_cast<Eigen::Index>(anchor)) = 1.0;
    est.v_se(static_cast<Eigen::Index>(anchor)) = 0.0;

    // κ̂² = Σ(S_c − η̂₀ τ_c)² / Σ τ_c
    double total_s = 0.0, total_tau = 0.0;
    for (std::size_t c = 0; c < n_cycles; ++c) {
        total_s += sums[c];
        total_tau += lengths[c];
    }
    est.eta0_hat = total_s / total_tau;
    double total_a = 0.0;
    for (std::size_t c = 0; c < n_cycles; ++c) total_a += std::pow(sums[c] - est.eta0_hat * lengths[c], 2);
    est.kappa2_hat = total_a / total_tau;
    {
        const double mean_tau = total_tau / n;
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t c = 0; c < n_cycles; ++c) {
            const double r = std::pow(sums[c] - est.eta0_hat * lengths[c], 2) - est.kappa2_hat * lengths[c];
            m1 += r / n;
            m2 += r * r / n;
        }
        est.kappa2_se = std::sqrt(std::max(0.0, m2 - m1 * m1) / (n - 1.0)) / mean_tau;
    }
    return est;
}

std::vector<OracleCheck> run_oracle_suite(const std::vector<TinyChain>& fixtures, const OracleSuiteOptions& options) {
    if (fixtures.empty()) throw ArgumentError("oracle suite: fixture list is empty");
    std::vector<OracleCheck> checks;
    auto add = [&](const std::string& fixture, double zeta, int T, const std::string& quantity, double pipeline,
                   double oracle, double tolerance, bool pass) {
        checks.push_back({fixture, zeta, T, quantity, pipeline, oracle, tolerance, pass});
    };

    for (const auto& chain : fixtures) {
        const auto d = chain.model.size();
        for (int T : options.horizons) {
            double worst = 0.0;
            for (StateIndex x0 = 0; x0 < d; ++x0) worst = std::max(worst, std::abs(enumerated_mass(chain.model, T, x0) - 1.0));
            add(chain.name, 0.0, T, "path_mass_error", 0.0, worst, 1e-12, worst <= 1e-12);
        }
        for (double zeta : options.zetas) {
            SolveOptions solve_options;
            solve_options.compute_invariant = false;
            const SpectralDesign design = solve(chain.model, zeta, solve_options);
            const double sp = span(design.h_star);
            for (int T : options.horizons) {
                double optimality = 0.0, gap_max = -INFINITY, gap_min = INFINITY, horizon = 0.0;
                for (StateIndex x0 = 0; x0 < d; ++x0) {
                    const double lambda_T = brute_lambda_T(chain.model, zeta, T, x0);
                    const double w_star = brute_welfare(chain.model, zeta, T, x0, WelfarePolicy::Twisted);
                    const double w_check = brute_welfare(chain.model, zeta, T, x0, WelfarePolicy::Check);
                    optimality = std::max(optimality, std::abs(w_star - lambda_T));
                    gap_max = std::max(gap_max, w_star - w_check);
                    gap_min = std::min(gap_min, w_star - w_check);
                    horizon = std::max(horizon, std::abs(T * design.eta_star - w_star));
                }
                add(chain.name, zeta, T, "optimal_welfare_minus_log_mgf", 0.0, optimality, 1e-10, optimality <= 1e-10);
                add(chain.name, zeta, T, "welfare_gap_max_vs_twice_span", 2.0 * sp, gap_max, 2.0 * sp, gap_max <= 2.0 * sp);
                add(chain.name, zeta, T, "welfare_gap_min_nonnegative", 0.0, gap_min, 1e-12, gap_min >= -1e-12);
                add(chain.name, zeta, T, "horizon_gap_vs_span", sp, horizon, sp, horizon <= sp);
            }
        }
    }

    if (options.include_monte_carlo) {
        const LoadModel pool = build_pool_model(SwitchingCurve{});
        const NominalStats stats = compute_stats(pool);
        for (double zeta : {0.0, 1.0}) {
            const RegenerativeEstimate est = mc_regenerative(pool, zeta, options.mc_cycles, options.seed);
            SolveOptions solve_options;
            solve_options.compute_invariant = false;
            const SpectralDesign design = solve(pool, zeta, solve_options);
            const double eta_tol = 3.0 * est.eta_se + 1e-12;
            add("pool96", zeta, 0, "mc_eta_star", design.eta_star, est.eta_hat, eta_tol,
                std::abs(design.eta_star - est.eta_hat) <= eta_tol);
            double worst_z = 0.0;
            for (Eigen::Index x = 0; x < design.v.size(); ++x) {
                if (est.v_visits[static_cast<std::size_t>(x)] < 1000) continue;
                const double dev = std::abs(est.v_hat(x) - design.v(x));
                worst_z = std::max(worst_z, est.v_se(x) > 0.0 ? dev / est.v_se(x) : (dev > 1e-12 ? INFINITY : 0.0));
            }
            // Max over ~100 states: 4 standard errors keeps the family-wise error near 1%.
            add("pool96", zeta, 0, "mc_v_max_standard_score", 0.0, worst_z, 4.0, worst_z <= 4.0);
            if (zeta == 0.0) {
                const double tol = 3.0 * est.kappa2_se;
                add("pool96", 0.0, 0, "mc_kappa2", stats.kappa2, est.kappa2_hat, tol,
                    std::abs(stats.kappa2 - est.kappa2_hat) <= tol);
            }
        }
    }
    return checks;
}

void write_oracle_report(const std::filesystem::path& path, const std::vector<OracleCheck>& checks) {
    CsvWriter out(path, {"fixture", "zeta", "horizon", "quantity", "pipeline", "oracle", "tolerance", "pass"});
    for (const auto& c : checks) {
        out.cell(c.fixture)
            .cell(c.zeta)
            .cell(static_cast<long long>(c.horizon))
            .cell(c.quantity)
            .cell(c.pipeline)
            .cell(c.oracle)
            .cell(c.tolerance)
            .cell(std::string(c.pass ? "true" : "false"));
        out.end_row();
    }
}

}  // namespace mfdr
