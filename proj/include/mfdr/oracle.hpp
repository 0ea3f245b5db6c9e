#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfdr/load_model.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Small chain whose path space can be enumerated exhaustively.
struct TinyChain {
    std::string name;
    LoadModel model;
};

/// Support paths of length T beyond which enumeration is refused.
inline constexpr double kMaxEnumeratedPaths = 2.2e6;

/// 2-state i.i.d., 2-state sticky (a = b = 0.1), 3-state ring with 0.05 holding,
/// and the pool model with 4 bins (d = 8).
std::vector<TinyChain> fixture_set();

/// Number of positive-probability paths of length T from x0.
double support_path_count(const LoadModel& model, int T, StateIndex x0);

/// Σ_paths p₀(path), which must be 1.
double enumerated_mass(const LoadModel& model, int T, StateIndex x0);

/// log E_{x0}[exp(ζ Σ_{t=1}^T U(X_t))] by exhaustive enumeration.
double brute_lambda_T(const LoadModel& model, double zeta, int T, StateIndex x0);

enum class WelfarePolicy { Twisted, Check };

/// ζ E_p[Σ U] − D(p ‖ p₀) over paths of length T from x0, with p the twisted
/// path law or the path law of P̌_ζ.
double brute_welfare(const LoadModel& model, double zeta, int T, StateIndex x0, WelfarePolicy policy);

struct RegenerativeEstimate {
    double eta_hat = 0.0;
    double eta_se = 0.0;
    Vector v_hat;
    Vector v_se;                  // zero where a state was never visited
    std::vector<std::size_t> v_visits;
    double kappa2_hat = 0.0;
    double kappa2_se = 0.0;
    double eta0_hat = 0.0;
    std::size_t cycles = 0;
};

/// Regeneration cycles from the anchor under P₀: η̂ solves the empirical
/// 1 = E[exp(Σ (ζU − η))] by bisection, v̂ averages the same exponential from
/// the first visit of each state to the end of its cycle, and
/// κ̂² = Σ_c (S_c − η̂₀ τ_c)² / Σ_c τ_c.
RegenerativeEstimate mc_regenerative(const LoadModel& model, double zeta, std::size_t n_cycles, std::uint64_t seed);

struct OracleCheck {
    std::string fixture;
    double zeta = 0.0;
    int horizon = 0;
    std::string quantity;
    double pipeline = 0.0;
    double oracle = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct OracleSuiteOptions {
    std::vector<double> zetas{-2.0, -1.0, 1.0, 2.0};
    std::vector<int> horizons{4, 8, 12};
    bool include_monte_carlo = true;
    std::size_t mc_cycles = 100000;
    std::uint64_t seed = 7;
};

/// Every exhaustive check over every fixture, ζ, horizon and starting state
/// (worst case over starting states per row), plus the Monte-Carlo checks on the
/// symmetric pool model. Throws ArgumentError on an empty fixture list.
std::vector<OracleCheck> run_oracle_suite(const std::vector<TinyChain>& fixtures, const OracleSuiteOptions& options = {});

void write_oracle_report(const std::filesystem::path& path, const std::vector<OracleCheck>& checks);

}  // namespace mfdr
