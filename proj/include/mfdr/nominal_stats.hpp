#pragma once

#include "mfdr/load_model.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Invariant measure and potential matrix Z = (I - P̄)^{-1}, where P̄ is P with
/// the anchor row removed (minorization s = 1{anchor}, ν = P(anchor, ·)).
struct PotentialSolution {
    Vector pi;
    Matrix Z;
};

PotentialSolution potential_solve(const Matrix& P, StateIndex anchor);

/// Solution g of g - Pg = f normalized so g(anchor) = 0.
/// Throws ArgumentError if f is not centered under the invariant measure.
Vector poisson_solve(const Matrix& P, const Vector& f, StateIndex anchor);
Vector poisson_solve(const PotentialSolution& potential, const Vector& f, StateIndex anchor);

/// One-step conditional variance Pg² - (Pg)², clamped at zero against round-off.
Vector one_step_variance(const Matrix& P, const Vector& g);

/// Σ π (2 ũ g - ũ²), the asymptotic variance of ũ given a Poisson solution g.
double asymptotic_variance(const Vector& pi, const Vector& centered_utility, const Vector& g);

/// Statistics of the nominal chain used by every small-ζ approximation.
struct NominalStats {
    Vector pi0;
    double eta0 = 0.0;
    Vector H;  // Poisson solution for ũ = U - η₀, H(anchor) = 0
    double kappa2 = 0.0;
    Vector S;  // second-order term, S(anchor) = 0
    Matrix Z;
    StateIndex anchor = 0;

    Vector centered_utility(const LoadModel& model) const;
};

NominalStats compute_stats(const LoadModel& model);

/// η₀ζ + ½κ²ζ²
double taylor_eta(const NominalStats& stats, double zeta);
/// ζH + ½ζ²S
Vector taylor_h(const NominalStats& stats, double zeta);
/// η₀ + κ²ζ clamped to [0, 1].
double taylor_on_fraction(const NominalStats& stats, double zeta);
/// Inverse of the affine on-fraction approximation: (target - η₀)/κ².
double zeta_star_for(const NominalStats& stats, double target_on_fraction);

/// Diagnostic for the derivative Poisson equations at general ζ:
///   U + P̌ h' = h' + Λ'      and      V(h') + P̌ h'' = h'' + Λ''
/// with h', h'', Λ', Λ'' taken from central finite differences of the spectral
/// solution. Residuals are ∞-norms of the two equations.
struct DerivativeDiagnostic {
    double zeta = 0.0;
    Vector h_first;
    Vector h_second;
    double lambda_first = 0.0;
    double lambda_second = 0.0;
    double first_residual = 0.0;
    double second_residual = 0.0;
};

DerivativeDiagnostic derivative_poisson_check(const LoadModel& model, double zeta, double step = 1e-3);

}  // namespace mfdr
