#pragma once

#include <optional>

#include "mfdr/load_model.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Solution of the tilted eigenproblem for one value of ζ.
struct SpectralDesign {
    double zeta = 0.0;
    double lambda = 1.0;
    double eta_star = 0.0;  // log λ
    Vector v;               // Perron vector, v(anchor) = 1
    Vector h_star;          // log v
    Matrix P_check;         // optimal randomized policy
    Vector pi_check;        // invariant law of P_check (empty if not requested)
    int iterations = 0;
    double residual = 0.0;  // ‖P̂v − λv‖∞ / ‖v‖∞
};

struct SolveOptions {
    double tolerance = 1e-13;
    int max_iterations = 100000;
    double zeta_guard = 40.0;
    bool compute_invariant = true;
    /// Positive starting vector, e.g. the Perron vector of a nearby ζ.
    std::optional<Vector> warm_start;
};

/// P̂_ζ(x, y) = exp(ζ U(x)) P₀(x, y)
Matrix tilt_matrix(const LoadModel& model, double zeta);

struct PerronPair {
    double lambda = 0.0;
    Vector v;
    int iterations = 0;
    double residual = 0.0;
};

/// Perron root and positive eigenvector of an irreducible nonnegative matrix,
/// normalized so v(anchor) = 1.
///
/// Shifted inverse iteration with the shift pinned to the upper
/// Collatz–Wielandt bound max_x (Mv)(x)/v(x) ≥ λ. For a shift above λ the
/// resolvent is a positive matrix, so iterates stay positive, and the bound
/// tightens every step. Stops when the relative gap between the lower and
/// upper bounds drops below `tolerance`.
/// Throws ConvergenceError on hitting `max_iterations`.
PerronPair perron_eigenpair(const Matrix& M, StateIndex anchor, const SolveOptions& options = {});

/// P̌(x, y) = P₀(x, y) v(y) / Σ_y' P₀(x, y') v(y'), i.e. P̂(x, y) v(y) / (λ v(x))
/// with the row normalization done explicitly.
Matrix twisted_matrix(const Matrix& P0, const Vector& v);

SpectralDesign solve(const LoadModel& model, double zeta, const SolveOptions& options = {});

/// Σ π̌ U
double steady_state_on_fraction(const SpectralDesign& design, const LoadModel& model);

}  // namespace mfdr
