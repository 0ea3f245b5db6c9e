#pragma once

#include <string>
#include <vector>

#include "mfdr/load_model.hpp"
#include "mfdr/nominal_stats.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Linearization of the mean-field dynamics about π₀:
///   Φ_{t+1} = A Φ_t + B ζ_t,   γ_t = C Φ_t
struct LtiSystem {
    Matrix A;  // P₀ᵀ
    Vector B;  // B_j = Σ_x π₀(x) E(x, j)
    Vector C;  // C_i = U(x^i)
    Matrix E;  // dP̌/dζ at ζ = 0
    double y0 = 0.0;
    Vector pi0;

    std::size_t order() const { return static_cast<std::size_t>(A.rows()); }
};

LtiSystem linearize(const LoadModel& model, const NominalStats& stats);

/// C (zI − A)⁻¹ B by a linear solve.
///
/// When ΣB = 0 the Perron mode at z = 1 is uncontrollable; the solve then uses
/// A − π₀ᵀ1ᵀ, which has the same response on the zero-sum subspace and keeps
/// z = 1 (the DC gain) evaluable. Throws PoleProximityError near a pole.
Complex transfer_value(const LtiSystem& sys, Complex z);

struct ZeroPoleReport {
    std::vector<Complex> zeros;          // zeros not canceled by a pole
    std::vector<Complex> poles;          // poles with non-negligible residue
    std::vector<Complex> canceled;       // poles removed as uncontrollable/unobservable
    std::vector<Complex> all_zeros;      // every finite zero of the system pencil
    std::vector<Complex> all_poles;      // every eigenvalue of A
    std::vector<double> pole_residues;   // |residue| per entry of all_poles
    double perron_residue = 0.0;         // |residue| of the pole nearest z = 1
    bool minimum_phase = false;
    std::vector<std::string> warnings;
};

/// Zeros from the generalized eigenproblem of the pencil [[A, B], [C, 0]] − z[[I, 0], [0, 0]];
/// poles from eig(A). A pole is canceled when its residue (C r)(l B)/(l r) is
/// below `residue_tolerance`; each canceled pole removes the nearest zero
/// within `pairing_tolerance`.
ZeroPoleReport zeros_poles(const LtiSystem& sys, double residue_tolerance = 1e-10,
                           double pairing_tolerance = 1e-8);

struct SupersampleFilter {
    int m = 1;
    double base_period_minutes = 30.0;

    double grid_period_minutes() const { return base_period_minutes / m; }
};

/// L(z) = (1/m) Σ_{i=1}^m z^{−i}
Complex supersample_lowpass(int m, Complex z);

/// z^m H₀(z^m) L(z), in the grid-level time scale.
Complex supersampled_transfer(const LtiSystem& sys, const SupersampleFilter& filter, Complex z);

struct BodePoint {
    double omega;
    double magnitude_db;
    double phase_deg;
};

/// Log-spaced frequency response on [w_min, w_max] (radians per sample).
/// With a filter (m > 1) the supersampled response is evaluated.
std::vector<BodePoint> bode(const LtiSystem& sys, std::size_t points = 400, double w_min = 1e-3,
                            double w_max = 3.141592653589793, const SupersampleFilter* filter = nullptr);

/// h_k = C A^k B for k = 0..steps-1 (response at time k+1 to a unit impulse at 0).
std::vector<double> impulse_response(const LtiSystem& sys, std::size_t steps);

}  // namespace mfdr
