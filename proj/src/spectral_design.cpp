#include "mfdr/spectral_design.hpp"

#include <cmath>
#include <limits>

#include "mfdr/errors.hpp"
#include "mfdr/nominal_stats.hpp"

namespace mfdr {

namespace {

constexpr double kResidualTolerance = 1e-10;

struct Bounds {
    double lower;
    double upper;
};

Bounds collatz_wielandt(const Matrix& M, const Vector& v) {
    const Vector Mv = M * v;
    Bounds b{std::numeric_limits<double>::infinity(), 0.0};
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double r = Mv(i) / v(i);
        b.lower = std::min(b.lower, r);
        b.upper = std::max(b.upper, r);
    }
    return b;
}

}  // namespace

Matrix tilt_matrix(const LoadModel& model, double zeta) {
    const Vector scale = (zeta * model.utility().array()).exp().matrix();
    return scale.asDiagonal() * model.transition();
}

PerronPair perron_eigenpair(const Matrix& M, StateIndex anchor, const SolveOptions& options) {
    const auto n = M.rows();
    const auto a = static_cast<Eigen::Index>(anchor);
    Vector v = Vector::Ones(n);
    if (options.warm_start && options.warm_start->size() == n && (options.warm_start->array() > 0.0).all())
        v = *options.warm_start;
    v /= v(a);

    const Matrix identity = Matrix::Identity(n, n);
    Bounds b = collatz_wielandt(M, v);
    PerronPair out;
    for (int it = 1; it <= options.max_iterations; ++it) {
        if (!(b.upper > 0.0) || !std::isfinite(b.upper)) throw NumericalError("perron_eigenpair: degenerate matrix");
        if ((b.upper - b.lower) <= options.tolerance * b.upper) {
            out.iterations = it - 1;
            break;
        }
        // Keep the shift strictly above λ so the resolvent stays positive.
        const double shift = b.upper * (1.0 + 64.0 * std::numeric_limits<double>::epsilon());
        Vector x = Eigen::PartialPivLU<Matrix>(shift * identity - M).solve(v);
        if (!x.allFinite() || !(x(a) > 0.0)) {
            // Numerically singular resolvent: v is already an eigenvector to working precision.
            out.iterations = it;
            break;
        }
        x /= x(a);
        x = x.cwiseMax(std::numeric_limits<double>::min());
        v = std::move(x);
        b = collatz_wielandt(M, v);
        out.iterations = it;
        if (it == options.max_iterations) {
            throw ConvergenceError("perron_eigenpair: no convergence within iteration cap",
                                   (b.upper - b.lower) / b.upper);
        }
    }

    const Vector Mv = M * v;
    out.lambda = Mv(a) / v(a);
    out.residual = (Mv - out.lambda * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    if (!(out.residual <= kResidualTolerance * std::max(1.0, out.lambda)))
        throw ConvergenceError("perron_eigenpair: eigen residual too large", out.residual);
    out.v = std::move(v);
    return out;
}

Matrix twisted_matrix(const Matrix& P0, const Vector& v) {
    Matrix P = P0 * v.asDiagonal();
    for (Eigen::Index i = 0; i < P.rows(); ++i) P.row(i) /= P.row(i).sum();
    return P;
}

SpectralDesign solve(const LoadModel& model, double zeta, const SolveOptions& options) {
    if (!std::isfinite(zeta)) throw ArgumentError("solve: zeta is not finite");
    if (std::abs(zeta) > options.zeta_guard)
        throw ArgumentError("solve: |zeta| exceeds guard " + std::to_string(options.zeta_guard));

    const Matrix tilted = tilt_matrix(model, zeta);
    PerronPair pair = perron_eigenpair(tilted, model.anchor(), options);

    SpectralDesign d;
    d.zeta = zeta;
    d.lambda = pair.lambda;
    d.eta_star = std::log(pair.lambda);
    d.v = std::move(pair.v);
    d.h_star = d.v.array().log().matrix();
    d.P_check = twisted_matrix(model.transition(), d.v);
    d.iterations = pair.iterations;
    d.residual = pair.residual;
    if (options.compute_invariant) d.pi_check = potential_solve(d.P_check, model.anchor()).pi;
    return d;
}

double steady_state_on_fraction(const SpectralDesign& design, const LoadModel& model) {
    if (design.pi_check.size() != model.utility().size())
        throw ArgumentError("steady_state_on_fraction: design was solved without its invariant measure");
    return design.pi_check.dot(model.utility());
}

}  // namespace mfdr
