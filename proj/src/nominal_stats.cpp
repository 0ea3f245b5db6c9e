#include "mfdr/nominal_stats.hpp"

#include <algorithm>
#include <cmath>

#include "mfdr/errors.hpp"
#include "mfdr/spectral_design.hpp"

namespace mfdr {

namespace {

constexpr double kCenteringTolerance = 1e-10;
constexpr double kVarianceClamp = -1e-14;

}  // namespace

PotentialSolution potential_solve(const Matrix& P, StateIndex anchor) {
    const auto n = P.rows();
    if (P.cols() != n || anchor >= static_cast<StateIndex>(n)) throw DimensionError("potential_solve: bad dimensions");

    const auto a = static_cast<Eigen::Index>(anchor);
    Matrix I_minus_Pbar = -P;
    I_minus_Pbar.row(a).setZero();
    I_minus_Pbar.diagonal().array() += 1.0;

    Eigen::PartialPivLU<Matrix> lu(I_minus_Pbar);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) throw NumericalError("potential_solve: I - P̄ is singular (reducible chain?)");

    PotentialSolution out;
    out.Z = lu.inverse();
    const Eigen::RowVectorXd mu = P.row(a) * out.Z;
    const double total = mu.sum();
    if (!(total > 0.0) || (mu.array() < -1e-12 * total).any())
        throw NumericalError("potential_solve: unnormalizable invariant measure");
    out.pi = (mu / total).transpose().cwiseMax(0.0);
    out.pi /= out.pi.sum();
    return out;
}

Vector poisson_solve(const PotentialSolution& potential, const Vector& f, StateIndex anchor) {
    if (f.size() != potential.pi.size()) throw DimensionError("poisson_solve: forcing has wrong length");
    const double mean = potential.pi.dot(f);
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    if (std::abs(mean) > kCenteringTolerance * scale)
        throw ArgumentError("poisson_solve: forcing is not centered (π(f) = " + std::to_string(mean) + ")");
    Vector g = potential.Z * f;
    g.array() -= g(static_cast<Eigen::Index>(anchor));
    return g;
}

Vector poisson_solve(const Matrix& P, const Vector& f, StateIndex anchor) {
    return poisson_solve(potential_solve(P, anchor), f, anchor);
}

Vector one_step_variance(const Matrix& P, const Vector& g) {
    const Vector Pg = P * g;
    Vector v = P * g.cwiseProduct(g) - Pg.cwiseProduct(Pg);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (v(i) < 0.0 && v(i) >= kVarianceClamp * std::max(1.0, Pg(i) * Pg(i))) v(i) = 0.0;
    return v;
}

double asymptotic_variance(const Vector& pi, const Vector& centered_utility, const Vector& g) {
    return pi.dot((2.0 * centered_utility.cwiseProduct(g) - centered_utility.cwiseProduct(centered_utility)));
}

Vector NominalStats::centered_utility(const LoadModel& model) const {
    return (model.utility().array() - eta0).matrix();
}

NominalStats compute_stats(const LoadModel& model) {
    const Matrix& P = model.transition();
    const StateIndex anchor = model.anchor();
    PotentialSolution potential = potential_solve(P, anchor);

    NominalStats s;
    s.anchor = anchor;
    s.pi0 = potential.pi;
    s.eta0 = s.pi0.dot(model.utility());
    const Vector u = s.centered_utility(model);
    s.H = poisson_solve(potential, u, anchor);
    s.kappa2 = asymptotic_variance(s.pi0, u, s.H);
    const Vector forcing = (one_step_variance(P, s.H).array() - s.kappa2).matrix();
    s.S = poisson_solve(potential, forcing, anchor);
    s.Z = std::move(potential.Z);
    return s;
}

double taylor_eta(const NominalStats& stats, double zeta) {
    return stats.eta0 * zeta + 0.5 * stats.kappa2 * zeta * zeta;
}

Vector taylor_h(const NominalStats& stats, double zeta) { return zeta * stats.H + 0.5 * zeta * zeta * stats.S; }

double taylor_on_fraction(const NominalStats& stats, double zeta) {
    return std::clamp(stats.eta0 + stats.kappa2 * zeta, 0.0, 1.0);
}

double zeta_star_for(const NominalStats& stats, double target_on_fraction) {
    if (!(target_on_fraction >= 0.0 && target_on_fraction <= 1.0))
        throw ArgumentError("zeta_star_for: target on-fraction must lie in [0, 1]");
    if (!(stats.kappa2 > 0.0)) throw DegenerateModelError("zeta_star_for: asymptotic variance is zero");
    return (target_on_fraction - stats.eta0) / stats.kappa2;
}

DerivativeDiagnostic derivative_poisson_check(const LoadModel& model, double zeta, double step) {
    if (!(step > 0.0)) throw ArgumentError("derivative_poisson_check: step must be positive");
    const SpectralDesign lo = solve(model, zeta - step);
    const SpectralDesign mid = solve(model, zeta);
    const SpectralDesign hi = solve(model, zeta + step);

    DerivativeDiagnostic d;
    d.zeta = zeta;
    d.h_first = (hi.h_star - lo.h_star) / (2.0 * step);
    d.h_second = (hi.h_star - 2.0 * mid.h_star + lo.h_star) / (step * step);
    d.lambda_first = (hi.eta_star - lo.eta_star) / (2.0 * step);
    d.lambda_second = (hi.eta_star - 2.0 * mid.eta_star + lo.eta_star) / (step * step);

    const Matrix& Pc = mid.P_check;
    const Vector r1 = model.utility() + Pc * d.h_first - d.h_first - Vector::Constant(d.h_first.size(), d.lambda_first);
    const Vector r2 = one_step_variance(Pc, d.h_first) + Pc * d.h_second - d.h_second -
                      Vector::Constant(d.h_second.size(), d.lambda_second);
    d.first_residual = r1.cwiseAbs().maxCoeff();
    d.second_residual = r2.cwiseAbs().maxCoeff();
    return d;
}

}  // namespace mfdr
