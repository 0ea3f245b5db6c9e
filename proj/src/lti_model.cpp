#include "mfdr/lti_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mfdr/errors.hpp"

namespace mfdr {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

bool is_zero_sum(const LtiSystem& sys) {
    return std::abs(sys.B.sum()) <= 1e-12 * std::max(1.0, sys.B.cwiseAbs().sum());
}

Matrix deflated_dynamics(const LtiSystem& sys) {
    // A − π₀ᵀ 1ᵀ: kills the Perron mode, leaves the zero-sum subspace untouched.
    return sys.A - sys.pi0 * Vector::Ones(sys.pi0.size()).transpose();
}

}  // namespace

LtiSystem linearize(const LoadModel& model, const NominalStats& stats) {
    const Matrix& P = model.transition();
    const auto d = P.rows();
    if (stats.pi0.size() != d || stats.H.size() != d) throw DimensionError("linearize: stats do not match model");

    LtiSystem sys;
    sys.A = P.transpose();
    sys.C = model.utility();
    sys.pi0 = stats.pi0;
    sys.y0 = stats.eta0;
    const Vector u = stats.centered_utility(model);

    sys.E = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (P(i, j) != 0.0) sys.E(i, j) = (u(i) + stats.H(j) - stats.H(i)) * P(i, j);
    sys.B = (stats.pi0.transpose() * sys.E).transpose();
    return sys;
}

Complex transfer_value(const LtiSystem& sys, Complex z) {
    const auto n = sys.A.rows();
    const Matrix dynamics = is_zero_sum(sys) ? deflated_dynamics(sys) : sys.A;
    ComplexMatrix M = -dynamics.cast<Complex>();
    M.diagonal().array() += z;
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    if (!(lu.rcond() > 1e-13)) throw PoleProximityError("transfer_value: z is (numerically) a pole");
    const ComplexVector x = lu.solve(sys.B.cast<Complex>());
    Complex out = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) out += sys.C(i) * x(i);
    return out;
}

ZeroPoleReport zeros_poles(const LtiSystem& sys, double residue_tolerance, double pairing_tolerance) {
    const auto n = sys.A.rows();
    ZeroPoleReport rep;

    // Zeros: finite generalized eigenvalues of the system pencil.
    Matrix M = Matrix::Zero(n + 1, n + 1);
    Matrix N = Matrix::Zero(n + 1, n + 1);
    M.topLeftCorner(n, n) = sys.A;
    M.topRightCorner(n, 1) = sys.B;
    M.bottomLeftCorner(1, n) = sys.C.transpose();
    N.topLeftCorner(n, n).setIdentity();
    Eigen::GeneralizedEigenSolver<Matrix> pencil(M, N, false);
    if (pencil.info() != Eigen::Success) rep.warnings.emplace_back("QZ iteration did not converge on the system pencil");
    const auto alphas = pencil.alphas();
    const auto betas = pencil.betas();
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
        if (std::abs(betas(i)) <= 1e-10 * scale) continue;  // infinite zero
        rep.all_zeros.push_back(alphas(i) / betas(i));
    }

    // Poles and residues from the eigen-decomposition of A.
    Eigen::EigenSolver<Matrix> eig(sys.A, true);
    if (eig.info() != Eigen::Success) throw NumericalError("zeros_poles: eigen-decomposition of A failed");
    const ComplexVector lambdas = eig.eigenvalues();
    const ComplexMatrix R = eig.eigenvectors();
    Eigen::PartialPivLU<ComplexMatrix> lu(R);
    const double rcond = lu.rcond();
    if (rcond < 1e-12)
        rep.warnings.emplace_back("eigenvector basis of A is ill-conditioned (rcond " + std::to_string(rcond) +
                                  "); residues of clustered poles are approximate");
    const ComplexMatrix L = lu.inverse();  // rows are left eigenvectors with L R = I
    const ComplexVector CR = R.transpose() * sys.C.cast<Complex>();
    const ComplexVector LB = L * sys.B.cast<Complex>();

    std::size_t perron = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        rep.all_poles.push_back(lambdas(k));
        const double residue = std::abs(CR(k) * LB(k));
        rep.pole_residues.push_back(residue);
        if (std::abs(lambdas(k) - 1.0) < std::abs(lambdas(static_cast<Eigen::Index>(perron)) - 1.0))
            perron = static_cast<std::size_t>(k);
    }
    rep.perron_residue = rep.pole_residues[perron];

    std::vector<bool> zero_used(rep.all_zeros.size(), false);
    for (std::size_t k = 0; k < rep.all_poles.size(); ++k) {
        const Complex p = rep.all_poles[k];
        if (rep.pole_residues[k] >= residue_tolerance) {
            rep.poles.push_back(p);
            continue;
        }
        rep.canceled.push_back(p);
        std::size_t best = rep.all_zeros.size();
        double best_dist = pairing_tolerance * std::max(1.0, std::abs(p));
        for (std::size_t j = 0; j < rep.all_zeros.size(); ++j) {
            if (zero_used[j]) continue;
            const double dist = std::abs(rep.all_zeros[j] - p);
            if (dist <= best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best < rep.all_zeros.size()) zero_used[best] = true;
    }
    for (std::size_t j = 0; j < rep.all_zeros.size(); ++j)
        if (!zero_used[j]) rep.zeros.push_back(rep.all_zeros[j]);

    rep.minimum_phase = std::all_of(rep.zeros.begin(), rep.zeros.end(),
                                    [](const Complex& z) { return std::abs(z) < 1.0; });
    return rep;
}

Complex supersample_lowpass(int m, Complex z) {
    if (m < 1) throw ArgumentError("supersample_lowpass: m must be positive");
    Complex sum = 0.0;
    Complex zinv_power = 1.0;
    const Complex zinv = 1.0 / z;
    for (int i = 1; i <= m; ++i) {
        zinv_power *= zinv;
        sum += zinv_power;
    }
    return sum / static_cast<double>(m);
}

Complex supersampled_transfer(const LtiSystem& sys, const SupersampleFilter& filter, Complex z) {
    if (z == Complex(0.0)) throw ArgumentError("supersampled_transfer: z must be nonzero");
    const Complex zm = std::pow(z, filter.m);
    return zm * transfer_value(sys, zm) * supersample_lowpass(filter.m, z);
}

std::vector<BodePoint> bode(const LtiSystem& sys, std::size_t points, double w_min, double w_max,
                            const SupersampleFilter* filter) {
    if (points < 2 || !(w_min > 0.0) || !(w_max > w_min)) throw ArgumentError("bode: bad frequency grid");
    std::vector<BodePoint> out;
    out.reserve(points);
    const double lmin = std::log10(w_min), lmax = std::log10(w_max);
    double unwrap = 0.0, previous = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double w = std::pow(10.0, lmin + (lmax - lmin) * static_cast<double>(i) / static_cast<double>(points - 1));
        const Complex z = std::polar(1.0, w);
        Complex h;
        try {
            h = filter ? supersampled_transfer(sys, *filter, z) : transfer_value(sys, z);
        } catch (const PoleProximityError&) {
            h = Complex(0.0);
        }
        double phase = std::arg(h) * 180.0 / 3.141592653589793;
        if (i > 0) {
            while (phase + unwrap - previous > 180.0) unwrap -= 360.0;
            while (phase + unwrap - previous < -180.0) unwrap += 360.0;
        }
        phase += unwrap;
        previous = phase;
        const double mag = std::abs(h);
        out.push_back({w, mag > 0.0 ? 20.0 * std::log10(mag) : -400.0, phase});
    }
    return out;
}

std::vector<double> impulse_response(const LtiSystem& sys, std::size_t steps) {
    std::vector<double> h(steps);
    Vector x = sys.B;
    for (std::size_t k = 0; k < steps; ++k) {
        h[k] = sys.C.dot(x);
        x = sys.A * x;
    }
    return h;
}

}  // namespace mfdr
