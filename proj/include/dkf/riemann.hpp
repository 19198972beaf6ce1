#pragma once

#include <cmath>
#include <utility>

#include "dkf/linalg.hpp"

namespace dkf {

/// Riemannian distance on SPD matrices:
/// delta(P, Q) = sqrt(sum_k log^2 lambda_k) with lambda_k the generalized
/// eigenvalues of (P, Q), i.e. the (real, positive) eigenvalues of P Q^-1.
inline double riemannian_distance(const Matrix& p, const Matrix& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols())
        throw DimensionMismatch("riemannian_distance: size mismatch");
    if (!is_spd(p)) throw NonSpd("riemannian_distance: first argument is not SPD");
    if (!is_spd(q)) throw NonSpd("riemannian_distance: second argument is not SPD");
    if ((p - q).cwiseAbs().maxCoeff() == 0.0) return 0.0;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(p), symmetrize(q),
                                                        Eigen::EigenvaluesOnly);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
        const double lg = std::log(es.eigenvalues()(k));
        acc += lg * lg;
    }
    return std::sqrt(acc);
}

/// Both sides of the contraction inequality
/// delta(W + B P B^T, W + B Q B^T) <= alpha/(alpha+beta) * delta(P, Q),
/// alpha = max{||B P B^T||, ||B Q B^T||}, beta = sigma_min(W).
inline std::pair<double, double> contraction_check(const Matrix& p, const Matrix& q,
                                                   const Matrix& w, const Matrix& b) {
    if (!is_spd(w)) throw NonSpd("contraction_check: W is not SPD");
    const Matrix bpb = symmetrize(b * p * b.transpose());
    const Matrix bqb = symmetrize(b * q * b.transpose());
    const double alpha = std::max(spectral_norm(bpb), spectral_norm(bqb));
    const double beta = min_eigenvalue(w);
    const double lhs = riemannian_distance(w + bpb, w + bqb);
    const double rhs = (alpha + beta > 0.0 ? alpha / (alpha + beta) : 0.0) *
                       riemannian_distance(p, q);
    return {lhs, rhs};
}

/// Both sides of ||P - Q|| <= (e^{delta(P,Q)} - 1) ||Q||, requires P > Q.
inline std::pair<double, double> norm_gap_bound_check(const Matrix& p, const Matrix& q) {
    if (!is_spd(p) || !is_spd(q)) throw NonSpd("norm_gap_bound_check: arguments must be SPD");
    if (!(min_eigenvalue(symmetrize(p - q)) > 0.0))
        throw OrderViolation("norm_gap_bound_check: P - Q is not positive definite");
    const double lhs = spectral_norm(p - q);
    const double rhs = (std::exp(riemannian_distance(p, q)) - 1.0) * spectral_norm(q);
    return {lhs, rhs};
}

/// Evaluators for the two auxiliary inequalities used by the bound proofs,
/// exposed for the property-test suite.

/// e^{xy} - 1 <= (e^x - 1) y for x in R, y in [0, 1]; returns (lhs, rhs).
inline std::pair<double, double> exp_interpolation_check(double x, double y) {
    return {std::exp(x * y) - 1.0, (std::exp(x) - 1.0) * y};
}

/// For a PSD block matrix [[A, B^T], [B, C]]: ||B|| <= sqrt(||A|| ||C||).
inline std::pair<double, double> psd_offdiag_check(const Matrix& m, Eigen::Index top) {
    if (m.rows() != m.cols() || top <= 0 || top >= m.rows())
        throw DimensionMismatch("psd_offdiag_check: invalid block split");
    const Matrix a = m.topLeftCorner(top, top);
    const Matrix c = m.bottomRightCorner(m.rows() - top, m.rows() - top);
    const Matrix b = m.bottomLeftCorner(m.rows() - top, top);
    return {spectral_norm(b), std::sqrt(spectral_norm(a) * spectral_norm(c))};
}

} // namespace dkf
