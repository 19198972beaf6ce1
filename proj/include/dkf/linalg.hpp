#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dkf/errors.hpp"

namespace dkf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spectral norm (largest singular value).
inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(m.rows() - 1);
}

/// SPD check: symmetry to 1e-12 relative plus smallest eigenvalue > 1e-12*||M||.
inline bool is_spd(const Matrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols() || m.rows() == 0) return false;
    if (!is_symmetric(m, rel_tol)) return false;
    const Matrix sym = 0.5 * (m + m.transpose());
    const double scale = spectral_norm(sym);
    if (scale == 0.0) return false;
    return min_eigenvalue(sym) > rel_tol * scale;
}

inline void require_spd(const Matrix& m, const std::string& name) {
    if (m.rows() != m.cols())
        throw DimensionMismatch(name + " is not square (" + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ")");
    if (!is_symmetric(m))
        throw NonSpd(name + " is not symmetric to 1e-12 relative tolerance");
    const double lam = min_eigenvalue(0.5 * (m + m.transpose()));
    const double scale = spectral_norm(m);
    if (!(lam > 1e-12 * scale))
        throw NonSpd(name + " is not positive definite (min eigenvalue " + std::to_string(lam) + ")");
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric PSD square root via eigendecomposition, negative round-off clipped.
inline Matrix spd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Lower Cholesky factor; throws NonSpd on failure.
inline Matrix cholesky_lower(const Matrix& m, const std::string& name = "matrix") {
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (llt.info() != Eigen::Success)
        throw NonSpd(name + ": Cholesky factorization failed, matrix not positive definite");
    return llt.matrixL();
}

/// Solve M X = B for SPD M via LDLT, with a singularity guard on the condition estimate.
inline Matrix spd_solve(const Matrix& m, const Matrix& b, const std::string& name = "matrix") {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(m.rows() - 1);
    if (!(lo > 0.0) || hi / lo > 1e14)
        throw SingularCovariance(name + " is numerically singular (condition estimate > 1e14)");
    return Eigen::LDLT<Matrix>(symmetrize(m)).solve(b);
}

/// Symmetric inverse of an SPD matrix, eigenvalues floored at 1e-12*||M||.
inline Matrix spd_inverse(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    const double floor = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
    Vector d = es.eigenvalues().cwiseMax(floor).cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix block_diag(const std::vector<Matrix>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

/// Keep the diagonal blocks of P (square blocks of sizes dims), zero elsewhere.
inline Matrix block_diagonal_extract(const Matrix& p, const std::vector<Eigen::Index>& dims) {
    Eigen::Index n = 0;
    for (auto d : dims) n += d;
    if (p.rows() != n || p.cols() != n)
        throw DimensionMismatch("block_diagonal_extract: dims sum to " + std::to_string(n) +
                                " but matrix is " + std::to_string(p.rows()) + "x" +
                                std::to_string(p.cols()));
    Matrix out = Matrix::Zero(n, n);
    Eigen::Index off = 0;
    for (auto d : dims) {
        out.block(off, off, d, d) = p.block(off, off, d, d);
        off += d;
    }
    return out;
}

inline double spectral_radius(const Matrix& m) {
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace dkf
