#pragma once

#include <string>
#include <vector>

#include "dkf/netmodel.hpp"

namespace dkf {

enum class BeliefKind { Predicted, Updated };

/// Gaussian state belief (x_hat, Sigma), re-symmetrized after every step.
struct GaussianBelief {
    Vector mean;
    Matrix cov;
    BeliefKind kind = BeliefKind::Updated;
    int step = 0;
};

struct KalmanGain {
    Matrix K;  // n x p
    int step = 0;
};

namespace detail {

/// Gain K = Sigma C^T (C Sigma C^T + R)^-1, computed as a linear solve.
inline Matrix kalman_gain(const Matrix& cov, const Matrix& C, const Matrix& R) {
    const Matrix innov_cov = symmetrize(C * cov * C.transpose() + R);
    Eigen::SelfAdjointEigenSolver<Matrix> es(innov_cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(innov_cov.rows() - 1);
    if (!(lo > 0.0) || hi / lo > 1e14)
        throw SingularInnovation("innovation covariance C*Sigma*C^T + R is numerically singular");
    // Solve (C Sigma C^T + R) X = C Sigma, then K = X^T.
    return Eigen::LDLT<Matrix>(innov_cov).solve(C * cov).transpose();
}

/// Joseph-form covariance update (I-KC) Sigma (I-KC)^T + K R K^T.
inline Matrix joseph_update(const Matrix& cov, const Matrix& K, const Matrix& C, const Matrix& R) {
    const Matrix ikc = Matrix::Identity(cov.rows(), cov.rows()) - K * C;
    return symmetrize(ikc * cov * ikc.transpose() + K * R * K.transpose());
}

} // namespace detail

/// Prediction step of the centralized filter, simplified form:
/// mean <- A mean + L y, cov <- A cov A^T + Q.
inline GaussianBelief central_predict(const GaussianBelief& belief, const Vector& y,
                                      const AggregatedModel& model) {
    if (belief.kind != BeliefKind::Updated)
        throw InconsistentStep("central_predict expects an updated (k|k) belief");
    if (belief.mean.size() != model.n())
        throw DimensionMismatch("belief mean has dimension " + std::to_string(belief.mean.size()) +
                                ", model has n = " + std::to_string(model.n()));
    if (y.size() != model.p())
        throw DimensionMismatch("measurement has dimension " + std::to_string(y.size()) +
                                ", model has p = " + std::to_string(model.p()));
    GaussianBelief out;
    out.mean = model.A * belief.mean + model.L * y;
    out.cov = symmetrize(model.A * belief.cov * model.A.transpose() + model.Q);
    out.kind = BeliefKind::Predicted;
    out.step = belief.step + 1;
    return out;
}

/// Same prediction written in the correlated-noise form
/// (Atilde - Stilde R^-1 C, Qtilde - Stilde R^-1 Stilde^T); algebraically
/// identical to central_predict and kept as an independent cross-check path.
inline GaussianBelief central_predict_correlated(const GaussianBelief& belief, const Vector& y,
                                                 const AggregatedModel& model) {
    if (belief.kind != BeliefKind::Updated)
        throw InconsistentStep("central_predict_correlated expects an updated (k|k) belief");
    const Matrix r_inv_c = spd_solve(model.R, model.C, "R");
    const Matrix r_inv_st = spd_solve(model.R, Matrix(model.S_tilde.transpose()), "R");
    const Matrix F = model.A_tilde - model.S_tilde * r_inv_c;
    GaussianBelief out;
    out.mean = F * belief.mean + model.S_tilde * spd_solve(model.R, Matrix(y), "R");
    out.cov = symmetrize(F * belief.cov * F.transpose() + model.Q_tilde -
                         model.S_tilde * r_inv_st);
    out.kind = BeliefKind::Predicted;
    out.step = belief.step + 1;
    return out;
}

/// Measurement update: K from the innovation covariance, Joseph-form covariance.
inline std::pair<GaussianBelief, KalmanGain> central_update(const GaussianBelief& belief,
                                                            const Vector& y,
                                                            const AggregatedModel& model) {
    if (belief.kind != BeliefKind::Predicted)
        throw InconsistentStep("central_update expects a predicted (k|k-1) belief");
    if (y.size() != model.p())
        throw DimensionMismatch("measurement has dimension " + std::to_string(y.size()) +
                                ", model has p = " + std::to_string(model.p()));
    const Matrix K = detail::kalman_gain(belief.cov, model.C, model.R);
    GaussianBelief out;
    out.mean = belief.mean + K * (y - model.C * belief.mean);
    out.cov = detail::joseph_update(belief.cov, K, model.C, model.R);
    out.kind = BeliefKind::Updated;
    out.step = belief.step;
    return {out, KalmanGain{K, belief.step}};
}

/// Full trajectory of the centralized filter.
struct CentralRun {
    std::vector<GaussianBelief> updated;    // k|k for k = 1..K
    std::vector<GaussianBelief> predicted;  // k+1|k for k = 0..K (predicted[k] is k+1|k)
    std::vector<KalmanGain> gains;          // K_k for k = 1..K
};

/// Runs the filter from x_hat_{0|0} = mean0 (default 0), Sigma_{0|0} = P over
/// measurements y_1..y_K. The k = 0 prediction carries no measurement feed:
/// couplings activate with the first broadcast, so x_1 = A x_0 + w_0.
inline CentralRun central_run(const AggregatedModel& model, const std::vector<Vector>& measurements,
                              const Vector& mean0 = Vector()) {
    if (measurements.empty()) throw ValidationError("central_run: empty measurement list");
    CentralRun run;
    GaussianBelief belief;
    belief.mean = mean0.size() ? mean0 : Vector(Vector::Zero(model.n()));
    belief.cov = model.P;
    belief.kind = BeliefKind::Updated;
    belief.step = 0;
    const Vector zero_y = Vector::Zero(model.p());
    GaussianBelief pred = central_predict(belief, zero_y, model);
    run.predicted.push_back(pred);
    for (size_t k = 0; k < measurements.size(); ++k) {
        try {
            auto [upd, gain] = central_update(pred, measurements[k], model);
            run.updated.push_back(upd);
            run.gains.push_back(gain);
            pred = central_predict(upd, measurements[k], model);
            run.predicted.push_back(pred);
        } catch (const Error& e) {
            throw Error("central_run failed at step " + std::to_string(k + 1) + ": " + e.what());
        }
    }
    return run;
}

} // namespace dkf
