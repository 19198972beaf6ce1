#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dkf/kalman_central.hpp"
#include "dkf/kalman_dist.hpp"
#include "dkf/riemann.hpp"
#include "dkf/sim.hpp"

namespace dkf {

/// Pure covariance (Riccati) recursion: no measurements involved.
struct RiccatiTrace {
    std::vector<Matrix> predicted;  // Sigma_{k+1|k} for k = 0..K (predicted[k] is k+1|k)
    std::vector<Matrix> updated;    // Sigma_{k|k} for k = 1..K
    std::vector<Matrix> gains;      // K_k for k = 1..K
};

inline RiccatiTrace riccati_run(const AggregatedModel& model, const Matrix& p0, int horizon) {
    RiccatiTrace trace;
    Matrix cov = symmetrize(p0);
    Matrix pred = symmetrize(model.A * cov * model.A.transpose() + model.Q);
    trace.predicted.push_back(pred);
    for (int k = 1; k <= horizon; ++k) {
        const Matrix K = detail::kalman_gain(pred, model.C, model.R);
        cov = detail::joseph_update(pred, K, model.C, model.R);
        trace.gains.push_back(K);
        trace.updated.push_back(cov);
        pred = symmetrize(model.A * cov * model.A.transpose() + model.Q);
        trace.predicted.push_back(pred);
    }
    return trace;
}

enum class FilterScheme { Centralized, Distributed };

/// Fixed point of the updated-covariance recursion, iterated from P (or from
/// the block-diagonal P* for the distributed scheme).
inline Matrix steady_state_covariance(const AggregatedModel& model, FilterScheme which,
                                      double rel_tol = 1e-12, int max_iter = 100000) {
    Matrix cov = (which == FilterScheme::Centralized) ? model.P : model.P_star();
    double increment = std::numeric_limits<double>::infinity();
    for (int k = 0; k < max_iter; ++k) {
        const Matrix pred = symmetrize(model.A * cov * model.A.transpose() + model.Q);
        const Matrix K = detail::kalman_gain(pred, model.C, model.R);
        const Matrix next = detail::joseph_update(pred, K, model.C, model.R);
        increment = spectral_norm(next - cov);
        cov = next;
        if (increment < rel_tol * spectral_norm(cov)) return cov;
    }
    throw NoConvergence("steady_state_covariance: no fixed point after " +
                        std::to_string(max_iter) + " iterations (last increment " +
                        std::to_string(increment) + ")");
}

struct StabilityReport {
    bool detectable = false;
    bool stabilizable = false;
    double rho_H_bar = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline Eigen::Index complex_rank(const Eigen::MatrixXcd& m, double rel_tol = 1e-10) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++r;
    return r;
}

} // namespace detail

/// PBH rank tests on (A, C) detectability and (A, Q^{1/2}) stabilizability,
/// plus the spectral radius of the steady-state error dynamics
/// H_bar = A (I - K_bar C).
inline StabilityReport stability_check(const AggregatedModel& model) {
    StabilityReport rep;
    const Eigen::Index n = model.n();
    const Matrix q_sqrt = spd_sqrt(model.Q);
    const Eigen::VectorXcd eigs = model.A.eigenvalues();
    rep.detectable = true;
    rep.stabilizable = true;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        if (std::abs(eigs(i)) < 1.0 - 1e-10) continue;  // stable modes need no test
        Eigen::MatrixXcd pencil_det(n + model.p(), n);
        pencil_det.topRows(n) = model.A.cast<std::complex<double>>() -
                                eigs(i) * Eigen::MatrixXcd::Identity(n, n);
        pencil_det.bottomRows(model.p()) = model.C.cast<std::complex<double>>();
        if (detail::complex_rank(pencil_det) < n) rep.detectable = false;
        Eigen::MatrixXcd pencil_stab(n, 2 * n);
        pencil_stab.leftCols(n) = model.A.cast<std::complex<double>>() -
                                  eigs(i) * Eigen::MatrixXcd::Identity(n, n);
        pencil_stab.rightCols(n) = q_sqrt.cast<std::complex<double>>();
        if (detail::complex_rank(pencil_stab) < n) rep.stabilizable = false;
    }
    if (rep.detectable && rep.stabilizable) {
        const Matrix sigma_bar = steady_state_covariance(model, FilterScheme::Centralized);
        const Matrix pred = symmetrize(model.A * sigma_bar * model.A.transpose() + model.Q);
        const Matrix k_bar = detail::kalman_gain(pred, model.C, model.R);
        const Matrix h_bar =
            model.A * (Matrix::Identity(n, n) - k_bar * model.C);
        rep.rho_H_bar = spectral_radius(h_bar);
    }
    return rep;
}

/// All scalar convergence-bound constants plus the matrices they derive from.
struct BoundReport {
    double sigma = 0.0;     // max{||P||, ||P*||, ||Sigma_bar||}
    double omega = 0.0;     // max{||P^-1||, ||P*^-1||, ||Sigma_bar^-1||}
    double upsilon1 = 0.0;  // sigma ||A||^2 / (sigma ||A||^2 + lambda_min(Q))
    double upsilon2 = 0.0;  // omega / (omega + lambda_min(U))
    double upsilon = 0.0;   // upsilon1 * upsilon2
    double kappa = 0.0;     // e^{delta(P, P*)} - 1
    double delta_p = 0.0;   // delta(P, P*)
    Matrix Sigma_bar;
    Matrix U;
    Matrix H_bar;           // A (I - K_bar C)
    double rho_H_bar = 0.0;
    double zeta = 0.0, alpha = 0.0, beta = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();  // empirical, Monte-Carlo filled
    double eps = 1.1;
    double psi_eps = 0.0;   // eps * rho(H_bar)
    double phi_eps = std::numeric_limits<double>::quiet_NaN();  // not computed (Jordan-form based)
    double A_eps = std::numeric_limits<double>::quiet_NaN();    // fitted envelope coefficient
    double B_eps = std::numeric_limits<double>::quiet_NaN();    // fitted envelope coefficient
    int k_eps = -1;          // first k with ||H_k - H_bar|| <= (sqrt(eps)-1)||H_bar||
    bool u_singular = false; // if true, upsilon2 = 1 and the bounds are vacuous
};

/// Computes every bound constant that does not require simulation. lambda and
/// the fitted (A_eps, B_eps) are filled by estimate_gap_monte_carlo.
inline BoundReport compute_bound_report(const AggregatedModel& model, double eps = 1.1,
                                        int horizon = 200) {
    if (!(eps > 1.0)) throw ValidationError("compute_bound_report: eps must be > 1");
    BoundReport rep;
    rep.eps = eps;
    const Matrix p_star = model.P_star();
    rep.Sigma_bar = steady_state_covariance(model, FilterScheme::Centralized);
    rep.U = model.U;

    rep.sigma = std::max({spectral_norm(model.P), spectral_norm(p_star),
                          spectral_norm(rep.Sigma_bar)});
    rep.omega = std::max({spectral_norm(spd_inverse(model.P)), spectral_norm(spd_inverse(p_star)),
                          spectral_norm(spd_inverse(rep.Sigma_bar))});

    const double a_norm = spectral_norm(model.A);
    const double q_floor = min_eigenvalue(model.Q);  // = ||Q^-1||^-1 for SPD Q
    rep.upsilon1 = rep.sigma * a_norm * a_norm / (rep.sigma * a_norm * a_norm + q_floor);
    const double u_floor = min_eigenvalue(rep.U);
    if (u_floor <= 1e-12 * std::max(1.0, spectral_norm(rep.U))) {
        rep.u_singular = true;
        rep.upsilon2 = 1.0;  // bound vacuous, reported rather than an error
    } else {
        rep.upsilon2 = rep.omega / (rep.omega + u_floor);
    }
    rep.upsilon = rep.upsilon1 * rep.upsilon2;

    rep.delta_p = riemannian_distance(model.P, p_star);
    rep.kappa = std::exp(rep.delta_p) - 1.0;

    const Matrix pred_bar = symmetrize(model.A * rep.Sigma_bar * model.A.transpose() + model.Q);
    const Matrix k_bar = detail::kalman_gain(pred_bar, model.C, model.R);
    rep.H_bar = model.A * (Matrix::Identity(model.n(), model.n()) - k_bar * model.C);
    rep.rho_H_bar = spectral_radius(rep.H_bar);
    rep.psi_eps = eps * rep.rho_H_bar;

    const double k2o2s2a2 = rep.kappa * rep.kappa * rep.omega * rep.omega * rep.sigma * rep.sigma *
                            a_norm * a_norm;
    rep.alpha = k2o2s2a2 * (rep.sigma * a_norm * a_norm + spectral_norm(model.Q));
    rep.beta = k2o2s2a2 * rep.sigma;
    rep.zeta = (rep.alpha + rep.beta) + 2.0 * std::sqrt(rep.alpha * rep.beta);

    // First step at which H_k has settled near H_bar.
    const RiccatiTrace trace = riccati_run(model, model.P, horizon);
    const double settle_tol = (std::sqrt(eps) - 1.0) * spectral_norm(rep.H_bar);
    for (int k = 1; k <= horizon; ++k) {
        const Matrix h_k = model.A * (Matrix::Identity(model.n(), model.n()) -
                                      trace.updated[static_cast<size_t>(k - 1)] * rep.U);
        if (spectral_norm(h_k - rep.H_bar) <= settle_tol) {
            rep.k_eps = k;
            break;
        }
    }
    return rep;
}

/// Per-step record of the covariance- and estimate-gap quantities, with the
/// theoretical bound curves they are compared against.
struct GapRecord {
    int k = 0;
    double sigma_gap_norm = 0.0;  // ||Sigma_{k|k} - Sigma*_{k|k}||
    double gamma_gap_norm = 0.0;  // ||Gamma_{k|k} - Gamma*_{k|k}||
    double delta_sigma = 0.0;     // delta(Sigma_{k|k}, Sigma*_{k|k})
    double bound_sigma = 0.0;     // kappa * sigma * upsilon^k
    double bound_gamma = 0.0;     // kappa * omega * upsilon^k
    double bound_delta = 0.0;     // upsilon^k * delta(P, P*)
    Vector x_gap;                 // xtilde_{k|k-1} (single-run experiments)
    double x_gap_norm = 0.0;
    double delta_hat_norm = std::numeric_limits<double>::quiet_NaN();  // ||Delta_hat_k||
};

struct GapTrajectory {
    std::vector<GapRecord> records;
};

/// Runs the centralized Riccati recursion from P and from P* side by side and
/// records every gap quantity together with its bound curve.
inline GapTrajectory covariance_gap_trajectory(const AggregatedModel& model,
                                               const BoundReport& rep, int horizon) {
    if (horizon < 1) throw ValidationError("covariance_gap_trajectory: horizon must be >= 1");
    const RiccatiTrace central = riccati_run(model, model.P, horizon);
    const RiccatiTrace dist = riccati_run(model, model.P_star(), horizon);
    GapTrajectory out;
    double ups_k = 1.0;
    for (int k = 1; k <= horizon; ++k) {
        ups_k *= rep.upsilon;
        const Matrix& s = central.updated[static_cast<size_t>(k - 1)];
        const Matrix& s_star = dist.updated[static_cast<size_t>(k - 1)];
        GapRecord r;
        r.k = k;
        r.sigma_gap_norm = spectral_norm(s - s_star);
        r.gamma_gap_norm = spectral_norm(spd_inverse(s) - spd_inverse(s_star));
        r.delta_sigma = riemannian_distance(s, s_star);
        r.bound_sigma = rep.kappa * rep.sigma * ups_k;
        r.bound_gamma = rep.kappa * rep.omega * ups_k;
        r.bound_delta = ups_k * rep.delta_p;
        out.records.push_back(r);
    }
    return out;
}

/// One evaluation of the error-dynamics recursion
/// xtilde_{k+1|k} = H_k xtilde_{k|k-1} + a_k + b_k.
struct ErrorDynamicsStep {
    Matrix H_k;
    Vector a_k, b_k;
    Vector recursion;  // H_k xtilde + a_k + b_k
    Vector direct;     // xhat_{k+1|k} - xhat*_{k+1|k}, computed independently
};

/// Runs both filters on one measurement record and evaluates the error
/// recursion at every step against the directly computed gap.
inline std::vector<ErrorDynamicsStep> error_recursion_trace(
    const AggregatedModel& model, const NetworkModel& net,
    const std::vector<Vector>& measurements) {
    const CentralRun central = central_run(model, measurements);
    std::vector<std::vector<Vector>> per_node(net.subsystems.size());
    {
        std::vector<Eigen::Index> offs(net.subsystems.size());
        Eigen::Index off = 0;
        for (size_t i = 0; i < net.subsystems.size(); ++i) {
            offs[i] = off;
            off += net.subsystems[i].output_dim();
        }
        for (const auto& y : measurements)
            for (size_t i = 0; i < net.subsystems.size(); ++i)
                per_node[i].push_back(y.segment(offs[i], net.subsystems[i].output_dim()));
    }
    const DistributedRun dist = distributed_run(net, model.P, per_node);

    std::vector<ErrorDynamicsStep> out;
    const Eigen::Index n = model.n();
    const int horizon = static_cast<int>(measurements.size());
    for (int k = 1; k <= horizon; ++k) {
        const auto& s_upd = central.updated[static_cast<size_t>(k - 1)];
        const auto [x_star_upd, sigma_star_upd] = stack(dist.updated[static_cast<size_t>(k - 1)]);
        const auto [x_star_pred_prev, sp_unused] = stack(dist.predicted[static_cast<size_t>(k - 1)]);
        (void)sp_unused;

        ErrorDynamicsStep step;
        step.H_k = model.A * (Matrix::Identity(n, n) - s_upd.cov * model.U);
        const Matrix gamma = spd_inverse(s_upd.cov);
        const Matrix gamma_star = spd_inverse(sigma_star_upd);
        const Matrix gamma_tilde = gamma - gamma_star;
        const Matrix sigma_tilde = s_upd.cov - sigma_star_upd;
        step.a_k = model.A * s_upd.cov * gamma_tilde * x_star_pred_prev;
        step.b_k = model.A * sigma_tilde * gamma_star * x_star_upd;

        const Vector x_tilde_prev =
            central.predicted[static_cast<size_t>(k - 1)].mean - x_star_pred_prev;
        step.recursion = step.H_k * x_tilde_prev + step.a_k + step.b_k;
        const auto [x_star_pred, sp2_unused] = stack(dist.predicted[static_cast<size_t>(k)]);
        (void)sp2_unused;
        step.direct = central.predicted[static_cast<size_t>(k)].mean - x_star_pred;
        out.push_back(step);
    }
    return out;
}

/// Least-squares fit of d_k ~ A psi^k + B ups^k over records [1, fit_end],
/// scaled so the curve upper-bounds the fit window. Coefficients clamped
/// nonnegative; zero records are skipped.
inline std::pair<double, double> fit_two_exponential_envelope(const std::vector<double>& d,
                                                              double psi, double ups,
                                                              int fit_end) {
    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d atb = Eigen::Vector2d::Zero();
    for (int k = 1; k <= fit_end && k <= static_cast<int>(d.size()); ++k) {
        const double dk = d[static_cast<size_t>(k - 1)];
        if (!(dk > 0.0)) continue;
        const Eigen::Vector2d row(std::pow(psi, k), std::pow(ups, k));
        ata += row * row.transpose();
        atb += row * dk;
    }
    Eigen::Vector2d coef = ata.fullPivLu().solve(atb);
    if (coef(0) < 0.0) coef(0) = 0.0;
    if (coef(1) < 0.0) coef(1) = 0.0;
    if (coef(0) == 0.0 && coef(1) == 0.0) return {0.0, 0.0};
    double scale = 1.0;
    for (int k = 1; k <= fit_end && k <= static_cast<int>(d.size()); ++k) {
        const double dk = d[static_cast<size_t>(k - 1)];
        const double fk = coef(0) * std::pow(psi, k) + coef(1) * std::pow(ups, k);
        if (dk > 0.0 && fk > 0.0) scale = std::max(scale, dk / fk);
    }
    return {scale * coef(0), scale * coef(1)};
}

/// Monte-Carlo estimate of Delta_k = E(xtilde_{k|k-1} xtilde_{k|k-1}^T):
/// n_runs independent seeded trajectories, both filters per run, second
/// moments accumulated in fixed run order. Fills rep.lambda and the fitted
/// (A_eps, B_eps) envelope.
inline GapTrajectory estimate_gap_monte_carlo(const AggregatedModel& model,
                                              const NetworkModel& net, BoundReport& rep,
                                              int horizon, int n_runs, std::uint64_t seed,
                                              int fit_end = 15) {
    if (n_runs < 1) throw ValidationError("estimate_gap_monte_carlo: n_runs must be >= 1");
    const Eigen::Index n = model.n();
    std::vector<Matrix> delta_hat(static_cast<size_t>(horizon), Matrix::Zero(n, n));

    std::vector<Eigen::Index> offs(net.subsystems.size());
    {
        Eigen::Index off = 0;
        for (size_t i = 0; i < net.subsystems.size(); ++i) {
            offs[i] = off;
            off += net.subsystems[i].output_dim();
        }
    }
    for (int run = 0; run < n_runs; ++run) {
        const Trajectory traj = simulate(model, model.P, horizon, seed + static_cast<std::uint64_t>(run));
        const CentralRun central = central_run(model, traj.measurements);
        std::vector<std::vector<Vector>> per_node(net.subsystems.size());
        for (const auto& y : traj.measurements)
            for (size_t i = 0; i < net.subsystems.size(); ++i)
                per_node[i].push_back(y.segment(offs[i], net.subsystems[i].output_dim()));
        const DistributedRun dist = distributed_run(net, model.P, per_node);
        for (int k = 1; k <= horizon; ++k) {
            const auto [x_star, cov_unused] = stack(dist.predicted[static_cast<size_t>(k - 1)]);
            (void)cov_unused;
            const Vector gap = central.predicted[static_cast<size_t>(k - 1)].mean - x_star;
            delta_hat[static_cast<size_t>(k - 1)] += gap * gap.transpose();
        }
    }

    GapTrajectory out;
    std::vector<double> norms;
    for (int k = 1; k <= horizon; ++k) {
        GapRecord r;
        r.k = k;
        r.delta_hat_norm =
            spectral_norm(delta_hat[static_cast<size_t>(k - 1)] / static_cast<double>(n_runs));
        norms.push_back(r.delta_hat_norm);
        out.records.push_back(r);
    }

    // Empirical lambda: max over the run of zeta + 2 sqrt(zeta ||H_k||^2 ||Delta_hat_{k-1}||).
    const RiccatiTrace trace = riccati_run(model, model.P, horizon);
    double lambda = 0.0;
    for (int k = 2; k <= horizon; ++k) {
        const Matrix h_k = model.A * (Matrix::Identity(n, n) -
                                      trace.updated[static_cast<size_t>(k - 1)] * model.U);
        const double hn = spectral_norm(h_k);
        lambda = std::max(lambda, rep.zeta + 2.0 * std::sqrt(rep.zeta * hn * hn *
                                                             norms[static_cast<size_t>(k - 2)]));
    }
    rep.lambda = lambda;
    const auto [a_fit, b_fit] =
        fit_two_exponential_envelope(norms, rep.psi_eps, rep.upsilon, fit_end);
    rep.A_eps = a_fit;
    rep.B_eps = b_fit;
    return out;
}

} // namespace dkf
