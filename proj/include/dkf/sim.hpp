#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "dkf/netmodel.hpp"

namespace dkf {

/// Deterministic Gaussian source: mt19937_64 driving a Box-Muller transform.
/// The uniform mapping (53-bit mantissa) and the transform are spelled out so
/// that identical seeds give bit-identical streams across standard libraries.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {  // in (0, 1]
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double standard_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Vector normal_vector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal();
        return v;
    }

    /// Draw from N(0, cov) via a symmetric PSD square root of cov, so that
    /// semidefinite covariances (including 0) are valid.
    Vector multivariate_normal(const Matrix& cov) {
        if (!is_symmetric(cov) || min_eigenvalue(symmetrize(cov)) < -1e-10 * spectral_norm(cov))
            throw NonSpd("sampling covariance is not symmetric PSD");
        return spd_sqrt(cov) * normal_vector(cov.rows());
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

enum class InitialCovarianceMode { BlockDiagonalScalar, RandomSpd, Explicit };

struct SimConfig {
    int horizon = 60;
    std::uint64_t seed = 0;
    InitialCovarianceMode cov_mode = InitialCovarianceMode::Explicit;
    double eps0 = 0.1;            // ridge for the random SPD mode P = G G^T + eps0 I
    double eps1_floor = 0.01;     // floor for the scalar mode P = eps1 I, eps1 ~ U(0,1)
    std::optional<Matrix> explicit_p;
    int n_runs = 100;             // Monte-Carlo batch size
};

/// One simulated trajectory with its noise draws retained so the recursion
/// can be re-audited exactly.
struct Trajectory {
    std::vector<Vector> states;        // x_k for k = 0..K
    std::vector<Vector> measurements;  // y_k for k = 1..K (measurements[k-1] is y_k)
    std::vector<Vector> process_noise;      // w_k for k = 0..K-1
    std::vector<Vector> measurement_noise;  // v_k for k = 1..K

    /// Max residual of x_{k+1} = Atilde x_k + w_k + L v_k over the coupled
    /// steps (k >= 1); the k = 0 transition is x_1 = A x_0 + w_0.
    double recursion_residual(const AggregatedModel& model) const {
        double worst = 0.0;
        if (!states.empty()) {
            const Vector r0 = states[1] - (model.A * states[0] + process_noise[0]);
            worst = r0.cwiseAbs().maxCoeff();
        }
        for (size_t k = 1; k + 1 < states.size(); ++k) {
            const Vector r = states[k + 1] - (model.A_tilde * states[k] + process_noise[k] +
                                              model.L * measurement_noise[k - 1]);
            worst = std::max(worst, r.cwiseAbs().maxCoeff());
        }
        return worst;
    }
};

/// Materialize the joint initial covariance requested by the config.
/// The random draws come from their own deterministic stream (seed + 1) so
/// the trajectory noise stream is unaffected by the covariance mode.
inline Matrix draw_initial_covariance(const AggregatedModel& model, const SimConfig& cfg) {
    switch (cfg.cov_mode) {
        case InitialCovarianceMode::Explicit: {
            if (!cfg.explicit_p) return model.P;
            if (cfg.explicit_p->rows() != model.n() || cfg.explicit_p->cols() != model.n())
                throw DimensionMismatch("explicit initial covariance has wrong size");
            require_spd(*cfg.explicit_p, "explicit initial covariance");
            return *cfg.explicit_p;
        }
        case InitialCovarianceMode::RandomSpd: {
            GaussianSource rng(cfg.seed + 1);
            const Eigen::Index n = model.n();
            Matrix g(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.uniform01();
            return symmetrize(g * g.transpose() + cfg.eps0 * Matrix::Identity(n, n));
        }
        case InitialCovarianceMode::BlockDiagonalScalar: {
            GaussianSource rng(cfg.seed + 1);
            const double eps1 = std::max(cfg.eps1_floor, rng.uniform01());
            return eps1 * Matrix::Identity(model.n(), model.n());
        }
    }
    throw ValidationError("unknown initial covariance mode");
}

/// Simulate the coupled network: x_0 ~ N(0, P); x_1 = A x_0 + w_0; then for
/// k = 1..K-1: y_k = C x_k + v_k and x_{k+1} = A x_k + L y_k + w_k, with the
/// same v_k feeding both the measurement and the coupled transition.
inline Trajectory simulate(const AggregatedModel& model, const Matrix& initial_p,
                           int horizon, std::uint64_t seed) {
    if (horizon < 1) throw ValidationError("simulate: horizon must be >= 1");
    GaussianSource rng(seed);
    Trajectory traj;
    Vector x = rng.multivariate_normal(initial_p);
    traj.states.push_back(x);
    Vector w = rng.multivariate_normal(model.Q);
    traj.process_noise.push_back(w);
    x = model.A * x + w;
    traj.states.push_back(x);
    for (int k = 1; k <= horizon; ++k) {
        const Vector v = rng.multivariate_normal(model.R);
        traj.measurement_noise.push_back(v);
        const Vector y = model.C * x + v;
        traj.measurements.push_back(y);
        if (k < horizon) {
            w = rng.multivariate_normal(model.Q);
            traj.process_noise.push_back(w);
            x = model.A * x + model.L * y + w;
            traj.states.push_back(x);
        }
    }
    return traj;
}

/// The default five-agent benchmark: scalar single integrators with a pole at
/// 0.2, C = 1, Q = R = 0.1, undirected path graph 1-2-3-4-5 with gain 0.3 on
/// every edge. The edge set is a convention, configurable via the config file.
inline NetworkModel default_five_agent_network(double coupling_gain = 0.3) {
    std::vector<SubsystemModel> subs;
    for (int i = 1; i <= 5; ++i) {
        SubsystemModel s;
        s.index = i;
        s.A = Matrix::Constant(1, 1, 0.2);
        s.C = Matrix::Constant(1, 1, 1.0);
        s.Q = Matrix::Constant(1, 1, 0.1);
        s.R = Matrix::Constant(1, 1, 0.1);
        s.P = Matrix::Constant(1, 1, 0.1);
        subs.push_back(s);
    }
    CouplingMap couplings;
    for (int i = 1; i <= 4; ++i) {
        couplings[{i, i + 1}] = Matrix::Constant(1, 1, coupling_gain);
        couplings[{i + 1, i}] = Matrix::Constant(1, 1, coupling_gain);
    }
    return build_network(std::move(subs), std::move(couplings));
}

} // namespace dkf
