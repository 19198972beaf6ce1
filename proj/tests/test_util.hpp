#pragma once

// Shared helpers for the test suites: random model generation and the
// joint-Gaussian conditioning oracle. The oracle deliberately avoids every
// filter code path: it unrolls the generative model into one large linear
// map over the independent noise vector and conditions analytically.

#include <vector>

#include "dkf/analysis.hpp"
#include "dkf/sim.hpp"

namespace testutil {

using dkf::Matrix;
using dkf::Vector;

inline Matrix random_matrix(dkf::GaussianSource& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.standard_normal();
    return m;
}

inline Matrix random_spd(dkf::GaussianSource& rng, Eigen::Index n, double ridge = 0.1) {
    const Matrix g = random_matrix(rng, n, n);
    return dkf::symmetrize(g * g.transpose() + ridge * Matrix::Identity(n, n));
}

/// Random coupled network with small dimensions and a stable aggregated A.
inline dkf::NetworkModel random_network(dkf::GaussianSource& rng, int max_nodes = 3) {
    const int node_count = 1 + static_cast<int>(rng.uniform01() * max_nodes) % max_nodes;
    std::vector<dkf::SubsystemModel> subs;
    for (int i = 1; i <= node_count; ++i) {
        dkf::SubsystemModel s;
        s.index = i;
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform01() * 2) % 2;
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.uniform01() * 2) % 2;
        s.A = 0.4 * random_matrix(rng, n, n);
        s.C = random_matrix(rng, p, n);
        s.Q = random_spd(rng, n);
        s.R = random_spd(rng, p);
        s.P = random_spd(rng, n);
        subs.push_back(s);
    }
    dkf::CouplingMap couplings;
    for (int i = 1; i <= node_count; ++i)
        for (int j = 1; j <= node_count; ++j) {
            if (i == j || rng.uniform01() < 0.5) continue;
            couplings[{i, j}] = 0.2 * random_matrix(rng, subs[static_cast<size_t>(i - 1)].A.rows(),
                                                    subs[static_cast<size_t>(j - 1)].C.rows());
        }
    return dkf::build_network(std::move(subs), std::move(couplings));
}

/// E(x_k | y_1..y_k) for k = 1..K by brute-force joint-Gaussian conditioning.
/// Generative model: x_0 ~ N(0, P), x_1 = A x_0 + w_0, and for k >= 1
/// y_k = C x_k + v_k, x_{k+1} = Atilde x_k + w_k + L v_k.
inline std::vector<Vector> conditioning_oracle(const dkf::AggregatedModel& model,
                                               const std::vector<Vector>& measurements) {
    const Eigen::Index n = model.n();
    const Eigen::Index p = model.p();
    const int horizon = static_cast<int>(measurements.size());
    const Eigen::Index du = n + static_cast<Eigen::Index>(horizon) * (n + p);

    // Noise vector u = (x0, w_0..w_{K-1}, v_1..v_K); D = cov(u).
    std::vector<Matrix> dblocks = {model.P};
    for (int k = 0; k < horizon; ++k) dblocks.push_back(model.Q);
    for (int k = 0; k < horizon; ++k) dblocks.push_back(model.R);
    const Matrix d = dkf::block_diag(dblocks);

    auto w_selector = [&](int k) {
        Matrix s = Matrix::Zero(n, du);
        s.block(0, n + k * n, n, n) = Matrix::Identity(n, n);
        return s;
    };
    auto v_selector = [&](int k) {  // k = 1..K
        Matrix s = Matrix::Zero(p, du);
        s.block(0, n + horizon * n + (k - 1) * p, p, p) = Matrix::Identity(p, p);
        return s;
    };

    Matrix x0 = Matrix::Zero(n, du);
    x0.leftCols(n) = Matrix::Identity(n, n);
    std::vector<Matrix> x_coeff;  // x_k for k = 1..K
    std::vector<Matrix> y_coeff;  // y_k for k = 1..K
    Matrix xk = model.A * x0 + w_selector(0);
    for (int k = 1; k <= horizon; ++k) {
        x_coeff.push_back(xk);
        y_coeff.push_back(model.C * xk + v_selector(k));
        if (k < horizon)
            xk = model.A_tilde * xk + w_selector(k) + model.L * v_selector(k);
    }

    std::vector<Vector> out;
    for (int k = 1; k <= horizon; ++k) {
        Matrix ys(static_cast<Eigen::Index>(k) * p, du);
        Vector yobs(static_cast<Eigen::Index>(k) * p);
        for (int m = 1; m <= k; ++m) {
            ys.middleRows(static_cast<Eigen::Index>(m - 1) * p, p) =
                y_coeff[static_cast<size_t>(m - 1)];
            yobs.segment(static_cast<Eigen::Index>(m - 1) * p, p) =
                measurements[static_cast<size_t>(m - 1)];
        }
        const Matrix cov_yy = ys * d * ys.transpose();
        const Matrix cov_xy = x_coeff[static_cast<size_t>(k - 1)] * d * ys.transpose();
        out.push_back(cov_xy * dkf::symmetrize(cov_yy).ldlt().solve(yobs));
    }
    return out;
}

/// Splits a stacked measurement into per-node segments.
inline std::vector<std::vector<Vector>> split_measurements(const dkf::NetworkModel& net,
                                                           const std::vector<Vector>& ys) {
    std::vector<std::vector<Vector>> per_node(net.subsystems.size());
    Eigen::Index off = 0;
    std::vector<Eigen::Index> offs;
    for (const auto& s : net.subsystems) {
        offs.push_back(off);
        off += s.output_dim();
    }
    for (const auto& y : ys)
        for (size_t i = 0; i < net.subsystems.size(); ++i)
            per_node[i].push_back(y.segment(offs[i], net.subsystems[i].output_dim()));
    return per_node;
}

} // namespace testutil
