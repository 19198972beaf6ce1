#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dkf/linalg.hpp"

namespace dkf {

/// One node of the network: local dynamics, output map and noise statistics.
struct SubsystemModel {
    int index = 0;   // 1-based
    Matrix A;        // n_i x n_i
    Matrix C;        // p_i x n_i
    Matrix Q;        // n_i x n_i, SPD process-noise covariance
    Matrix R;        // p_i x p_i, SPD measurement-noise covariance
    Matrix P;        // n_i x n_i, SPD initial state covariance block

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index output_dim() const { return C.rows(); }

    void validate() const {
        const std::string tag = "subsystem " + std::to_string(index);
        if (A.rows() != A.cols())
            throw DimensionMismatch(tag + ": A is not square");
        if (C.cols() != A.rows())
            throw DimensionMismatch(tag + ": C has " + std::to_string(C.cols()) +
                                    " columns, expected " + std::to_string(A.rows()));
        if (Q.rows() != A.rows() || Q.cols() != A.rows())
            throw DimensionMismatch(tag + ": Q must be " + std::to_string(A.rows()) + "x" +
                                    std::to_string(A.rows()));
        if (R.rows() != C.rows() || R.cols() != C.rows())
            throw DimensionMismatch(tag + ": R must be " + std::to_string(C.rows()) + "x" +
                                    std::to_string(C.rows()));
        if (P.rows() != A.rows() || P.cols() != A.rows())
            throw DimensionMismatch(tag + ": P must be " + std::to_string(A.rows()) + "x" +
                                    std::to_string(A.rows()));
        require_spd(Q, tag + ": Q");
        require_spd(R, tag + ": R");
        require_spd(P, tag + ": P");
    }
};

using CouplingKey = std::pair<int, int>;  // (i, j), both 1-based
using CouplingMap = std::map<CouplingKey, Matrix>;

/// The network: subsystems plus sparse coupling gains L^(i,j).
/// Neighbor sets are the support of the coupling map, N_i = { j : L_ij != 0 }.
struct NetworkModel {
    std::vector<SubsystemModel> subsystems;
    CouplingMap couplings;

    int size() const { return static_cast<int>(subsystems.size()); }

    const SubsystemModel& node(int i) const { return subsystems.at(static_cast<size_t>(i - 1)); }

    std::set<int> neighbors(int i) const {
        std::set<int> out;
        for (const auto& [key, L] : couplings)
            if (key.first == i && L.cwiseAbs().maxCoeff() != 0.0) out.insert(key.second);
        return out;
    }

    /// Nodes that must receive i's measurement broadcast: { i' : i in N_{i'} }.
    std::set<int> broadcast_targets(int i) const {
        std::set<int> out;
        for (const auto& [key, L] : couplings)
            if (key.second == i && L.cwiseAbs().maxCoeff() != 0.0) out.insert(key.first);
        return out;
    }

    std::vector<Eigen::Index> state_dims() const {
        std::vector<Eigen::Index> out;
        for (const auto& s : subsystems) out.push_back(s.state_dim());
        return out;
    }

    std::vector<Eigen::Index> output_dims() const {
        std::vector<Eigen::Index> out;
        for (const auto& s : subsystems) out.push_back(s.output_dim());
        return out;
    }
};

/// Aggregated global model: block-diagonal A, C, Q, R, the assembled coupling
/// matrix L, and the derived transition/noise statistics of the stacked system.
struct AggregatedModel {
    Matrix A, C, Q, R;   // block-diagonal
    Matrix L;            // n x p, assembled from the coupling map
    Matrix P;            // n x n joint initial covariance
    Matrix A_tilde;      // A + L C
    Matrix Q_tilde;      // Q + L R L^T
    Matrix S_tilde;      // L R
    Matrix U;            // C^T R^-1 C
    std::vector<Eigen::Index> state_dims;
    std::vector<Eigen::Index> output_dims;

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index p() const { return C.rows(); }

    /// P with off-diagonal blocks zeroed (the distributed filter's initial covariance).
    Matrix P_star() const { return block_diagonal_extract(P, state_dims); }
};

inline NetworkModel build_network(std::vector<SubsystemModel> subsystems, CouplingMap couplings) {
    if (subsystems.empty()) throw ValidationError("network must contain at least one subsystem");
    for (size_t k = 0; k < subsystems.size(); ++k) {
        if (subsystems[k].index != static_cast<int>(k) + 1)
            throw ValidationError("subsystem indices must be contiguous 1..I; position " +
                                  std::to_string(k + 1) + " has index " +
                                  std::to_string(subsystems[k].index));
        subsystems[k].validate();
    }
    const int count = static_cast<int>(subsystems.size());
    for (const auto& [key, L] : couplings) {
        const auto [i, j] = key;
        if (i < 1 || i > count || j < 1 || j > count)
            throw ValidationError("coupling (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") references an unknown subsystem");
        const auto& si = subsystems[static_cast<size_t>(i - 1)];
        const auto& sj = subsystems[static_cast<size_t>(j - 1)];
        if (L.rows() != si.state_dim() || L.cols() != sj.output_dim())
            throw DimensionMismatch("coupling (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") must be " + std::to_string(si.state_dim()) + "x" +
                                    std::to_string(sj.output_dim()) + ", got " +
                                    std::to_string(L.rows()) + "x" + std::to_string(L.cols()));
    }
    return NetworkModel{std::move(subsystems), std::move(couplings)};
}

inline AggregatedModel aggregate(const NetworkModel& net,
                                 const std::optional<Matrix>& p_joint = std::nullopt) {
    AggregatedModel m;
    std::vector<Matrix> as, cs, qs, rs, ps;
    for (const auto& s : net.subsystems) {
        as.push_back(s.A);
        cs.push_back(s.C);
        qs.push_back(s.Q);
        rs.push_back(s.R);
        ps.push_back(s.P);
        m.state_dims.push_back(s.state_dim());
        m.output_dims.push_back(s.output_dim());
    }
    m.A = block_diag(as);
    m.C = block_diag(cs);
    m.Q = block_diag(qs);
    m.R = block_diag(rs);

    const Eigen::Index n = m.A.rows();
    const Eigen::Index p = m.C.rows();
    std::vector<Eigen::Index> row_off(net.subsystems.size()), col_off(net.subsystems.size());
    Eigen::Index r = 0, c = 0;
    for (size_t k = 0; k < net.subsystems.size(); ++k) {
        row_off[k] = r;
        col_off[k] = c;
        r += m.state_dims[k];
        c += m.output_dims[k];
    }
    m.L = Matrix::Zero(n, p);
    for (const auto& [key, Lij] : net.couplings) {
        const auto [i, j] = key;
        m.L.block(row_off[static_cast<size_t>(i - 1)], col_off[static_cast<size_t>(j - 1)],
                  Lij.rows(), Lij.cols()) = Lij;
    }

    if (p_joint) {
        if (p_joint->rows() != n || p_joint->cols() != n)
            throw DimensionMismatch("joint initial covariance must be " + std::to_string(n) + "x" +
                                    std::to_string(n));
        require_spd(*p_joint, "joint initial covariance P");
        m.P = *p_joint;
    } else {
        m.P = block_diag(ps);
    }

    m.A_tilde = m.A + m.L * m.C;
    m.Q_tilde = m.Q + m.L * m.R * m.L.transpose();
    m.S_tilde = m.L * m.R;
    m.U = m.C.transpose() * spd_solve(m.R, m.C, "R");
    m.U = symmetrize(m.U);
    return m;
}

} // namespace dkf
