#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "dkf/kalman_central.hpp"

namespace dkf {

/// Per-node filter state over the node's own substate x^(i).
struct NodeFilterState {
    int index = 0;  // 1-based
    GaussianBelief belief;
    Matrix gain;  // last local gain K_k^(i), n_i x p_i
};

struct MeasurementBroadcast {
    int sender = 0;
    int step = 0;
    Vector y;
};

/// Prediction at node i: mean <- A_i mean + sum_{j in N_i} L_ij y_k^(j),
/// cov <- A_i cov A_i^T + Q_i. The inbox must hold exactly the broadcasts of
/// the node's neighbors at the current step.
inline NodeFilterState node_predict(const NodeFilterState& state,
                                    const std::vector<MeasurementBroadcast>& inbox,
                                    const NetworkModel& net) {
    if (state.belief.kind != BeliefKind::Updated)
        throw InconsistentStep("node_predict expects an updated (k|k) belief");
    const auto& sub = net.node(state.index);
    const auto neigh = net.neighbors(state.index);

    std::map<int, const MeasurementBroadcast*> by_sender;
    for (const auto& b : inbox) {
        if (b.step != state.belief.step)
            throw StaleBroadcast("node " + std::to_string(state.index) + ": broadcast from " +
                                 std::to_string(b.sender) + " is for step " +
                                 std::to_string(b.step) + ", expected " +
                                 std::to_string(state.belief.step));
        by_sender[b.sender] = &b;
    }
    std::string missing;
    for (int j : neigh)
        if (!by_sender.count(j)) missing += (missing.empty() ? "" : ", ") + std::to_string(j);
    if (!missing.empty())
        throw MissingBroadcast("node " + std::to_string(state.index) +
                               ": missing broadcasts from neighbors {" + missing + "}");

    NodeFilterState out = state;
    Vector coupled = Vector::Zero(sub.state_dim());
    for (int j : neigh) {
        const Matrix& Lij = net.couplings.at({state.index, j});
        const Vector& yj = by_sender.at(j)->y;
        if (yj.size() != Lij.cols())
            throw DimensionMismatch("broadcast from " + std::to_string(j) + " has dimension " +
                                    std::to_string(yj.size()) + ", expected " +
                                    std::to_string(Lij.cols()));
        coupled += Lij * yj;
    }
    out.belief.mean = sub.A * state.belief.mean + coupled;
    out.belief.cov = symmetrize(sub.A * state.belief.cov * sub.A.transpose() + sub.Q);
    out.belief.kind = BeliefKind::Predicted;
    out.belief.step = state.belief.step + 1;
    return out;
}

/// Local measurement update, mirroring the centralized update on block i.
inline NodeFilterState node_update(const NodeFilterState& state, const Vector& y,
                                   const SubsystemModel& sub) {
    if (state.belief.kind != BeliefKind::Predicted)
        throw InconsistentStep("node_update expects a predicted (k|k-1) belief");
    if (y.size() != sub.output_dim())
        throw DimensionMismatch("node " + std::to_string(state.index) +
                                ": measurement has dimension " + std::to_string(y.size()) +
                                ", expected " + std::to_string(sub.output_dim()));
    NodeFilterState out = state;
    try {
        out.gain = detail::kalman_gain(state.belief.cov, sub.C, sub.R);
    } catch (const SingularInnovation& e) {
        throw SingularInnovation("node " + std::to_string(state.index) + ": " + e.what());
    }
    out.belief.mean = state.belief.mean + out.gain * (y - sub.C * state.belief.mean);
    out.belief.cov = detail::joseph_update(state.belief.cov, out.gain, sub.C, sub.R);
    out.belief.kind = BeliefKind::Updated;
    return out;
}

/// One bulk-synchronous round at step k: every node broadcasts y_k^(i), then
/// updates with its own measurement and predicts using the round's inboxes.
inline std::vector<NodeFilterState> network_step(const std::vector<NodeFilterState>& states,
                                                 const std::vector<Vector>& measurements,
                                                 const NetworkModel& net) {
    if (states.size() != net.subsystems.size() || measurements.size() != net.subsystems.size())
        throw DimensionMismatch("network_step: expected one state and one measurement per node");
    const int step = states.front().belief.step;
    for (const auto& s : states)
        if (s.belief.step != step)
            throw InconsistentStep("network_step: node " + std::to_string(s.index) +
                                   " is at step " + std::to_string(s.belief.step) +
                                   ", expected " + std::to_string(step));

    std::vector<NodeFilterState> out(states.size());
    for (size_t idx = 0; idx < states.size(); ++idx) {
        const int i = static_cast<int>(idx) + 1;
        try {
            NodeFilterState upd = node_update(states[idx], measurements[idx], net.node(i));
            std::vector<MeasurementBroadcast> inbox;
            for (int j : net.neighbors(i))
                inbox.push_back({j, upd.belief.step, measurements[static_cast<size_t>(j - 1)]});
            out[idx] = node_predict(upd, inbox, net);
        } catch (const Error& e) {
            throw Error("network_step: node " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

/// Concatenated mean and block-diagonal covariance of the node states.
inline std::pair<Vector, Matrix> stack(const std::vector<NodeFilterState>& states) {
    if (states.empty()) throw ValidationError("stack: empty state list");
    const int step = states.front().belief.step;
    const BeliefKind kind = states.front().belief.kind;
    for (const auto& s : states)
        if (s.belief.step != step || s.belief.kind != kind)
            throw InconsistentStep("stack: node " + std::to_string(s.index) +
                                   " has inconsistent step or kind");
    Eigen::Index n = 0;
    for (const auto& s : states) n += s.belief.mean.size();
    Vector mean(n);
    std::vector<Matrix> covs;
    Eigen::Index off = 0;
    for (const auto& s : states) {
        mean.segment(off, s.belief.mean.size()) = s.belief.mean;
        covs.push_back(s.belief.cov);
        off += s.belief.mean.size();
    }
    return {mean, block_diag(covs)};
}

/// Full trajectory of the distributed filter (stacked views per step).
struct DistributedRun {
    std::vector<std::vector<NodeFilterState>> updated;    // k|k for k = 1..K
    std::vector<std::vector<NodeFilterState>> predicted;  // k+1|k for k = 0..K
};

/// Runs the distributed filter from per-node (0, P_i) over per-node
/// measurement sequences y_1..y_K. Initialization mirrors central_run: the
/// k = 0 prediction has no broadcasts, so each node predicts uncoupled.
inline DistributedRun distributed_run(const NetworkModel& net, const Matrix& joint_p,
                                      const std::vector<std::vector<Vector>>& measurements) {
    const size_t node_count = net.subsystems.size();
    if (measurements.size() != node_count)
        throw DimensionMismatch("distributed_run: expected one measurement sequence per node");
    const size_t horizon = measurements.front().size();
    for (const auto& seq : measurements)
        if (seq.size() != horizon)
            throw DimensionMismatch("distributed_run: measurement sequences differ in length");

    std::vector<NodeFilterState> states(node_count);
    Eigen::Index off = 0;
    for (size_t idx = 0; idx < node_count; ++idx) {
        const auto& sub = net.subsystems[idx];
        states[idx].index = sub.index;
        states[idx].belief.mean = Vector::Zero(sub.state_dim());
        states[idx].belief.cov = joint_p.block(off, off, sub.state_dim(), sub.state_dim());
        states[idx].belief.kind = BeliefKind::Updated;
        states[idx].belief.step = 0;
        off += sub.state_dim();
    }

    DistributedRun run;
    // k = 0 prediction without measurement coupling.
    for (auto& s : states) {
        const auto& sub = net.node(s.index);
        s.belief.mean = sub.A * s.belief.mean;
        s.belief.cov = symmetrize(sub.A * s.belief.cov * sub.A.transpose() + sub.Q);
        s.belief.kind = BeliefKind::Predicted;
        s.belief.step = 1;
    }
    run.predicted.push_back(states);

    for (size_t k = 0; k < horizon; ++k) {
        std::vector<Vector> y_k(node_count);
        for (size_t idx = 0; idx < node_count; ++idx) y_k[idx] = measurements[idx][k];
        std::vector<NodeFilterState> updated(node_count);
        for (size_t idx = 0; idx < node_count; ++idx) {
            const int i = static_cast<int>(idx) + 1;
            updated[idx] = node_update(states[idx], y_k[idx], net.node(i));
        }
        run.updated.push_back(updated);
        for (size_t idx = 0; idx < node_count; ++idx) {
            const int i = static_cast<int>(idx) + 1;
            std::vector<MeasurementBroadcast> inbox;
            for (int j : net.neighbors(i))
                inbox.push_back({j, updated[idx].belief.step, y_k[static_cast<size_t>(j - 1)]});
            states[idx] = node_predict(updated[idx], inbox, net);
        }
        run.predicted.push_back(states);
    }
    return run;
}

} // namespace dkf
