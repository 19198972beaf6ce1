#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dkf/sim.hpp"

namespace dkf {

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ValidationError(name + ": expected a nested array of numbers");
    const size_t rows = j.size();
    const size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ValidationError(name + ": ragged rows (row " + std::to_string(r + 1) + ")");
        for (size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw ValidationError(name + ": non-numeric entry at (" + std::to_string(r + 1) +
                                      "," + std::to_string(c + 1) + ")");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline int line_of_offset(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

} // namespace detail

/// Parses the JSON experiment configuration into a validated network model
/// and simulation config. Parse failures carry the offending line number;
/// model violations surface as ValidationError / DimensionMismatch / NonSpd.
inline std::pair<NetworkModel, SimConfig> parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("line " + std::to_string(detail::line_of_offset(text, e.byte)) + ": " +
                         e.what());
    }
    if (!j.contains("subsystems") || !j["subsystems"].is_array() || j["subsystems"].empty())
        throw ValidationError("config must declare a nonempty \"subsystems\" array");

    std::vector<SubsystemModel> subs;
    int idx = 0;
    for (const auto& js : j["subsystems"]) {
        SubsystemModel s;
        s.index = ++idx;
        const std::string tag = "subsystem " + std::to_string(idx);
        for (const char* key : {"A", "C", "Q", "R", "P"})
            if (!js.contains(key))
                throw ValidationError(tag + ": missing matrix \"" + key + "\"");
        s.A = detail::matrix_from_json(js["A"], tag + ".A");
        s.C = detail::matrix_from_json(js["C"], tag + ".C");
        s.Q = detail::matrix_from_json(js["Q"], tag + ".Q");
        s.R = detail::matrix_from_json(js["R"], tag + ".R");
        s.P = detail::matrix_from_json(js["P"], tag + ".P");
        subs.push_back(std::move(s));
    }

    CouplingMap couplings;
    if (j.contains("couplings")) {
        for (const auto& jc : j["couplings"]) {
            if (!jc.contains("i") || !jc.contains("j") || !jc.contains("L"))
                throw ValidationError("coupling entries need fields i, j, L");
            const int i = jc["i"].get<int>();
            const int jj = jc["j"].get<int>();
            couplings[{i, jj}] = detail::matrix_from_json(
                jc["L"], "coupling (" + std::to_string(i) + "," + std::to_string(jj) + ")");
        }
    }
    NetworkModel net = build_network(std::move(subs), std::move(couplings));

    SimConfig cfg;
    cfg.horizon = j.value("horizon", 60);
    if (cfg.horizon < 1) throw ValidationError("horizon must be >= 1");
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.n_runs = j.value("runs", 100);
    if (j.contains("initial_covariance")) {
        const auto& ic = j["initial_covariance"];
        const std::string mode = ic.value("mode", "explicit");
        if (mode == "explicit") {
            cfg.cov_mode = InitialCovarianceMode::Explicit;
            if (ic.contains("matrix"))
                cfg.explicit_p = detail::matrix_from_json(ic["matrix"], "initial_covariance.matrix");
        } else if (mode == "random_spd") {
            cfg.cov_mode = InitialCovarianceMode::RandomSpd;
            cfg.eps0 = ic.value("eps0", 0.1);
            if (!(cfg.eps0 > 0.0)) throw ValidationError("initial_covariance.eps0 must be > 0");
        } else if (mode == "block_diagonal_scalar") {
            cfg.cov_mode = InitialCovarianceMode::BlockDiagonalScalar;
            cfg.eps1_floor = ic.value("eps1_floor", 0.01);
        } else {
            throw ValidationError("unknown initial_covariance.mode \"" + mode + "\"");
        }
    }
    return {std::move(net), cfg};
}

/// Serializes a model/config pair back to the config schema. Doubles are
/// emitted with shortest round-trip formatting, so parse-serialize-parse is
/// exact.
inline std::string serialize_config(const NetworkModel& net, const SimConfig& cfg) {
    nlohmann::json j;
    j["subsystems"] = nlohmann::json::array();
    for (const auto& s : net.subsystems) {
        nlohmann::json js;
        js["A"] = detail::matrix_to_json(s.A);
        js["C"] = detail::matrix_to_json(s.C);
        js["Q"] = detail::matrix_to_json(s.Q);
        js["R"] = detail::matrix_to_json(s.R);
        js["P"] = detail::matrix_to_json(s.P);
        j["subsystems"].push_back(js);
    }
    j["couplings"] = nlohmann::json::array();
    for (const auto& [key, L] : net.couplings) {
        nlohmann::json jc;
        jc["i"] = key.first;
        jc["j"] = key.second;
        jc["L"] = detail::matrix_to_json(L);
        j["couplings"].push_back(jc);
    }
    nlohmann::json ic;
    switch (cfg.cov_mode) {
        case InitialCovarianceMode::Explicit:
            ic["mode"] = "explicit";
            if (cfg.explicit_p) ic["matrix"] = detail::matrix_to_json(*cfg.explicit_p);
            break;
        case InitialCovarianceMode::RandomSpd:
            ic["mode"] = "random_spd";
            ic["eps0"] = cfg.eps0;
            break;
        case InitialCovarianceMode::BlockDiagonalScalar:
            ic["mode"] = "block_diagonal_scalar";
            ic["eps1_floor"] = cfg.eps1_floor;
            break;
    }
    j["initial_covariance"] = ic;
    j["horizon"] = cfg.horizon;
    j["seed"] = cfg.seed;
    j["runs"] = cfg.n_runs;
    return j.dump(2) + "\n";
}

} // namespace dkf
