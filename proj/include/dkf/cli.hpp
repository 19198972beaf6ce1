#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dkf/config.hpp"
#include "dkf/experiments.hpp"

namespace dkf {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kRngId = "mt19937_64+box-muller";

enum class Command { RunCentral, RunDistributed, Compare, Bounds, PropertySuite, Fig2, Fig3 };

struct ExperimentSpec {
    Command command = Command::Compare;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<int> horizon_override;
    std::optional<int> runs_override;
    double eps = 1.1;
};

// Exit codes, documented in --help.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitParseError = 2,
    kExitValidationError = 3,
    kExitDimensionMismatch = 4,
    kExitNonSpd = 5,
    kExitSingular = 6,
    kExitNoConvergence = 7,
    kExitProtocolError = 8,
};

namespace detail {

/// Locale-independent decimal formatting with 17 significant digits.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
}

} // namespace detail

inline std::string gap_trajectory_csv(const GapTrajectory& gaps, Eigen::Index n) {
    std::ostringstream out;
    out << "k";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",xtilde_" << i;
    out << ",xtilde_norm,sigma_tilde_norm,delta_sigma,bound_kappa_sigma_upsilon_k,"
           "delta_hat_norm\n";
    for (const auto& r : gaps.records) {
        out << r.k;
        for (Eigen::Index i = 0; i < n; ++i)
            out << "," << detail::fmt(r.x_gap.size() == n ? r.x_gap(i) : 0.0);
        out << "," << detail::fmt(r.x_gap_norm) << "," << detail::fmt(r.sigma_gap_norm) << ","
            << detail::fmt(r.delta_sigma) << "," << detail::fmt(r.bound_sigma) << ","
            << detail::fmt(r.delta_hat_norm) << "\n";
    }
    return out.str();
}

inline std::string bound_report_csv(const BoundReport& rep) {
    std::ostringstream out;
    out << "name,value\n";
    const std::vector<std::pair<const char*, double>> rows = {
        {"sigma", rep.sigma},       {"omega", rep.omega},
        {"upsilon1", rep.upsilon1}, {"upsilon2", rep.upsilon2},
        {"upsilon", rep.upsilon},   {"kappa", rep.kappa},
        {"delta_p_pstar", rep.delta_p}, {"rho_H_bar", rep.rho_H_bar},
        {"zeta", rep.zeta},         {"alpha", rep.alpha},
        {"beta", rep.beta},         {"lambda", rep.lambda},
        {"eps", rep.eps},           {"psi_eps", rep.psi_eps},
        {"phi_eps", rep.phi_eps},   {"A_eps", rep.A_eps},
        {"B_eps", rep.B_eps},       {"k_eps", static_cast<double>(rep.k_eps)},
        {"u_singular", rep.u_singular ? 1.0 : 0.0},
    };
    for (const auto& [name, value] : rows) out << name << "," << detail::fmt(value) << "\n";
    return out.str();
}

inline std::string estimates_csv(const std::vector<Vector>& means) {
    std::ostringstream out;
    const Eigen::Index n = means.empty() ? 0 : means.front().size();
    out << "k";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",xhat_" << i;
    out << "\n";
    for (size_t k = 0; k < means.size(); ++k) {
        out << (k + 1);
        for (Eigen::Index i = 0; i < n; ++i) out << "," << detail::fmt(means[k](i));
        out << "\n";
    }
    return out.str();
}

inline std::string manifest_json(const ExperimentSpec& spec, const SimConfig& cfg,
                                 const std::string& config_text) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["rng"] = kRngId;
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    j["runs"] = cfg.n_runs;
    j["eps"] = spec.eps;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(config_text)));
    j["config_hash"] = hash;
    j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    return j.dump(2) + "\n";
}

/// Randomized property checks exposed as the `property-suite` command.
/// Returns the number of violations and fills a human-readable summary.
inline int run_property_suite(std::string& summary) {
    GaussianSource rng(424242);
    auto random_spd = [&](Eigen::Index n) {
        Matrix g(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.standard_normal();
        return Matrix(symmetrize(g * g.transpose() + 0.1 * Matrix::Identity(n, n)));
    };
    int violations = 0;
    std::ostringstream out;

    int bad = 0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform01() * 6) % 6;
        const Matrix p = random_spd(n), q = random_spd(n);
        if (riemannian_distance(p, p) > 1e-10) ++bad;
        const double d1 = riemannian_distance(p, q);
        if (std::abs(d1 - riemannian_distance(q, p)) > 1e-10) ++bad;
        if (std::abs(d1 - riemannian_distance(spd_inverse(p), spd_inverse(q))) > 1e-10) ++bad;
    }
    out << "riemannian symmetry/inversion-invariance: " << (bad ? "FAIL" : "ok") << "\n";
    violations += bad;

    bad = 0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform01() * 6) % 6;
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform01() * 6) % 6;
        Matrix b(m, n);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.standard_normal();
        const auto [lhs, rhs] = contraction_check(random_spd(n), random_spd(n), random_spd(m), b);
        if (lhs > rhs + 1e-10) ++bad;
    }
    out << "riemannian contraction inequality: " << (bad ? "FAIL" : "ok") << "\n";
    violations += bad;

    bad = 0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform01() * 6) % 6;
        const Matrix q = random_spd(n);
        const Matrix p = symmetrize(q + random_spd(n));
        const auto [lhs, rhs] = norm_gap_bound_check(p, q);
        if (lhs > rhs + 1e-10) ++bad;
    }
    out << "riemannian norm-gap inequality: " << (bad ? "FAIL" : "ok") << "\n";
    violations += bad;

    bad = 0;
    for (double x = -5.0; x <= 5.0 + 1e-12; x += 0.01)
        for (double y = 0.0; y <= 1.0 + 1e-12; y += 0.01) {
            const auto [lhs, rhs] = exp_interpolation_check(x, std::min(y, 1.0));
            if (lhs > rhs + 1e-12) ++bad;
        }
    out << "exp interpolation inequality grid: " << (bad ? "FAIL" : "ok") << "\n";
    violations += bad;

    bad = 0;
    for (int t = 0; t < 500; ++t) {
        const Eigen::Index top = 1 + static_cast<Eigen::Index>(rng.uniform01() * 5) % 5;
        const Eigen::Index bot = 1 + static_cast<Eigen::Index>(rng.uniform01() * 5) % 5;
        Matrix g(top + bot, top + bot);
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.standard_normal();
        const Matrix psd = symmetrize(g * g.transpose());
        const auto [lhs, rhs] = psd_offdiag_check(psd, top);
        if (lhs > rhs + 1e-10) ++bad;
    }
    out << "psd off-diagonal block bound: " << (bad ? "FAIL" : "ok") << "\n";
    violations += bad;

    summary = out.str();
    return violations;
}

/// Executes a parsed experiment spec: runs the requested command and writes
/// the CSV outputs plus a run manifest into the output directory.
inline int execute(const ExperimentSpec& spec, std::string* message = nullptr) {
    auto fail = [&](int code, const std::string& what) {
        if (message) *message = what;
        try {
            std::filesystem::create_directories(spec.out_dir);
            nlohmann::json err;
            err["error"] = what;
            err["exit_code"] = code;
            detail::write_file(std::filesystem::path(spec.out_dir) / "error.json",
                               err.dump(2) + "\n");
        } catch (...) {
        }
        return code;
    };
    try {
        if (spec.command == Command::PropertySuite) {
            std::string summary;
            const int violations = run_property_suite(summary);
            if (message) *message = summary;
            return violations == 0 ? kExitOk : kExitFailure;
        }

        std::ifstream in(spec.config_path, std::ios::binary);
        if (!in) return fail(kExitValidationError, "cannot read config " + spec.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string config_text = buf.str();
        auto [net, cfg] = parse_config(config_text);
        if (spec.seed_override) cfg.seed = *spec.seed_override;
        if (spec.horizon_override) cfg.horizon = *spec.horizon_override;
        if (spec.runs_override) cfg.n_runs = *spec.runs_override;

        std::filesystem::create_directories(spec.out_dir);
        const std::filesystem::path out(spec.out_dir);
        AggregatedModel model = aggregate(net);

        switch (spec.command) {
            case Command::RunCentral:
            case Command::RunDistributed: {
                model.P = draw_initial_covariance(model, cfg);
                const Trajectory traj = simulate(model, model.P, cfg.horizon, cfg.seed);
                std::vector<Vector> means;
                if (spec.command == Command::RunCentral) {
                    const CentralRun run = central_run(model, traj.measurements);
                    for (const auto& b : run.updated) means.push_back(b.mean);
                } else {
                    std::vector<Eigen::Index> offs(net.subsystems.size());
                    Eigen::Index off = 0;
                    for (size_t i = 0; i < net.subsystems.size(); ++i) {
                        offs[i] = off;
                        off += net.subsystems[i].output_dim();
                    }
                    std::vector<std::vector<Vector>> per_node(net.subsystems.size());
                    for (const auto& y : traj.measurements)
                        for (size_t i = 0; i < net.subsystems.size(); ++i)
                            per_node[i].push_back(
                                y.segment(offs[i], net.subsystems[i].output_dim()));
                    const DistributedRun run = distributed_run(net, model.P, per_node);
                    for (const auto& states : run.updated) {
                        auto [mean, cov_unused] = stack(states);
                        (void)cov_unused;
                        means.push_back(mean);
                    }
                }
                detail::write_file(out / "estimates.csv", estimates_csv(means));
                break;
            }
            case Command::Compare: {
                model.P = draw_initial_covariance(model, cfg);
                const BoundReport rep = compute_bound_report(model, spec.eps);
                const GapTrajectory gaps =
                    compare_filters_single_run(model, net, rep, cfg.horizon, cfg.seed);
                detail::write_file(out / "gap_trajectory.csv",
                                   gap_trajectory_csv(gaps, model.n()));
                detail::write_file(out / "bound_report.csv", bound_report_csv(rep));
                break;
            }
            case Command::Bounds: {
                model.P = draw_initial_covariance(model, cfg);
                BoundReport rep = compute_bound_report(model, spec.eps);
                const GapTrajectory gaps = estimate_gap_monte_carlo(
                    model, net, rep, cfg.horizon, cfg.n_runs, cfg.seed);
                detail::write_file(out / "bound_report.csv", bound_report_csv(rep));
                detail::write_file(out / "gap_trajectory.csv",
                                   gap_trajectory_csv(gaps, model.n()));
                break;
            }
            case Command::Fig2: {
                BoundReport rep;
                const GapTrajectory gaps = run_experiment_fig2(net, cfg, &rep);
                detail::write_file(out / "gap_trajectory.csv",
                                   gap_trajectory_csv(gaps, model.n()));
                detail::write_file(out / "bound_report.csv", bound_report_csv(rep));
                break;
            }
            case Command::Fig3: {
                BoundReport rep;
                const GapTrajectory gaps = run_experiment_fig3(net, cfg, &rep);
                detail::write_file(out / "gap_trajectory.csv",
                                   gap_trajectory_csv(gaps, model.n()));
                detail::write_file(out / "bound_report.csv", bound_report_csv(rep));
                break;
            }
            case Command::PropertySuite:
                break;  // handled above
        }
        detail::write_file(out / "manifest.json", manifest_json(spec, cfg, config_text));
        return kExitOk;
    } catch (const ParseError& e) {
        return fail(kExitParseError, e.what());
    } catch (const ValidationError& e) {
        return fail(kExitValidationError, e.what());
    } catch (const DimensionMismatch& e) {
        return fail(kExitDimensionMismatch, e.what());
    } catch (const NonSpd& e) {
        return fail(kExitNonSpd, e.what());
    } catch (const SingularInnovation& e) {
        return fail(kExitSingular, e.what());
    } catch (const SingularCovariance& e) {
        return fail(kExitSingular, e.what());
    } catch (const SingularU& e) {
        return fail(kExitSingular, e.what());
    } catch (const NoConvergence& e) {
        return fail(kExitNoConvergence, e.what());
    } catch (const MissingBroadcast& e) {
        return fail(kExitProtocolError, e.what());
    } catch (const StaleBroadcast& e) {
        return fail(kExitProtocolError, e.what());
    } catch (const InconsistentStep& e) {
        return fail(kExitProtocolError, e.what());
    } catch (const std::exception& e) {
        return fail(kExitFailure, e.what());
    }
}

} // namespace dkf
