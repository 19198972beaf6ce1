#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dkf/cli.hpp"
#include "test_util.hpp"

using dkf::Matrix;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"({
  "subsystems": [
    {"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]], "P": [[0.4]]}
  ]
})";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("dkf_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("minimal config parses with defaults") {
    auto [net, cfg] = dkf::parse_config(kMinimalConfig);
    REQUIRE(net.subsystems.size() == 1);
    CHECK(net.subsystems[0].A(0, 0) == 0.5);
    CHECK(net.couplings.empty());
    CHECK(cfg.horizon == 60);
    CHECK(cfg.seed == 0);
    CHECK(cfg.n_runs == 100);
    CHECK(cfg.cov_mode == dkf::InitialCovarianceMode::Explicit);
    CHECK_FALSE(cfg.explicit_p.has_value());
}

TEST_CASE("malformed JSON reports the offending line") {
    try {
        dkf::parse_config("{\n  \"subsystems\": [\n  oops\n  ]\n}");
        FAIL("expected ParseError");
    } catch (const dkf::ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("config validation errors are specific") {
    CHECK_THROWS_AS(dkf::parse_config("{}"), dkf::ValidationError);
    CHECK_THROWS_AS(dkf::parse_config(R"({"subsystems": []})"), dkf::ValidationError);
    CHECK_THROWS_AS(
        dkf::parse_config(
            R"({"subsystems": [{"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]]}]})"),
        dkf::ValidationError);
    CHECK_THROWS_AS(
        dkf::parse_config(
            R"({"subsystems": [{"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]],
                                "P": [[1, 2], [3]]}]})"),
        dkf::ValidationError);
    CHECK_THROWS_AS(
        dkf::parse_config(R"({"subsystems": [
            {"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]], "P": [[0.4]]}],
            "horizon": 0})"),
        dkf::ValidationError);
}

TEST_CASE("a wrong-shape coupling gain names the offending pair") {
    const char* text = R"({
      "subsystems": [
        {"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]], "P": [[0.4]]},
        {"A": [[0.5]], "C": [[1.0]], "Q": [[0.2]], "R": [[0.3]], "P": [[0.4]]}
      ],
      "couplings": [{"i": 1, "j": 2, "L": [[0.1], [0.2]]}]
    })";
    try {
        dkf::parse_config(text);
        FAIL("expected DimensionMismatch");
    } catch (const dkf::DimensionMismatch& e) {
        CHECK(std::string(e.what()).find("(1,2)") != std::string::npos);
    }
}

TEST_CASE("shipped five-agent config matches the built-in default network") {
    const char* dir = std::getenv("DKF_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    auto [net, cfg] = dkf::parse_config(read_file(fs::path(dir) / "five_agent.json"));
    auto ref = dkf::default_five_agent_network();
    REQUIRE(net.subsystems.size() == ref.subsystems.size());
    for (size_t i = 0; i < ref.subsystems.size(); ++i) {
        CHECK(net.subsystems[i].A == ref.subsystems[i].A);
        CHECK(net.subsystems[i].C == ref.subsystems[i].C);
        CHECK(net.subsystems[i].Q == ref.subsystems[i].Q);
        CHECK(net.subsystems[i].R == ref.subsystems[i].R);
        CHECK(net.subsystems[i].P == ref.subsystems[i].P);
    }
    REQUIRE(net.couplings.size() == ref.couplings.size());
    for (const auto& [key, L] : ref.couplings) {
        REQUIRE(net.couplings.count(key) == 1);
        CHECK(net.couplings.at(key) == L);
    }
    CHECK(cfg.cov_mode == dkf::InitialCovarianceMode::RandomSpd);
    CHECK(cfg.horizon == 60);
    CHECK(cfg.n_runs == 100);
}

TEST_CASE("parse-serialize-parse is an exact round trip") {
    const char* dir = std::getenv("DKF_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    auto [net, cfg] = dkf::parse_config(read_file(fs::path(dir) / "five_agent.json"));
    const std::string text = dkf::serialize_config(net, cfg);
    auto [net2, cfg2] = dkf::parse_config(text);
    CHECK(dkf::serialize_config(net2, cfg2) == text);
    CHECK(cfg2.horizon == cfg.horizon);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.eps0 == cfg.eps0);
}

TEST_CASE("CSV writers emit a header and one row per record") {
    dkf::GapTrajectory gaps;
    for (int k = 1; k <= 3; ++k) {
        dkf::GapRecord r;
        r.k = k;
        r.x_gap = dkf::Vector::Constant(2, 0.5 * k);
        r.x_gap_norm = 0.5 * k;
        gaps.records.push_back(r);
    }
    const std::string csv = dkf::gap_trajectory_csv(gaps, 2);
    CHECK(csv.rfind("k,xtilde_1,xtilde_2,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("0.5") != std::string::npos);

    const std::string est = dkf::estimates_csv({dkf::Vector::Constant(2, 1.25)});
    CHECK(est == "k,xhat_1,xhat_2\n1,1.25,1.25\n");

    dkf::BoundReport rep;
    const std::string brc = dkf::bound_report_csv(rep);
    CHECK(brc.rfind("name,value\n", 0) == 0);
    CHECK(brc.find("upsilon,") != std::string::npos);
    CHECK(brc.find("lambda,nan") != std::string::npos);
}

TEST_CASE("seventeen-digit formatting round-trips doubles exactly") {
    dkf::GaussianSource rng(17);
    for (int t = 0; t < 1000; ++t) {
        const double x = rng.standard_normal() * std::pow(10.0, (t % 21) - 10);
        CHECK(std::stod(dkf::detail::fmt(x)) == x);
    }
}

TEST_CASE("execute writes estimates and a manifest") {
    const char* dir = std::getenv("DKF_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    const fs::path out = temp_dir("central");
    dkf::ExperimentSpec spec;
    spec.command = dkf::Command::RunCentral;
    spec.config_path = (fs::path(dir) / "five_agent.json").string();
    spec.out_dir = out.string();
    spec.horizon_override = 5;
    CHECK(dkf::execute(spec) == dkf::kExitOk);
    const std::string est = read_file(out / "estimates.csv");
    CHECK(est.rfind("k,xhat_1,xhat_2,xhat_3,xhat_4,xhat_5\n", 0) == 0);
    CHECK(std::count(est.begin(), est.end(), '\n') == 6);
    auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["rng"] == dkf::kRngId);
    CHECK(manifest["horizon"] == 5);
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    fs::remove_all(out);
}

TEST_CASE("execute maps failures to exit codes and writes error.json") {
    const fs::path out = temp_dir("errors");
    dkf::ExperimentSpec spec;
    spec.command = dkf::Command::RunCentral;
    spec.out_dir = out.string();

    spec.config_path = (out / "missing.json").string();
    CHECK(dkf::execute(spec) == dkf::kExitValidationError);

    const fs::path bad_json = out / "bad.json";
    dkf::detail::write_file(bad_json, "{ not json");
    spec.config_path = bad_json.string();
    std::string message;
    CHECK(dkf::execute(spec, &message) == dkf::kExitParseError);
    CHECK_FALSE(message.empty());
    auto err = nlohmann::json::parse(read_file(out / "error.json"));
    CHECK(err["exit_code"] == dkf::kExitParseError);

    const fs::path bad_model = out / "bad_model.json";
    dkf::detail::write_file(
        bad_model,
        R"({"subsystems": [{"A": [[0.5]], "C": [[1.0]], "Q": [[-0.2]], "R": [[0.3]], "P": [[0.4]]}]})");
    spec.config_path = bad_model.string();
    CHECK(dkf::execute(spec) == dkf::kExitNonSpd);
    fs::remove_all(out);
}

TEST_CASE("execute is deterministic: identical outputs for identical specs") {
    const char* dir = std::getenv("DKF_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    const fs::path out1 = temp_dir("det1");
    const fs::path out2 = temp_dir("det2");
    dkf::ExperimentSpec spec;
    spec.command = dkf::Command::Compare;
    spec.config_path = (fs::path(dir) / "five_agent.json").string();
    spec.horizon_override = 20;
    spec.out_dir = out1.string();
    REQUIRE(dkf::execute(spec) == dkf::kExitOk);
    spec.out_dir = out2.string();
    REQUIRE(dkf::execute(spec) == dkf::kExitOk);
    CHECK(read_file(out1 / "gap_trajectory.csv") == read_file(out2 / "gap_trajectory.csv"));
    CHECK(read_file(out1 / "bound_report.csv") == read_file(out2 / "bound_report.csv"));
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("property suite reports zero violations") {
    std::string summary;
    CHECK(dkf::run_property_suite(summary) == 0);
    CHECK(summary.find("FAIL") == std::string::npos);
    CHECK(summary.find("ok") != std::string::npos);
}
