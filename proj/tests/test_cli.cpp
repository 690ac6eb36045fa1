#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qprep/cli.hpp"

using namespace qprep;
namespace fs = std::filesystem;

namespace {

json parse(const char* text) { return json::parse(text); }

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("qprep_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string pointer_of(const json& cfg) {
    try {
        cli::parse_scenario(cfg);
    } catch (const ConfigError& e) {
        return e.pointer;
    }
    return "<none>";
}

const char* kSmallMaser = R"({"seed": 4,
  "model": {"type": "micromaser", "N": 4, "lambda": 0.25, "omega0_T": "pi/3"},
  "tasks": [)";

json small_maser(const std::string& tasks) { return json::parse(std::string(kSmallMaser) + tasks + "]}"); }

}  // namespace

TEST(Io, ComplexAndMatrixRoundTrip) {
    Matrix m(2, 3);
    m << cplx(1, -2), 0.5, cplx(0, 1e-300), -3, cplx(1e10, 7), 0;
    json j = to_json(m);
    EXPECT_EQ(j[0][0], json::array({1.0, -2.0}));
    EXPECT_EQ(matrix_from_json(j, ""), m);
    EXPECT_EQ(complex_from_json(json(2.5), ""), cplx(2.5));
}

TEST(Io, ModelRoundTrip) {
    Rng rng(5);
    auto m = random_stationary_model(rng, 3, 2, 0).reversed();
    auto back = model_from_json(json::parse(to_json(m).dump()), "/model");
    EXPECT_EQ(back.model.u.matrix, m.u.matrix);
    EXPECT_EQ(back.model.phi.matrix, m.phi.matrix);
    EXPECT_EQ(back.model.psi.matrix, m.psi.matrix);
    EXPECT_EQ(back.model.direction, Direction::reverse);
}

TEST(Io, MicromaserBlocksRoundTrip) {
    auto p = jc_resonant(1.1, 4, 0.3);
    auto spec = model_from_json(json::parse(to_json(p).dump()), "/model");
    EXPECT_LT((spec.model.u.matrix - build_micromaser(p).u.matrix).norm(), 1e-15);
    EXPECT_LT((spec.model.phi.matrix - build_micromaser(p).phi.matrix).norm(), 1e-15);
}

TEST(Io, AngleStrings) {
    const double pi = std::numbers::pi;
    EXPECT_DOUBLE_EQ(angle_from_json("pi/3", ""), pi / 3);
    EXPECT_DOUBLE_EQ(angle_from_json("2pi", ""), 2 * pi);
    EXPECT_DOUBLE_EQ(angle_from_json("0.5*pi", ""), pi / 2);
    EXPECT_DOUBLE_EQ(angle_from_json(1.25, ""), 1.25);
    EXPECT_THROW(angle_from_json("tau", "/x"), ConfigError);
}

TEST(Io, CsvIsVersionedAndShortest) {
    CsvWriter w({"a", "b"});
    w.row(1, 0.1);
    EXPECT_EQ(w.str(), "# qprep-csv v1\na,b\n1,0.1\n");
    EXPECT_THROW(w.row(1), std::logic_error);
}

TEST(Cli, EmptyTaskListIsOk) {
    auto sc = cli::parse_scenario(parse(R"({"model": {"type": "preset", "name": "swap"}, "tasks": []})"));
    auto dir = scratch("empty");
    auto run = cli::execute(sc, dir.string());
    EXPECT_EQ(run.exit_code, 0);
    EXPECT_TRUE(run.report["tasks"].empty());
    EXPECT_TRUE(fs::exists(dir / "report.json"));
}

TEST(Cli, SchemaErrorsCarryPointers) {
    EXPECT_EQ(pointer_of(parse(R"({"tasks": []})")), "/model");
    EXPECT_EQ(pointer_of(parse(R"({"model": {"type": "preset", "name": "swap"}, "tasks": [{"type": "bogus"}]})")),
              "/tasks/0/type");
    EXPECT_EQ(pointer_of(small_maser(R"({"type": "certify-ac"}, {"type": "synth", "target": "nowhere", "n_max": 2})")),
              "/tasks/1/target");
    EXPECT_EQ(pointer_of(small_maser(R"({"type": "observability", "n_max": "three"})")), "/tasks/0/n_max");
    EXPECT_EQ(pointer_of(small_maser(R"({"type": "d1", "typo": 1})")), "/tasks/0/typo");
    EXPECT_EQ(pointer_of(parse(R"({"model": {"type": "micromaser", "N": 3, "lambda": 0.7, "omega0_T": 1},
                                   "tasks": []})")),
              "/model/lambda");
    EXPECT_EQ(pointer_of(parse(R"({"model": {"type": "coupling", "N": 2, "d": 1, "u": [[1, 0], [0, 1]],
                                   "phi": [[1, 0], [0, 1]], "psi": [[1]]}, "tasks": []})")),
              "/model/phi");
}

TEST(Cli, NonUnitaryNamesTheNorm) {
    auto v = cli::validate(parse(R"({"model": {"type": "coupling", "N": 2, "d": 1,
        "u": [[1, 0.1], [0, 1]], "phi": "maximally_mixed", "psi": [[1]]}, "tasks": []})"));
    ASSERT_FALSE(v.ok());
    EXPECT_EQ(v.exit_code(), 2);
    EXPECT_EQ(v.diagnostics[0].pointer, "/model/u");
    EXPECT_NE(v.diagnostics[0].message.find("|u*u - 1|"), std::string::npos);
}

TEST(Cli, ValidateCapWarning) {
    auto v = cli::validate(small_maser(R"({"type": "synth", "target": {"basis": 1}, "n_max": 11})"));
    EXPECT_TRUE(v.ok());
    ASSERT_EQ(v.diagnostics.size(), 1u);
    EXPECT_EQ(v.diagnostics[0].severity, "warning");
    EXPECT_NE(v.diagnostics[0].message.find("8192"), std::string::npos);
}

TEST(Cli, ValidatePresetListsDimensions) {
    auto v = cli::validate(small_maser(R"({"type": "observability", "n_max": 3})"));
    EXPECT_TRUE(v.ok());
    EXPECT_TRUE(v.diagnostics.empty());
    EXPECT_EQ(v.derived["N"], 4);
    EXPECT_EQ(v.derived["d"], 2);
    EXPECT_EQ(v.derived["gns_dim"], 16);
    EXPECT_EQ(v.derived["tasks"][0]["chain_dim"], 32);
    EXPECT_EQ(v.text().rfind("ok", 0), 0u);
}

TEST(Cli, CertifyMatchesLibrary) {
    auto sc = cli::parse_scenario(small_maser(R"({"type": "certify-ac"})"));
    auto run = cli::execute(sc, "");
    ASSERT_EQ(run.exit_code, 0);
    auto lib = certify_ac(build_micromaser(jc_resonant(std::numbers::pi / 3, 4, 0.25)));
    EXPECT_EQ(run.tasks[0].summary, to_json(lib));
    EXPECT_EQ(run.tasks[0].summary["verdict"], "certified_complete");
}

TEST(Cli, EveryTaskTypeMatchesLibrary) {
    auto sc = cli::parse_scenario(small_maser(R"(
        {"type": "stationary"},
        {"type": "d1", "n_max": 5},
        {"type": "observability", "n_max": 4},
        {"type": "ac-profile", "n_max": 30, "random_operators": 3},
        {"type": "synth", "method": "mixed", "target": "phi", "n_max": 4},
        {"type": "protocol", "input": {"basis": 1}, "n_max": 12},
        {"type": "sweep", "grid": {"lambda": [0.1, 0.25], "omega0_T": ["pi/3", "2pi"]}})"));
    auto run = cli::execute(sc, "", 2);
    ASSERT_EQ(run.exit_code, 0);
    const auto m = build_micromaser(jc_resonant(std::numbers::pi / 3, 4, 0.25));
    auto file = [&](std::size_t t, const std::string& suffix) {
        for (const auto& [name, content] : run.tasks[t].files)
            if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
                return content;
        return std::string("<missing>");
    };

    EXPECT_EQ(file(0, "stationary.csv"), to_csv(stationary_states(transition_channel(m))));
    EXPECT_EQ(file(1, "d1.csv"), to_csv(d1_check(m, 5)));
    EXPECT_EQ(file(2, "observability.csv"), to_csv(observability_check(m, 4)));

    auto prof = ac_profile(build_extended(m), 30, default_test_set(m.phi, cli::task_seed(4, 3), 3));
    EXPECT_EQ(file(3, "ac-profile.csv"), to_csv(prof));

    auto panel = default_panel(4, cli::task_seed(4, 4));
    EXPECT_EQ(file(4, "synth_trace.csv"), to_csv(run_panel(m, synth_mixed(m, m.phi, 4), panel)));

    auto ppanel = default_panel(4, cli::task_seed(4, 5));
    EXPECT_EQ(file(5, "protocol_trace.csv"),
              to_csv(run_panel(m, constant_protocol(m, DensityState::basis(2, 1), 12), ppanel)));

    const auto& pts = run.tasks[6].summary["points"];
    ASSERT_EQ(pts.size(), 4u);
    EXPECT_EQ(pts[1]["verdict"], to_string(certify_ac(build_micromaser(jc_resonant(2 * std::numbers::pi, 4, 0.1))).verdict));
    EXPECT_EQ(pts[1]["verdict"], "certified_incomplete");
    EXPECT_EQ(pts[2]["verdict"], "certified_complete");
}

TEST(Cli, DeterministicArtifacts) {
    auto cfg = small_maser(R"({"type": "synth", "method": "forward", "target": {"basis": 2}, "n_max": 5},
                               {"type": "ac-profile", "n_max": 20},
                               {"type": "protocol", "input": "maximally_mixed", "n_max": 10})");
    auto a = scratch("det_a"), b = scratch("det_b");
    cli::execute(cli::parse_scenario(cfg), a.string(), 1);
    cli::execute(cli::parse_scenario(cfg), b.string(), 3);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename() == "report.json") continue;
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 5);

    // the seed override changes the panel
    auto c = scratch("det_c");
    cli::execute(cli::parse_scenario(cfg, 99), c.string(), 1);
    EXPECT_NE(slurp(a / "task00_synth_trace.csv"), slurp(c / "task00_synth_trace.csv"));
}

TEST(Cli, FailuresDoNotAbortLaterTasks) {
    // pure reference state: the GNS construction needs a faithful one
    auto sc = cli::parse_scenario(parse(R"({"model": {"type": "coupling", "N": 2, "d": 2,
        "u": [[1,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,1]], "phi": {"basis": 0}, "psi": {"basis": 0}},
        "tasks": [{"type": "certify-ac"}, {"type": "stationary"}]})"));
    auto run = cli::execute(sc, "");
    EXPECT_EQ(run.exit_code, 1);
    EXPECT_EQ(run.tasks[0].status, "failed");
    EXPECT_EQ(run.tasks[1].status, "ok");
}

TEST(Cli, CapViolationExitsThree) {
    auto sc = cli::parse_scenario(small_maser(R"({"type": "synth", "target": {"basis": 1}, "n_max": 11},
                                                {"type": "stationary"})"));
    auto run = cli::execute(sc, "");
    EXPECT_EQ(run.exit_code, 3);
    EXPECT_EQ(run.tasks[0].status, "cap_exceeded");
    EXPECT_EQ(run.tasks[1].status, "ok");
}

TEST(Cli, TwoPhaseTriangle) {
    auto sc = cli::parse_scenario(small_maser(R"({"type": "synth", "method": "reverse", "target": "phi", "n_max": 6,
        "reverse": {"input": {"basis": 1}, "via": {"basis": 0}, "prepare": {"input": {"basis": 1}, "n": 80}}})"));
    auto run = cli::execute(sc, "");
    ASSERT_EQ(run.exit_code, 0) << run.tasks[0].error;
    const auto& s = run.tasks[0].summary;
    EXPECT_EQ(s["method"], "two-phase");
    EXPECT_GE(s["triangle_slack"].get<double>(), -1e-9);
    EXPECT_LT(s["prepare_error"].get<double>(), 1e-3);
    // panel independence after the preparation stage
    EXPECT_LT(s["convergence"].back()["spread"].get<double>(), 1e-3);
}

TEST(Cli, ChainCapSources) {
    auto a = cli::parse_scenario(parse(R"({"model": {"type": "preset", "name": "swap", "max_chain_dim": 64}, "tasks": []})"));
    EXPECT_EQ(a.model.model.max_chain_dim, 64);
    EXPECT_EQ(a.caps.max_chain_dim, 64);
    auto b = cli::parse_scenario(parse(R"({"model": {"type": "preset", "name": "swap", "max_chain_dim": 64},
                                          "caps": {"max_chain_dim": 128}, "tasks": []})"));
    EXPECT_EQ(b.model.model.max_chain_dim, 128);
}
