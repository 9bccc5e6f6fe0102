#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "openstab/report.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using openstab::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
    fs::path out = fs::temp_directory_path() / "openstab_cli_out.txt";
    std::string cmd = std::string(OPENSTAB_CLI_PATH) + " " + args + " > " +
                      out.string() + " 2> /dev/null";
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(status);
    r.stdout_text = testsupport::read_file(out.string());
    return r;
}

std::string data(const std::string& file) { return testsupport::data_path(file); }

fs::path write_temp(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("analyze emits the openness report and exits 0") {
    RunResult r = run_cli("analyze " + data("sontag.sys"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["openness"]["cov"] == 1.0);
    CHECK(j["openness"]["eta"] == 1.0);

    RunResult rc = run_cli("analyze " + data("coron.sys"));
    REQUIRE(rc.exit_code == 0);  // analysis succeeds regardless of the verdict
    json jc = json::parse(rc.stdout_text);
    CHECK(jc["openness"]["cov"] == 0.0);
    CHECK(jc["openness"]["reg"] == "inf");
}

TEST_CASE("analyze accepts an explicit point") {
    RunResult r = run_cli("analyze " + data("xsqr.sys") + " --point 1 1");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["transversality"]["type1"]["q"][0][0] == doctest::Approx(1.0));
}

TEST_CASE("exit code 2 on parse errors, 3 on dimension errors") {
    fs::path bad = write_temp("bad.sys", "n=1 m=1\nf1 = x1 +\n");
    CHECK(run_cli("analyze " + bad.string()).exit_code == 2);
    CHECK(run_cli("analyze " + data("sontag.sys") + " --point 1 2 3").exit_code == 3);
    CHECK(run_cli("analyze /nonexistent.sys").exit_code == 1);
}

TEST_CASE("synthesize qt1 on the controllable scalar system") {
    RunResult r = run_cli("synthesize " + data("linear.sys") + " --method qt1");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["law"]["k"][0][0] == doctest::Approx(-2.0));
    CHECK(j["closed_loop_check"].get<double>() <= 1e-9);
}

TEST_CASE("synthesize composition reports the modified system") {
    RunResult r = run_cli("synthesize " + data("sontag.sys") + " --method composition");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["h"]["hx"][0][0] == -1.0);
    CHECK(j["modified_openness"]["eta"] == "-inf");
    CHECK(j["modified_openness"]["cov"] == 1.0);
    CHECK(j["modified_system"].get<std::string>().find("u1^3") != std::string::npos);
}

TEST_CASE("synthesize auto falls back to composition for the cubic system") {
    RunResult r = run_cli("synthesize " + data("sontag.sys"));
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["method"] == "composition");
    CHECK(j["skipped_methods"].size() == 3);  // t1, st1, qt1 do not apply
}

TEST_CASE("synthesize exits 4 when no method applies") {
    CHECK(run_cli("synthesize " + data("coron.sys")).exit_code == 4);
}

TEST_CASE("synthesize fixpoint produces a grid law") {
    RunResult r = run_cli("synthesize " + data("xsqr.sys") +
                          " --method fixpoint --radius 0.5 --grid-n 16 --u0 0.1"
                          " --box 0:0.5 --max-iter 200 --tol 1e-5");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.stdout_text);
    CHECK(j["law"]["kind"] == "grid");
    CHECK(j["law"]["converged"] == true);
}

TEST_CASE("simulate pipeline: envelope verdict drives the exit code") {
    fs::path law = fs::temp_directory_path() / "law_qt1.json";
    REQUIRE(run_cli("synthesize " + data("linear.sys") + " --method qt1 --out " +
                    law.string()).exit_code == 0);

    fs::path fit = fs::temp_directory_path() / "fit.json";
    RunResult ok = run_cli("simulate " + data("linear.sys") + " --law " + law.string() +
                           " --delta 0.1 --samples 4 --t-end 6 --out " + fit.string());
    CHECK(ok.exit_code == 0);
    json jf = json::parse(testsupport::read_file(fit.string()));
    CHECK(jf["alpha"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(jf["envelope_ok"] == true);

    // The same law JSON applied to the open-loop unstable cubic system fails
    // the envelope: distinct exit code, not a crash.
    fs::path zero = write_temp("law_zero.json",
                               json{{"kind", "linear"},
                                    {"provenance", "trivial"},
                                    {"k", {{0.0}}},
                                    {"shift", nullptr}}
                                   .dump());
    RunResult bad = run_cli("simulate " + data("sontag.sys") + " --law " + zero.string() +
                            " --delta 0.1 --samples 4 --t-end 6");
    CHECK(bad.exit_code == 6);
}

TEST_CASE("simulate writes trajectory CSV with n+2 columns") {
    fs::path law = write_temp("law_zero2.json",
                              json{{"kind", "linear"},
                                   {"provenance", "trivial"},
                                   {"k", {{0.0}}},
                                   {"shift", nullptr}}
                                  .dump());
    fs::path dir = fs::temp_directory_path() / "openstab_csv";
    fs::remove_all(dir);
    // Modified cubic system: x' = -x + u^3 with u = 0 decays cleanly.
    fs::path msys = write_temp("modified.sys", "n=1 m=1\nf1 = -x1 + u1^3\n");
    RunResult r = run_cli("simulate " + msys.string() + " --law " + law.string() +
                          " --x0 0.1 --t-end 2 --csv-dir " + dir.string());
    CHECK(r.exit_code == 0);
    std::string csv = testsupport::read_file((dir / "trajectory_0.csv").string());
    REQUIRE(!csv.empty());
    std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header == "t,x1,norm");
}

TEST_CASE("analyze -> synthesize(auto) -> simulate pipeline on the bundled systems") {
    // Cubic-input system: auto picks the composition route; the trivial law
    // must verify on the modified system it reports.
    REQUIRE(run_cli("analyze " + data("sontag.sys")).exit_code == 0);
    fs::path law = fs::temp_directory_path() / "pipe_law.json";
    RunResult syn = run_cli("synthesize " + data("sontag.sys") + " --out " + law.string());
    REQUIRE(syn.exit_code == 0);
    json j = json::parse(testsupport::read_file(law.string()));
    REQUIRE(j["method"] == "composition");
    fs::path msys = write_temp("pipe_modified.sys", j["modified_system"].get<std::string>());
    RunResult sim = run_cli("simulate " + msys.string() + " --law " + law.string() +
                            " --delta 0.05 --samples 6 --t-end 8");
    CHECK(sim.exit_code == 0);

    // The two rank-deficient-at-origin systems analyze fine and report that no
    // origin-anchored method applies.
    REQUIRE(run_cli("analyze " + data("coron.sys")).exit_code == 0);
    CHECK(run_cli("synthesize " + data("coron.sys")).exit_code == 4);
    REQUIRE(run_cli("analyze " + data("xsqr.sys")).exit_code == 0);
    CHECK(run_cli("synthesize " + data("xsqr.sys")).exit_code == 4);
}

TEST_CASE("simulate exits 5 when the trajectory leaves a grid law's domain") {
    json grid_json = {
        {"kind", "grid"},      {"provenance", "fixpoint"},
        {"lo", {-0.1}},        {"hi", {0.1}},
        {"grid_n", 2},         {"radius", 0.1},
        {"converged", true},   {"residual", 0.0},
        {"iterations", 1},     {"values", {{0.0}, {0.0}, {0.0}}},
    };
    fs::path law = write_temp("law_grid.json", grid_json.dump());
    RunResult r = run_cli("simulate " + data("linear.sys") + " --law " + law.string() +
                          " --x0 0.05 --t-end 4");
    CHECK(r.exit_code == 5);
}

}  // TEST_SUITE
