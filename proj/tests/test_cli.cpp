#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() { return MONOGP_CLI_PATH; }

std::string golden_dir() { return MONOGP_GOLDEN_DIR; }

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args, const std::string& tag) {
    const std::string out_file = "/tmp/monogp_cli_out_" + tag + ".txt";
    const std::string err_file = "/tmp/monogp_cli_err_" + tag + ".txt";
    const std::string cmd =
        cli_path() + " " + args + " > " + out_file + " 2> " + err_file;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    std::remove(out_file.c_str());
    std::remove(err_file.c_str());
    return r;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("/tmp") / ("monogp_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

int count_occurrences(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

// Quick experiment config shared by the CLI tests that do full fits.
std::string quick_config_json(const std::string& experiment, const std::string& out_dir) {
    json j;
    j["schema"] = "monogp-experiment";
    j["version"] = 1;
    j["experiment"] = experiment;
    j["optimizer"] = {{"restarts", 2}, {"max_iterations", 400}};
    j["output_dir"] = out_dir;
    return j.dump(2) + "\n";
}

struct EnvGuard {
    std::string name;
    EnvGuard(const std::string& n, const std::string& value) : name(n) {
        setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("help output is stable") {
    const struct {
        const char* args;
        const char* golden;
    } cases[] = {
        {"--help", "help_main.txt"},
        {"generate --help", "help_generate.txt"},
        {"fit --help", "help_fit.txt"},
        {"predict --help", "help_predict.txt"},
        {"benchmark --help", "help_benchmark.txt"},
    };
    for (const auto& c : cases) {
        INFO("args: " << c.args);
        const CliResult r = run_cli(c.args, "help");
        CHECK(r.code == 0);
        const std::string expected = slurp(golden_dir() + "/" + c.golden);
        REQUIRE(!expected.empty());
        CHECK(r.out == expected);
    }
}

TEST_CASE("generate writes deterministic csv datasets") {
    TempDir dir("generate");
    const std::string p1 = dir.file("a.csv");
    const std::string p2 = dir.file("b.csv");

    const CliResult a = run_cli("generate logistic --n 10 --seed 0 --out " + p1, "gen_a");
    REQUIRE(a.code == 0);
    CHECK(a.out.rfind("rows=10 checksum=", 0) == 0);
    CHECK(a.out.find("path=" + p1) != std::string::npos);

    const CliResult b = run_cli("generate logistic --n 10 --seed 0 --out " + p2, "gen_b");
    REQUIRE(b.code == 0);
    const auto checksum = [](const std::string& line) {
        const auto pos = line.find("checksum=");
        return line.substr(pos + 9, 16);
    };
    CHECK(checksum(a.out) == checksum(b.out));
    CHECK(slurp(p1) == slurp(p2));

    const CliResult c = run_cli("generate logistic --n 10 --seed 1 --out " + p2, "gen_c");
    REQUIRE(c.code == 0);
    CHECK(checksum(a.out) != checksum(c.out));

    SECTION("row count in the file matches the printed count") {
        const std::string text = slurp(p1);
        CHECK(count_occurrences(text, "\n") == 11);  // header + 10 rows
    }
    SECTION("hallpetch generator default size") {
        const CliResult h =
            run_cli("generate hallpetch --out " + dir.file("hp.csv"), "gen_h");
        REQUIRE(h.code == 0);
        CHECK(h.out.rfind("rows=20 ", 0) == 0);
    }
    SECTION("unknown generator name fails with a config error") {
        const CliResult u = run_cli("generate sigmoid --out " + dir.file("u.csv"), "gen_u");
        CHECK(u.code == 2);
        const json e = json::parse(u.out);
        CHECK(e.at("error").at("type").get<std::string>() == "config");
        CHECK(e.at("error").at("message").get<std::string>().find("sigmoid") !=
              std::string::npos);
    }
}

TEST_CASE("fit writes model artifacts and summaries") {
    TempDir dir("fit");
    const std::string cfg_path = dir.file("config.json");
    write_file(cfg_path, quick_config_json("logistic", dir.path.string()));

    const CliResult r = run_cli("fit " + cfg_path, "fit_run");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("regular: objective=") != std::string::npos);
    CHECK(r.out.find("monotonic: objective=") != std::string::npos);

    for (const char* name : {"model_regular.json", "model_monotonic.json",
                             "summary_regular.json", "summary_monotonic.json"})
        CHECK(fs::exists(dir.path / name));

    const json sr = json::parse(slurp(dir.file("summary_regular.json")));
    CHECK(sr.at("schema").get<std::string>() == "monogp-fit-summary");
    CHECK(sr.at("rows_train").get<int>() == 10);
    CHECK(sr.at("dataset_hash").get<std::string>().size() == 16);
    const json sm = json::parse(slurp(dir.file("summary_monotonic.json")));
    CHECK(sm.at("sites").get<int>() == 10);
    CHECK(sm.at("ep_sweeps").get<int>() >= 1);

    SECTION("refit reproduces the objectives exactly") {
        TempDir dir2("fit_again");
        const std::string cfg2 = dir2.file("config.json");
        write_file(cfg2, quick_config_json("logistic", dir2.path.string()));
        const CliResult r2 = run_cli("fit " + cfg2, "fit_rerun");
        REQUIRE(r2.code == 0);
        const json sr2 = json::parse(slurp(dir2.file("summary_regular.json")));
        CHECK(sr2.at("objective").dump() == sr.at("objective").dump());
        const json sm2 = json::parse(slurp(dir2.file("summary_monotonic.json")));
        CHECK(sm2.at("objective").dump() == sm.at("objective").dump());
    }

    SECTION("predict round trip on the fitted artifacts") {
        const std::string query = dir.file("query.csv");
        write_file(query, "x\n-1.5\n0\n2.25\n");
        const std::string out_csv = dir.file("pred.csv");
        const CliResult p =
            run_cli("predict " + dir.file("model_regular.json") + " " + query + " --out " +
                        out_csv,
                    "pred_reg");
        REQUIRE(p.code == 0);
        CHECK(p.out.rfind("rows=3 ", 0) == 0);
        const std::string text = slurp(out_csv);
        CHECK(text.rfind("x,mean,std\n", 0) == 0);
        CHECK(count_occurrences(text, "\n") == 4);

        const CliResult pm =
            run_cli("predict " + dir.file("model_monotonic.json") + " " + query + " --out " +
                        dir.file("pred_mono.csv"),
                    "pred_mono");
        REQUIRE(pm.code == 0);
        CHECK(pm.out.rfind("rows=3 ", 0) == 0);
    }

    SECTION("empty query produces a header-only file") {
        const std::string query = dir.file("empty.csv");
        write_file(query, "x\n");
        const std::string out_csv = dir.file("pred_empty.csv");
        const CliResult p = run_cli(
            "predict " + dir.file("model_regular.json") + " " + query + " --out " + out_csv,
            "pred_empty");
        REQUIRE(p.code == 0);
        CHECK(p.out.rfind("rows=0 ", 0) == 0);
        CHECK(slurp(out_csv) == "x,mean,std\n");
    }

    SECTION("query missing the model input column is named in the error") {
        const std::string query = dir.file("bad.csv");
        write_file(query, "z\n1\n");
        const CliResult p =
            run_cli("predict " + dir.file("model_regular.json") + " " + query + " --out " +
                        dir.file("nope.csv"),
                    "pred_bad");
        CHECK(p.code == 2);
        const json e = json::parse(p.out);
        CHECK(e.at("error").at("type").get<std::string>() == "data");
        CHECK(e.at("error").at("message").get<std::string>().find("input column x") !=
              std::string::npos);
    }

    SECTION("corrupt model file is a data error") {
        const std::string broken = dir.file("broken.json");
        write_file(broken, "{not json");
        const std::string query = dir.file("q.csv");
        write_file(query, "x\n0\n");
        const CliResult p = run_cli(
            "predict " + broken + " " + query + " --out " + dir.file("nope.csv"), "pred_broken");
        CHECK(p.code == 2);
        const json e = json::parse(p.out);
        CHECK(e.at("error").at("type").get<std::string>() == "data");
    }
}

TEST_CASE("benchmark subcommand writes reports and honors --check") {
    SECTION("all-zero monotone directions are rejected") {
        TempDir dir("bench_zero");
        const CliResult r = run_cli(
            "benchmark logistic --monotone x:0 --out-dir " + dir.path.string(), "bench_zero");
        CHECK(r.code == 2);
        const json e = json::parse(r.out);
        CHECK(e.at("error").at("type").get<std::string>() == "config");
    }

    SECTION("unknown experiment is rejected") {
        const CliResult r = run_cli("benchmark creep", "bench_unknown");
        CHECK(r.code == 2);
    }

    SECTION("--seeds outside the logistic experiment is rejected") {
        const CliResult r = run_cli("benchmark fatigue --seeds 3", "bench_badseeds");
        CHECK(r.code == 2);
    }

    SECTION("logistic run writes report and grid") {
        TempDir dir("bench_logistic");
        const std::string cfg_path = dir.file("config.json");
        write_file(cfg_path, quick_config_json("logistic", dir.path.string()));
        const CliResult r = run_cli("benchmark logistic --config " + cfg_path + " --out-dir " +
                                        dir.path.string(),
                                    "bench_logistic");
        REQUIRE(r.code == 0);
        CHECK(fs::exists(dir.path / "report_logistic.json"));
        CHECK(fs::exists(dir.path / "grid_logistic.csv"));
        const json rep = json::parse(slurp(dir.file("report_logistic.json")));
        CHECK(rep.at("schema").get<std::string>() == "monogp-report");
        CHECK(rep.contains("regular"));
        CHECK(rep.contains("monotonic"));
        CHECK(r.out.find("regular: rmse_test=") != std::string::npos);
        CHECK(r.out.find("monotonic: rmse_test=") != std::string::npos);
    }

    SECTION("seed sweep summary") {
        TempDir dir("bench_sweep");
        const std::string cfg_path = dir.file("config.json");
        write_file(cfg_path, quick_config_json("logistic", dir.path.string()));
        const CliResult r = run_cli("benchmark logistic --config " + cfg_path + " --seeds 3" +
                                        " --out-dir " + dir.path.string(),
                                    "bench_sweep");
        REQUIRE(r.code == 0);
        CHECK(r.out.find("seeds=3 monotonic_wins=") != std::string::npos);
        const json sweep = json::parse(slurp(dir.file("sweep_logistic.json")));
        CHECK(sweep.at("schema").get<std::string>() == "monogp-seed-sweep");
        CHECK(sweep.at("rows").size() == 3);
    }

    SECTION("MONOGP_SEED env is the seed fallback") {
        TempDir dir("bench_envseed");
        EnvGuard env("MONOGP_SEED", "7");
        const std::string cfg_path = dir.file("config.json");
        write_file(cfg_path, quick_config_json("logistic", dir.path.string()));
        const CliResult r = run_cli("benchmark logistic --config " + cfg_path + " --out-dir " +
                                        dir.path.string(),
                                    "bench_envseed");
        REQUIRE(r.code == 0);
        const json rep = json::parse(slurp(dir.file("report_logistic.json")));
        CHECK(rep.at("config").at("seed").get<int>() == 7);
    }
}

TEST_CASE("hallpetch check passes and fatigue check fails one clause") {
    SECTION("hallpetch --check exits 0") {
        TempDir dir("bench_hp_check");
        const CliResult r =
            run_cli("benchmark hallpetch --out-dir " + dir.path.string() + " --check",
                    "bench_hp_check");
        REQUIRE(r.code == 0);
        CHECK(count_occurrences(r.out, "[CHECK FAIL]") == 0);
        CHECK(count_occurrences(r.out, "[CHECK PASS]") == 2);
    }

    SECTION("fatigue --check reports exactly the half-RMSE clause") {
        TempDir dir("bench_fat_check");
        const CliResult r = run_cli(
            "benchmark fatigue --out-dir " + dir.path.string() + " --check", "bench_fat_check");
        CHECK(r.code == 4);
        CHECK(count_occurrences(r.out, "[CHECK FAIL]") == 1);
        CHECK(r.out.find("[CHECK FAIL] fatigue: monotonic test RMSE at most half of regular") !=
              std::string::npos);
        CHECK(r.out.find("[CHECK PASS] fatigue: monotonic test RMSE below regular") !=
              std::string::npos);
        CHECK(r.out.find(
                  "[CHECK PASS] fatigue: monotonic mean posterior std below regular on grid") !=
              std::string::npos);
    }
}
