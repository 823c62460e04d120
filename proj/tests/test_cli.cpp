// Exit-code and output-schema checks driven through the installed
// binary; the full pipeline behaviors live in the acceptance suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#ifndef GALLAT_CLI_PATH
#define GALLAT_CLI_PATH "gallat"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(GALLAT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "gallat_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const char* name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("unknown flags and missing inputs have distinct exit codes") {
    TempDir dir;
    CHECK(run("--out " + (dir / "x") + " synth --no-such-flag") == 2);
    CHECK(run("--out " + (dir / "x") + " frobnicate") == 2);
    CHECK(run("--out " + (dir / "x") + " train --snapshots missing.csv --days 20") == 3);
    CHECK(run("--out " + (dir / "x") + " params --checkpoint missing.bin") == 3);
}

TEST_CASE("synth then train then evaluate completes with exit 0") {
    TempDir dir;
    const std::string fixture = dir / "fix";
    REQUIRE(run("--out " + fixture +
                " synth --days 20 --slots-per-day 4 --grid-rows 3 --grid-cols 3 --seed 3") == 0);
    CHECK(fs::exists(fixture + "/snapshots.csv"));
    CHECK(fs::exists(fixture + "/rates.csv"));
    CHECK(fs::exists(fixture + "/manifest.json"));

    const std::string model_dir = dir / "model";
    const std::string train_flags =
        " train --snapshots " + fixture + "/snapshots.csv --days 20 --slots-per-day 4"
        " --grid-rows 3 --grid-cols 3 --d-e 2 --history-len 2 --node-embed-dim 2"
        " --slot-embed-dim 2 --dow-embed-dim 2 --pretrain-epochs 1 --epochs 2"
        " --batch-size 4 --seed 17";
    REQUIRE(run("--out " + model_dir + train_flags) == 0);
    CHECK(fs::exists(model_dir + "/checkpoint.bin"));
    CHECK(fs::exists(model_dir + "/loss_history.csv"));

    const std::string eval_dir = dir / "eval";
    REQUIRE(run("--out " + eval_dir + " evaluate --checkpoint " + model_dir +
                "/checkpoint.bin --snapshots " + fixture + "/snapshots.csv --days 20"
                " --baseline ha") == 0);
    const std::string metrics = slurp(eval_dir + "/metrics.txt");
    for (const char* key : {"od.mape.0", "od.mape.3", "od.mape.5", "demand.mape.0",
                            "od.count.0"}) {
        CHECK(metrics.find(key) != std::string::npos);
    }
    CHECK(fs::exists(eval_dir + "/baseline_ha_metrics.txt"));

    const std::string pred_dir = dir / "pred";
    REQUIRE(run("--out " + pred_dir + " predict --checkpoint " + model_dir +
                "/checkpoint.bin --snapshots " + fixture + "/snapshots.csv --days 20"
                " --slot 30") == 0);
    const std::string od = slurp(pred_dir + "/od_pred.csv");
    CHECK(od.rfind("slot,origin,dest,value\n", 0) == 0);
    const std::string demand = slurp(pred_dir + "/demand_pred.csv");
    CHECK(demand.rfind("slot,node,value\n", 0) == 0);

    const std::string params_dir = dir / "params";
    REQUIRE(run("--out " + params_dir + " params --checkpoint " + model_dir +
                "/checkpoint.bin") == 0);
    const std::string params = slurp(params_dir + "/params.txt");
    CHECK(params.find("total.attention_layers") != std::string::npos);
    CHECK(params.find("closed_form.attention_layers") != std::string::npos);
}

TEST_CASE("insufficient history exits with its own code") {
    TempDir dir;
    const std::string fixture = dir / "fix";
    REQUIRE(run("--out " + fixture +
                " synth --days 15 --slots-per-day 4 --grid-rows 3 --grid-cols 3 --seed 3") == 0);
    // 15 days leaves one training day, below the channel reach for P=2
    CHECK(run("--out " + (dir / "m") + " train --snapshots " + fixture +
              "/snapshots.csv --days 15 --slots-per-day 4 --grid-rows 3 --grid-cols 3"
              " --d-e 2 --history-len 2 --pretrain-epochs 1 --epochs 1") == 5);
}

TEST_CASE("config file values apply and flags override them") {
    TempDir dir;
    const std::string conf = dir / "run.conf";
    {
        std::ofstream out(conf);
        out << "synth.days=20\nsynth.slots-per-day=4\nsynth.grid-rows=3\n"
               "synth.grid-cols=3\nsynth.seed=3\n";
    }
    const std::string out_a = dir / "a";
    REQUIRE(run("--config " + conf + " --out " + out_a + " synth") == 0);
    const std::string out_b = dir / "b";
    REQUIRE(run("--config " + conf + " --out " + out_b + " synth --seed 4") == 0);
    CHECK(slurp(out_a + "/snapshots.csv") != slurp(out_b + "/snapshots.csv"));

    const std::string out_c = dir / "c";
    REQUIRE(run("--config " + conf + " --out " + out_c + " synth") == 0);
    CHECK(slurp(out_a + "/snapshots.csv") == slurp(out_c + "/snapshots.csv"));
}
