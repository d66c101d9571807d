#include "lesets/checkpoint.hpp"
#include "lesets/csv.hpp"
#include "lesets/graphs.hpp"
#include "lesets/tensor.hpp"

#include "support/common.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

using namespace lesets;
using lesets::testing::test_table;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr combined
};

std::filesystem::path scratch_root() {
    static std::filesystem::path root = [] {
        auto p = std::filesystem::temp_directory_path() / ("lesets_test_cli_" + std::to_string(::getpid()));
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p;
    }();
    return root;
}

CliResult run_cli(const std::string& args) {
    const std::string log = (scratch_root() / "last_run.log").string();
    const std::string cmd = std::string(LESETS_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string table_flag() { return std::string(" --element-table ") + LESETS_TEST_TABLE; }

/// Shared generated dataset CSV, written once per test binary run.
std::string data_csv() {
    static std::string path = [] {
        const std::string p = (scratch_root() / "synthetic.csv").string();
        lesets::testing::SyntheticSpec spec;
        spec.n = 90;
        lesets::testing::write_synthetic_csv(p, test_table(), spec);
        return p;
    }();
    return path;
}

std::string fresh_dir(const std::string& tag) {
    const auto p = scratch_root() / tag;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

size_t count_lines(const std::string& text) {
    return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("featurize emits one graph set per kept row") {
    const std::string csv_path = (scratch_root() / "tiny.csv").string();
    {
        std::ofstream out(csv_path);
        out << "composition,youngs_modulus,bulk_modulus,rws\n"
               "FeNi,200,,\n"
               "CoCr,,150,\n"
               "Fe2CoCrNi,180,,\n";
    }

    const std::string out_all = fresh_dir("feat_all");
    CliResult all = run_cli("featurize --data " + csv_path + table_flag() + " --out " + out_all);
    CHECK(all.exit_code == 0);
    const std::string jsonl = read_file(std::filesystem::path(out_all) / "graph_sets.jsonl");
    REQUIRE(count_lines(jsonl) == 3);

    std::istringstream lines(jsonl);
    std::string line;
    size_t members = 0;
    while (std::getline(lines, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        REQUIRE(j.contains("members"));
        members += j["members"].size();
    }
    CHECK(members == 2 + 2 + 4);

    const std::string out_target = fresh_dir("feat_target");
    CliResult tgt =
        run_cli("featurize --data " + csv_path + table_flag() + " --target youngs_modulus --out " + out_target);
    CHECK(tgt.exit_code == 0);
    const std::string filtered = read_file(std::filesystem::path(out_target) / "graph_sets.jsonl");
    CHECK(count_lines(filtered) == 2);
    nlohmann::json first = nlohmann::json::parse(filtered.substr(0, filtered.find('\n')));
    CHECK(first["target"].get<double>() == 200.0);
}

TEST_CASE("train writes a checkpoint another process reproduces bit-for-bit") {
    const std::string out = fresh_dir("train_out");
    CliResult train = run_cli("train --data " + data_csv() + table_flag() +
                              " --target youngs_modulus --model deepsets --hidden-dim 4 --fc-layers 2" +
                              " --max-epochs 3 --out " + out);
    INFO(train.output);
    REQUIRE(train.exit_code == 0);

    const std::filesystem::path dir(out);
    REQUIRE(std::filesystem::exists(dir / "checkpoint.json"));
    REQUIRE(std::filesystem::exists(dir / "learning_curve.csv"));
    nlohmann::json metrics = nlohmann::json::parse(read_file(dir / "metrics.json"));
    CHECK(metrics["target"] == "youngs_modulus");
    CHECK(metrics["epochs_run"].get<int>() == 3);
    CHECK(metrics["best_epoch"].get<int>() >= 1);
    CHECK(count_lines(read_file(dir / "learning_curve.csv")) == 4);

    // drive predict on fresh compositions
    const std::string input = (scratch_root() / "predict_in.csv").string();
    {
        std::ofstream in_csv(input);
        in_csv << "composition,note\n"
                  "Fe2CoCrNi,alpha\n"
                  "AlCrFeNi,beta\n";
    }
    const std::string pred_out = fresh_dir("predict_out");
    CliResult predict = run_cli("predict --data " + input + table_flag() + " --checkpoint " +
                                (dir / "checkpoint.json").string() + " --out " + pred_out);
    INFO(predict.output);
    REQUIRE(predict.exit_code == 0);

    csv::Table preds = csv::read_file((std::filesystem::path(pred_out) / "predictions.csv").string());
    REQUIRE(preds.header.size() == 3);
    CHECK(preds.header[2] == "predicted_youngs_modulus");
    REQUIRE(preds.rows.size() == 2);
    CHECK(preds.rows[0][0] == "Fe2CoCrNi");
    CHECK(preds.rows[0][1] == "alpha");

    // the same checkpoint loaded in-process must give the same digits
    LoadedCheckpoint ckpt = load_checkpoint((dir / "checkpoint.json").string(), test_table());
    CHECK(ckpt.target == "youngs_modulus");
    const std::vector<std::string> formulas = {"Fe2CoCrNi", "AlCrFeNi"};
    for (size_t i = 0; i < formulas.size(); ++i) {
        GraphSet gs = lesets::testing::set_from_formula(formulas[i]);
        Tape tape(false);
        const double pred = ckpt.scaler.unscale(ckpt.model->forward(tape, gs).item());
        CHECK(preds.rows[i][2] == csv::format_double(pred));
    }
}

TEST_CASE("config file supplies options and explicit flags beat it") {
    const std::string cfg = (scratch_root() / "run.ini").string();
    {
        std::ofstream out(cfg);
        out << "[train]\n"
               "data=\"" << data_csv() << "\"\n"
               "element-table=\"" << LESETS_TEST_TABLE << "\"\n"
               "target=youngs_modulus\n"
               "model=deepsets\n"
               "hidden-dim=4\n"
               "fc-layers=2\n"
               "max-epochs=2\n";
    }

    const std::string out1 = fresh_dir("cfg_out1");
    CliResult from_cfg = run_cli("--config " + cfg + " train --out " + out1);
    INFO(from_cfg.output);
    REQUIRE(from_cfg.exit_code == 0);
    CHECK(nlohmann::json::parse(read_file(std::filesystem::path(out1) / "metrics.json"))["epochs_run"] == 2);

    const std::string out2 = fresh_dir("cfg_out2");
    CliResult overridden = run_cli("--config " + cfg + " train --max-epochs 1 --out " + out2);
    INFO(overridden.output);
    REQUIRE(overridden.exit_code == 0);
    CHECK(nlohmann::json::parse(read_file(std::filesystem::path(out2) / "metrics.json"))["epochs_run"] == 1);
}

TEST_CASE("repeated single-threaded benchmarks are byte-identical") {
    const std::string base = "benchmark --data " + data_csv() + table_flag() +
                             " --target youngs_modulus --model deepsets --hidden-dim 4 --fc-layers 2" +
                             " --replicates 2 --max-epochs 2 --threads 1";
    const std::string out1 = fresh_dir("bench1");
    const std::string out2 = fresh_dir("bench2");
    CliResult r1 = run_cli(base + " --out " + out1);
    CliResult r2 = run_cli(base + " --out " + out2);
    INFO(r1.output);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);

    for (const std::string name : {"replicates.csv", "summary.json", "learning_curve_0.csv", "learning_curve_1.csv"}) {
        CHECK(read_file(std::filesystem::path(out1) / name) == read_file(std::filesystem::path(out2) / name));
    }
    CHECK(read_file(std::filesystem::path(out1) / "replicates.csv").rfind("seed,mae,r2,epochs,wall_time_s\n", 0) == 0);
}

TEST_CASE("sensitivity subcommand writes the sweep tables") {
    const std::string out = fresh_dir("sweep_out");
    CliResult r = run_cli("sensitivity --data " + data_csv() + table_flag() +
                          " --target youngs_modulus --model deepsets --hidden-dim 4 --fc-layers 2" +
                          " --fractions 0.5,1.0 --replicates 1 --max-epochs 2 --out " + out);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    const std::string csv_text = read_file(std::filesystem::path(out) / "sensitivity.csv");
    CHECK(count_lines(csv_text) == 3); // header + 2 fractions x 1 replicate
    nlohmann::json j = nlohmann::json::parse(read_file(std::filesystem::path(out) / "sensitivity_summary.json"));
    REQUIRE(j.size() == 2);
    CHECK(j[0]["se_degenerate"] == true);
    CHECK(r.output.find("SE degenerate") != std::string::npos);
}

TEST_CASE("interpret trains attention models or reuses a checkpoint") {
    const std::string out = fresh_dir("interp_out");
    CliResult fresh = run_cli("interpret --data " + data_csv() + table_flag() +
                              " --target youngs_modulus --model lesets --att true --hidden-dim 4" +
                              " --conv-layers 1 --fc-layers 2 --replicates 2 --max-epochs 2 --out " + out);
    INFO(fresh.output);
    REQUIRE(fresh.exit_code == 0);
    for (const std::string name : {"imp_per_hea.csv", "imp_frequencies.csv", "interaction_matrix.csv"}) {
        CHECK(std::filesystem::exists(std::filesystem::path(out) / name));
    }
    // two trained models plus the pooled tally
    const std::string freq = read_file(std::filesystem::path(out) / "imp_frequencies.csv");
    CHECK(freq.find("model_0,") != std::string::npos);
    CHECK(freq.find("model_1,") != std::string::npos);
    CHECK(freq.find("pooled,") != std::string::npos);

    // attention checkpoint path
    const std::string train_out = fresh_dir("interp_train");
    CliResult train = run_cli("train --data " + data_csv() + table_flag() +
                              " --target youngs_modulus --model lesets --att true --hidden-dim 4" +
                              " --conv-layers 1 --fc-layers 2 --max-epochs 2 --out " + train_out);
    REQUIRE(train.exit_code == 0);
    const std::string ckpt = (std::filesystem::path(train_out) / "checkpoint.json").string();
    const std::string out2 = fresh_dir("interp_ckpt");
    CliResult reused = run_cli("interpret --data " + data_csv() + table_flag() + " --checkpoint " + ckpt + " --out " +
                               out2);
    INFO(reused.output);
    REQUIRE(reused.exit_code == 0);
    CHECK(read_file(std::filesystem::path(out2) / "imp_frequencies.csv").find("model,") != std::string::npos);

    // a weighted-sum checkpoint cannot be interpreted
    const std::string ws_out = fresh_dir("interp_ws_train");
    CliResult ws_train = run_cli("train --data " + data_csv() + table_flag() +
                                 " --target youngs_modulus --model lesets --att false --hidden-dim 4" +
                                 " --conv-layers 1 --fc-layers 2 --max-epochs 2 --out " + ws_out);
    REQUIRE(ws_train.exit_code == 0);
    CliResult rejected = run_cli("interpret --data " + data_csv() + table_flag() + " --checkpoint " +
                                 (std::filesystem::path(ws_out) / "checkpoint.json").string() + " --out " +
                                 fresh_dir("interp_rejected"));
    CHECK(rejected.exit_code == 1);
    CHECK(rejected.output.find("attention") != std::string::npos);
}

TEST_CASE("baselines subcommand covers all three tabular methods") {
    const std::string out = fresh_dir("baselines_out");
    CliResult r = run_cli("baselines --data " + data_csv() + table_flag() +
                          " --target youngs_modulus --replicates 2 --out " + out);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    for (const std::string method : {"ridge", "lasso", "knn"}) {
        CHECK(std::filesystem::exists(std::filesystem::path(out) / method / "replicates.csv"));
        CHECK(r.output.find(method) != std::string::npos);
    }
    CHECK(std::filesystem::exists(std::filesystem::path(out) / "tuned_hyperparameters.json"));
}

TEST_CASE("failures exit nonzero with a diagnostic") {
    // missing required flag is a parse error
    CliResult no_data = run_cli("train --target youngs_modulus");
    CHECK(no_data.exit_code != 0);

    CliResult bad_file = run_cli("train --data /nonexistent.csv --target youngs_modulus --model deepsets");
    CHECK(bad_file.exit_code == 1);
    CHECK(bad_file.output.find("error:") != std::string::npos);

    CliResult bad_preset =
        run_cli("train --data " + data_csv() + table_flag() + " --preset nosuch --out " + fresh_dir("err1"));
    CHECK(bad_preset.exit_code == 1);
    CHECK(bad_preset.output.find("unknown preset") != std::string::npos);

    CliResult no_target = run_cli("benchmark --data " + data_csv() + table_flag() + " --model deepsets");
    CHECK(no_target.exit_code == 1);
    CHECK(no_target.output.find("no target column") != std::string::npos);

    CliResult bad_target =
        run_cli("benchmark --data " + data_csv() + table_flag() + " --target hardness --model deepsets");
    CHECK(bad_target.exit_code == 1);
    CHECK(bad_target.output.find("unknown target column") != std::string::npos);
}

} // TEST_SUITE
