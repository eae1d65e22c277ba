#include "flowprompt/bundle.hpp"

#include "flowprompt/csv.hpp"
#include "flowprompt/errors.hpp"
#include "flowprompt/rounding.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace flowprompt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig small_config(const fs::path& dir) {
    RunConfig config;
    config.train_csv = dir / "train.csv";
    config.test_csv = dir / "test.csv";
    config.out_dir = dir / "bundle";
    config.n = 60;
    config.dev_size = 20;
    config.bootstrap_b = 200;
    write_csv(config.train_csv, synth::make_dataset(120, 120, 1001));
    write_csv(config.test_csv, synth::make_dataset(90, 90, 2002));
    return config;
}

} // namespace

TEST_CASE("cmd_run emits the complete bundle layout") {
    TempDir dir("fp_bundle_complete");
    const RunConfig config = small_config(dir.path);
    const EvalBundle bundle = cmd_run(config);

    for (const char* name :
         {"grammar.gbnf", "template.json", "thresholds.json", "calibration.json", "predictions.csv",
          "metrics.json", "confusion.json", "curves.csv", "ids.txt", "config.json", "manifest.json"}) {
        CHECK(fs::exists(config.out_dir / name));
    }
    CHECK(fs::exists(config.out_dir / "prompts"));
    CHECK(bundle.dev_count == 20);
    CHECK(bundle.test_count == 40);

    // one rendered text per evaluated id
    size_t prompt_files = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(config.out_dir / "prompts"))
        ++prompt_files;
    CHECK(prompt_files == 60);

    // grammar artifact is byte-exact
    CHECK(slurp(config.out_dir / "grammar.gbnf") == emit_gbnf().gbnf_text);

    // manifest covers exactly the bundle files with matching hashes
    CHECK(verify_manifest(config.out_dir) >= 11);

    // predictions row count equals the test selection size
    const CsvTable predictions = read_csv_file(config.out_dir / "predictions.csv");
    CHECK(predictions.rows.size() == 40);
    CHECK(predictions.header ==
          std::vector<std::string>{"id", "label", "p_attack", "prediction", "latency_ms", "error"});
    for (const auto& row : predictions.rows) CHECK(row[5].empty()); // mock never fails
}

TEST_CASE("cmd_run is byte-identical across repeated runs") {
    TempDir dir("fp_bundle_determinism");
    RunConfig config = small_config(dir.path);
    config.mode = {PromptVariant::few_shot, 1};

    config.out_dir = dir.path / "bundle_a";
    cmd_run(config);
    config.out_dir = dir.path / "bundle_b";
    cmd_run(config);

    for (const char* name : {"predictions.csv", "calibration.json", "metrics.json"}) {
        CHECK(slurp(dir.path / "bundle_a" / name) == slurp(dir.path / "bundle_b" / name));
    }
}

TEST_CASE("predictions column equals the frozen threshold applied to re-parsed scores") {
    TempDir dir("fp_bundle_threshold_consistency");
    const RunConfig config = small_config(dir.path);
    cmd_run(config);
    const CalibrationResult calibration =
        CalibrationResult::load(config.out_dir / "calibration.json");
    const CsvTable predictions = read_csv_file(config.out_dir / "predictions.csv");
    for (const auto& row : predictions.rows) {
        if (!row[5].empty()) continue;
        double score = 0.0;
        std::from_chars(row[2].data(), row[2].data() + row[2].size(), score);
        const bool attack = score >= calibration.tau_star;
        CHECK(row[3] == (attack ? "attack" : "benign"));
    }
}

TEST_CASE("cmd_run into the same directory is idempotent") {
    TempDir dir("fp_bundle_idempotent");
    const RunConfig config = small_config(dir.path);
    cmd_run(config);
    const std::string first = slurp(config.out_dir / "predictions.csv");
    cmd_run(config);
    CHECK(slurp(config.out_dir / "predictions.csv") == first);
    CHECK(verify_manifest(config.out_dir) > 0);
}

TEST_CASE("bundle enforces the dev/test leakage guard") {
    TempDir dir("fp_bundle_leakage");
    RunConfig config = small_config(dir.path);
    config.mode = {PromptVariant::few_shot, 2};
    cmd_run(config);

    const auto [dev_ids, test_ids] = read_ids_file(config.out_dir / "ids.txt");
    const std::set<std::int64_t> dev_set(dev_ids.begin(), dev_ids.end());
    const std::set<std::int64_t> test_set(test_ids.begin(), test_ids.end());
    for (std::int64_t id : dev_ids) CHECK(!test_set.count(id));

    const CsvTable predictions = read_csv_file(config.out_dir / "predictions.csv");
    CHECK(predictions.rows.size() == test_set.size());
    for (const auto& row : predictions.rows) {
        const std::int64_t id = std::stoll(row[0]);
        CHECK(!dev_set.count(id));   // no dev id in predictions
        CHECK(test_set.count(id));
    }
}

TEST_CASE("failing stage is named and the manifest marks INCOMPLETE") {
    TempDir dir("fp_bundle_fail");
    RunConfig config = small_config(dir.path);
    config.dev_size = config.n; // forces DevTooLarge inside split
    try {
        cmd_run(config);
        FAIL("expected DevTooLarge");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DevTooLarge);
        CHECK(err.stage() == "split");
    }
    const std::string manifest = slurp(config.out_dir / "manifest.json");
    CHECK(manifest.find("INCOMPLETE") != std::string::npos);
    CHECK(manifest.find("\"failed_stage\": \"split\"") != std::string::npos);
}

TEST_CASE("cmd_report carries the reference rows and this bundle's row") {
    TempDir dir("fp_bundle_report");
    const RunConfig config = small_config(dir.path);
    cmd_run(config);
    const std::string report = cmd_report(config.out_dir);

    CHECK(report.find("XGBoost (Balanced, Light)") != std::string::npos);
    CHECK(report.find("0.9528") != std::string::npos);
    CHECK(report.find("Linear SVM (Balanced)") != std::string::npos);
    CHECK(report.find("0.9327") != std::string::npos);
    CHECK(report.find("Qwen Calibrated (Recall-heavy)") != std::string::npos);
    CHECK(report.find("this bundle") != std::string::npos);
    CHECK(report.find(config.run_name) != std::string::npos);

    // deterministic for a fixed bundle
    CHECK(cmd_report(config.out_dir) == report);
}

TEST_CASE("cmd_report rejects an incomplete bundle") {
    TempDir dir("fp_bundle_report_incomplete");
    const RunConfig config = small_config(dir.path);
    cmd_run(config);
    fs::remove(config.out_dir / "metrics.json");
    try {
        cmd_report(config.out_dir);
        FAIL("expected IncompleteBundle");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::IncompleteBundle);
    }
}

TEST_CASE("injected confusion counts reproduce the recorded balanced run") {
    TempDir dir("fp_bundle_inject");
    // synthesize predictions.csv realizing (TN=70, FP=28, FN=15, TP=87)
    CsvTable predictions;
    predictions.header = {"id", "label", "p_attack", "prediction", "latency_ms", "error"};
    std::int64_t next_id = 1;
    auto add_rows = [&](int count, int label, const char* pred, const char* p) {
        for (int i = 0; i < count; ++i)
            predictions.rows.push_back({std::to_string(next_id++), std::to_string(label), p, pred,
                                        "0", ""});
    };
    add_rows(87, 1, "attack", "0.9");
    add_rows(15, 1, "benign", "0.1");
    add_rows(28, 0, "attack", "0.8");
    add_rows(70, 0, "benign", "0.2");
    const fs::path predictions_path = dir.path / "predictions.csv";
    write_csv_file(predictions_path, predictions);

    cmd_evaluate(predictions_path, dir.path / "out", std::nan(""), 200, 13);
    const MetricsReport report = load_metrics_json(dir.path / "out" / "metrics.json");
    CHECK(report.metrics.accuracy == 0.785);
    CHECK(report.metrics.f1_pos == 0.8018);
    const ConfusionMatrix cm = ConfusionMatrix::load(dir.path / "out" / "confusion.json");
    CHECK(cm.tp == 87);
    CHECK(cm.fp == 28);
    CHECK(cm.tn == 70);
    CHECK(cm.fn == 15);
}

TEST_CASE("cmd_evaluate can re-threshold from p_attack") {
    TempDir dir("fp_bundle_rethreshold");
    CsvTable predictions;
    predictions.header = {"id", "label", "p_attack", "prediction", "latency_ms", "error"};
    predictions.rows = {
        {"1", "1", "0.9", "benign", "0", ""},  // prediction column deliberately wrong
        {"2", "0", "0.2", "attack", "0", ""},
        {"3", "1", "0.8", "benign", "0", ""},
        {"4", "0", "0.1", "attack", "0", ""},
    };
    const fs::path path = dir.path / "predictions.csv";
    write_csv_file(path, predictions);

    cmd_evaluate(path, dir.path / "out", 0.5, 200, 13);
    const ConfusionMatrix cm = ConfusionMatrix::load(dir.path / "out" / "confusion.json");
    CHECK(cm.tp == 2);
    CHECK(cm.tn == 2);
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);
}

TEST_CASE("verify_manifest detects tampering") {
    TempDir dir("fp_bundle_tamper");
    const RunConfig config = small_config(dir.path);
    cmd_run(config);
    CHECK(verify_manifest(config.out_dir) > 0);

    std::ofstream out(config.out_dir / "predictions.csv", std::ios::app);
    out << "tampered\n";
    out.close();
    CHECK_THROWS_AS(verify_manifest(config.out_dir), Error);
}
