#include "flowprompt/bundle.hpp"
#include "flowprompt/calibration.hpp"
#include "flowprompt/csv.hpp"
#include "flowprompt/dataset.hpp"
#include "flowprompt/errors.hpp"
#include "flowprompt/flags.hpp"
#include "flowprompt/render.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>

namespace fp = flowprompt;
namespace fs = std::filesystem;

namespace {

fp::Dataset load_with_optional_manifest(const std::string& csv, const std::string& manifest) {
    if (manifest.empty()) return fp::load_csv(csv);
    return fp::load_csv(csv, fp::core_columns(), fp::SchemaManifest::load(manifest));
}

int run_ingest(const std::string& csv, const std::string& manifest) {
    const fp::Dataset data = load_with_optional_manifest(csv, manifest);
    std::int64_t benign = 0, attack = 0;
    for (const auto& rec : data.records) (rec.label == 0 ? benign : attack)++;
    std::cout << "rows: " << data.records.size() << "\n"
              << "benign: " << benign << "\n"
              << "attack: " << attack << "\n"
              << "extra numeric columns: " << data.extra_names.size() << "\n";
    return 0;
}

int run_flags(const std::string& train, const std::string& thresholds_file,
              const std::string& rarity_out, const std::string& csv, const std::string& emit) {
    const fp::FlagThresholds thresholds =
        thresholds_file.empty() ? fp::FlagThresholds{} : fp::FlagThresholds::load(thresholds_file);
    const fp::Dataset train_data = fp::load_csv(train);
    const fp::RarityTable rarity = fp::fit_rarity_table(train_data.records, thresholds);
    if (!rarity_out.empty()) {
        rarity.save(rarity_out);
        std::cout << "wrote " << rarity_out << "\n";
    }
    if (!csv.empty()) {
        const fp::Dataset data = fp::load_csv(csv);
        fp::CsvTable table;
        table.header = {"id"};
        for (const char* name : fp::FlagSet::names()) table.header.push_back(name);
        for (const auto& rec : data.records) {
            const fp::FlagSet flags =
                fp::compute_flags(fp::compute_cues(rec), rec, thresholds, rarity);
            std::vector<std::string> row = {std::to_string(rec.id)};
            for (size_t i = 0; i < fp::FlagSet::kCount; ++i)
                row.push_back(flags.get(i) ? "true" : "false");
            table.rows.push_back(std::move(row));
        }
        if (emit.empty()) {
            for (const auto& row : table.rows) {
                for (size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << row[i];
                std::cout << "\n";
            }
        } else {
            fp::write_csv_file(emit, table);
            std::cout << "wrote " << emit << "\n";
        }
    }
    return 0;
}

int run_render(const std::string& csv, const std::string& train, const std::string& rarity_file,
               const std::string& thresholds_file, const std::string& out_dir) {
    fp::FlowRenderer renderer;
    renderer.policy = fp::RenderPolicy::defaults();
    renderer.thresholds =
        thresholds_file.empty() ? fp::FlagThresholds{} : fp::FlagThresholds::load(thresholds_file);
    if (!rarity_file.empty()) {
        renderer.rarity = fp::RarityTable::load(rarity_file);
    } else if (!train.empty()) {
        renderer.rarity = fp::fit_rarity_table(fp::load_csv(train).records, renderer.thresholds);
    } else {
        throw fp::Error(fp::ErrorCode::BadValue, "render needs --rarity or --train");
    }
    const fp::Dataset data = fp::load_csv(csv);
    if (!out_dir.empty()) fs::create_directories(out_dir);
    for (const auto& rec : data.records) {
        const fp::FlowText text = renderer.render(rec);
        if (out_dir.empty()) {
            std::cout << text.text << "\n";
        } else {
            std::ofstream out(fs::path(out_dir) / (std::to_string(rec.id) + ".txt"),
                              std::ios::binary);
            out << text.text;
        }
    }
    return 0;
}

int run_calibrate(const std::string& scores_csv, const std::string& out) {
    const fp::CsvTable table = fp::read_csv_file(scores_csv);
    auto column = [&](const char* name) {
        for (size_t i = 0; i < table.header.size(); ++i)
            if (table.header[i] == name) return i;
        throw fp::Error(fp::ErrorCode::MissingColumn, std::string("no '") + name + "' column");
    };
    const size_t label_col = column("label");
    const size_t score_col = column("p_attack");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& row : table.rows) {
        if (row[score_col].empty()) continue;
        double score = 0.0;
        const auto* end = row[score_col].data() + row[score_col].size();
        if (std::from_chars(row[score_col].data(), end, score).ptr != end)
            throw fp::Error(fp::ErrorCode::BadValue, "bad p_attack value '" + row[score_col] + "'");
        scores.push_back(score);
        labels.push_back(row[label_col] == "1" ? 1 : 0);
    }
    const fp::CalibrationResult result = fp::calibrate_threshold(scores, labels);
    result.save(out);
    std::cout << "tau_star: " << result.tau_star << "\n"
              << "dev_f1: " << result.dev_f1 << "\n"
              << "candidates: " << result.candidate_count << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-to-text intrusion detection pipeline with grammar-constrained verdicts"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load and validate a flow CSV");
    std::string ingest_csv, ingest_manifest;
    ingest->add_option("--csv", ingest_csv, "flow CSV path")->required();
    ingest->add_option("--schema-manifest", ingest_manifest, "alias-to-canonical column map (JSON)");

    // flags
    auto* flags_cmd = app.add_subcommand("flags", "Fit the rarity table / emit per-row flags");
    std::string flags_train, flags_thresholds, flags_rarity_out, flags_csv, flags_emit;
    flags_cmd->add_option("--train", flags_train, "training CSV for rarity frequencies")->required();
    flags_cmd->add_option("--thresholds", flags_thresholds, "thresholds.json overrides");
    flags_cmd->add_option("--rarity-out", flags_rarity_out, "where to write rarity.json");
    flags_cmd->add_option("--csv", flags_csv, "rows to flag");
    flags_cmd->add_option("--emit", flags_emit, "write flags CSV here instead of stdout");

    // render
    auto* render_cmd = app.add_subcommand("render", "Serialize flows to text");
    std::string render_csv, render_train, render_rarity, render_thresholds, render_out;
    render_cmd->add_option("--csv", render_csv, "rows to render")->required();
    render_cmd->add_option("--train", render_train, "training CSV (fits rarity on the fly)");
    render_cmd->add_option("--rarity", render_rarity, "precomputed rarity.json");
    render_cmd->add_option("--thresholds", render_thresholds, "thresholds.json overrides");
    render_cmd->add_option("--out", render_out, "directory for <id>.txt files (default: stdout)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Full pipeline into a reproducibility bundle");
    fp::RunConfig config;
    std::string run_train, run_test, run_out, run_mode = "instruction", run_backend = "mock";
    std::string run_thresholds, run_endpoint, run_model, run_name = "run";
    int run_k = 1;
    bool force_mock = false;
    run_cmd->add_option("--train", run_train, "training CSV")->required();
    run_cmd->add_option("--test", run_test, "testing CSV")->required();
    run_cmd->add_option("--out", run_out, "bundle output directory")->required();
    run_cmd->add_option("--n", config.n, "balanced subset size (even)");
    run_cmd->add_option("--mode", run_mode, "zero_shot | instruction | few_shot");
    run_cmd->add_option("--k", run_k, "few-shot exemplars per class (1 or 2)");
    run_cmd->add_option("--dev-size", config.dev_size, "dev slice size");
    run_cmd->add_option("--seed", config.seed_sampling, "sampling seed");
    run_cmd->add_option("--seed-exemplar", config.seed_exemplar, "exemplar selection seed");
    run_cmd->add_option("--seed-bootstrap", config.seed_bootstrap, "bootstrap seed");
    run_cmd->add_option("--backend", run_backend, "mock | remote");
    run_cmd->add_option("--endpoint", run_endpoint, "completion endpoint URL (remote)");
    run_cmd->add_option("--model", run_model, "model name passed to the backend");
    run_cmd->add_flag("--mock", force_mock, "force the mock backend");
    run_cmd->add_option("--thresholds", run_thresholds, "thresholds.json overrides");
    run_cmd->add_option("--bootstrap-b", config.bootstrap_b, "bootstrap resamples");
    run_cmd->add_option("--timeout", config.backend.timeout_s, "request timeout (seconds)");
    run_cmd->add_option("--retries", config.backend.max_retries, "max retries per request");
    run_cmd->add_option("--name", run_name, "run name recorded in config.json");

    // calibrate
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Pick tau* from a scores CSV");
    std::string cal_scores, cal_out = "calibration.json";
    calibrate_cmd->add_option("--scores", cal_scores, "CSV with label and p_attack columns")->required();
    calibrate_cmd->add_option("--out", cal_out, "output calibration.json");

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Recompute metrics from predictions.csv");
    std::string eval_predictions, eval_out = ".";
    double eval_tau = std::nan("");
    int eval_b = 2000;
    std::uint64_t eval_seed = 13;
    evaluate_cmd->add_option("--predictions", eval_predictions, "predictions.csv")->required();
    evaluate_cmd->add_option("--out", eval_out, "output directory");
    evaluate_cmd->add_option("--tau", eval_tau, "re-threshold p_attack at tau (default: use prediction column)");
    evaluate_cmd->add_option("--bootstrap-b", eval_b, "bootstrap resamples");
    evaluate_cmd->add_option("--seed-bootstrap", eval_seed, "bootstrap seed");

    // report
    auto* report_cmd = app.add_subcommand("report", "Metrics table vs the published reference rows");
    std::string report_bundle;
    report_cmd->add_option("--bundle", report_bundle, "bundle directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return run_ingest(ingest_csv, ingest_manifest);
        if (*flags_cmd)
            return run_flags(flags_train, flags_thresholds, flags_rarity_out, flags_csv, flags_emit);
        if (*render_cmd)
            return run_render(render_csv, render_train, render_rarity, render_thresholds, render_out);
        if (*run_cmd) {
            config.train_csv = run_train;
            config.test_csv = run_test;
            config.out_dir = run_out;
            config.mode.variant = fp::prompt_variant_from_string(run_mode);
            config.mode.k_per_class = run_k;
            config.thresholds_file = run_thresholds;
            config.run_name = run_name;
            config.backend.kind = (force_mock || run_backend == "mock") ? fp::BackendKind::mock
                                                                        : fp::BackendKind::remote;
            config.backend.endpoint = run_endpoint;
            config.backend.model_name = run_model;
            const fp::EvalBundle bundle = fp::cmd_run(config);
            std::cout << "bundle: " << bundle.dir.string() << "\n"
                      << "dev/test: " << bundle.dev_count << "/" << bundle.test_count << "\n"
                      << "tau_star: " << bundle.calibration.tau_star << "\n"
                      << "accuracy: " << bundle.metrics.accuracy << "\n"
                      << "f1_pos: " << bundle.metrics.f1_pos << "\n";
            if (bundle.failed_count > 0)
                std::cout << "failed items: " << bundle.failed_count << "\n";
            return 0;
        }
        if (*calibrate_cmd) return run_calibrate(cal_scores, cal_out);
        if (*evaluate_cmd) {
            fp::cmd_evaluate(eval_predictions, eval_out, eval_tau, eval_b, eval_seed);
            std::cout << "wrote metrics.json, confusion.json, curves.csv to " << eval_out << "\n";
            return 0;
        }
        if (*report_cmd) {
            std::cout << fp::cmd_report(report_bundle);
            return 0;
        }
    } catch (const fp::Error& err) {
        if (!err.stage().empty())
            std::cerr << "error at stage '" << err.stage() << "': " << err.what() << "\n";
        else
            std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
