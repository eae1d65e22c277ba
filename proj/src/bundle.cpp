#include "flowprompt/bundle.hpp"

#include "flowprompt/csv.hpp"
#include "flowprompt/errors.hpp"
#include "flowprompt/hash.hpp"
#include "flowprompt/reference.hpp"
#include "flowprompt/render.hpp"
#include "flowprompt/rng.hpp"
#include "flowprompt/rounding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace flowprompt {

namespace {

namespace fs = std::filesystem;

template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (Error& err) {
        if (err.stage().empty()) err.set_stage(name);
        throw;
    }
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
}

// Locale-free, correctly-rounded; matches how verdict literals are parsed.
double parse_score(const std::string& text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(ErrorCode::BadValue, "bad p_attack value '" + text + "'");
    return value;
}

std::string failure_label(const InferenceFailure& failure) {
    if (failure.kind == FailureKind::none) return "";
    std::string label = to_string(failure.kind);
    if (failure.kind == FailureKind::http_error && failure.http_status != 0)
        label += ":" + std::to_string(failure.http_status);
    return label;
}

// Everything under dir except manifest.json, as sorted bundle-relative paths.
std::vector<std::string> bundle_files(const fs::path& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        files.push_back(std::move(rel));
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_manifest(const fs::path& dir, const std::string& status,
                    const std::string& failed_stage, const std::string& error) {
    nlohmann::ordered_json doc;
    doc["status"] = status;
    if (!failed_stage.empty()) doc["failed_stage"] = failed_stage;
    if (!error.empty()) doc["error"] = error;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& rel : bundle_files(dir)) files[rel] = sha256_file_hex(dir / rel);
    doc["files"] = std::move(files);
    write_text_file(dir / "manifest.json", doc.dump(2) + "\n");
}

nlohmann::ordered_json config_to_json(const RunConfig& config) {
    nlohmann::ordered_json doc;
    doc["run_name"] = config.run_name;
    doc["train_csv"] = config.train_csv.string();
    doc["test_csv"] = config.test_csv.string();
    doc["out_dir"] = config.out_dir.string();
    doc["n"] = config.n;
    doc["dev_size"] = config.dev_size;
    doc["seed_sampling"] = config.seed_sampling;
    doc["seed_exemplar"] = config.seed_exemplar;
    doc["seed_bootstrap"] = config.seed_bootstrap;
    doc["mode"] = {{"variant", to_string(config.mode.variant)},
                   {"k_per_class", config.mode.k_per_class}};
    doc["thresholds_file"] = config.thresholds_file.string();
    nlohmann::ordered_json backend;
    backend["kind"] = config.backend.kind == BackendKind::mock ? "mock" : "remote";
    backend["endpoint"] = config.backend.endpoint;
    backend["model_name"] = config.backend.model_name;
    backend["temperature"] = config.backend.temperature;
    backend["top_p"] = config.backend.top_p;
    backend["n_ctx"] = config.backend.n_ctx;
    backend["n_batch"] = config.backend.n_batch;
    backend["timeout_s"] = config.backend.timeout_s;
    backend["max_retries"] = config.backend.max_retries;
    backend["mock_bias"] = config.backend.mock.bias;
    backend["mock_per_flag_weight"] = config.backend.mock.per_flag_weight;
    backend["grammar_version"] = config.backend.grammar.version;
    doc["backend"] = std::move(backend);
    doc["bootstrap_b"] = config.bootstrap_b;
    return doc;
}

struct EvaluationArtifacts {
    ConfusionMatrix cm;
    Metrics metrics;
};

EvaluationArtifacts write_metric_artifacts(const fs::path& dir, const std::vector<int>& labels,
                                           const std::vector<int>& preds,
                                           const std::vector<double>& scores, int bootstrap_b,
                                           std::uint64_t bootstrap_seed) {
    EvaluationArtifacts artifacts;
    artifacts.cm = confusion(labels, preds);
    artifacts.metrics = classification_metrics(artifacts.cm);

    MetricsReport report;
    report.metrics = artifacts.metrics;
    report.n = artifacts.cm.total();
    report.accuracy_wilson = wilson_ci(artifacts.cm.tp + artifacts.cm.tn, artifacts.cm.total());
    report.precision_pos_wilson =
        (artifacts.cm.tp + artifacts.cm.fp) > 0
            ? wilson_ci(artifacts.cm.tp, artifacts.cm.tp + artifacts.cm.fp)
            : IntervalEstimate{0.0, 0.0, 0.0, "wilson"};
    report.recall_pos_wilson =
        (artifacts.cm.tp + artifacts.cm.fn) > 0
            ? wilson_ci(artifacts.cm.tp, artifacts.cm.tp + artifacts.cm.fn)
            : IntervalEstimate{0.0, 0.0, 0.0, "wilson"};
    report.f1_pos_bootstrap = bootstrap_f1_ci(labels, preds, bootstrap_b, bootstrap_seed);
    report.bootstrap_b = bootstrap_b;
    report.bootstrap_seed = bootstrap_seed;
    save_metrics_json(dir / "metrics.json", report);

    artifacts.cm.save(dir / "confusion.json");

    try {
        write_curves_csv(dir / "curves.csv", roc_pr_points(scores, labels));
    } catch (const Error& err) {
        if (err.code() != ErrorCode::SingleClass) throw;
        write_text_file(dir / "curves.csv", "threshold,fpr,tpr,precision,recall\n");
    }
    return artifacts;
}

} // namespace

EvalBundle cmd_run(const RunConfig& config) {
    config.backend.validate();
    fs::create_directories(config.out_dir);
    // stale rendered texts from a previous run would otherwise leak into the manifest
    fs::remove_all(config.out_dir / "prompts");
    fs::create_directories(config.out_dir / "prompts");

    EvalBundle bundle;
    bundle.dir = config.out_dir;

    try {
        Dataset train = stage("ingest", [&] { return load_csv(config.train_csv); });
        Dataset test = stage("ingest", [&] { return load_csv(config.test_csv); });

        FlowRenderer renderer;
        renderer.policy = RenderPolicy::defaults();
        renderer.thresholds = config.thresholds_file.empty()
                                  ? FlagThresholds{}
                                  : FlagThresholds::load(config.thresholds_file);
        stage("rarity", [&] {
            renderer.rarity = fit_rarity_table(train.records, renderer.thresholds);
            return 0;
        });

        SubsetSelection subset =
            stage("sample", [&] { return sample_balanced(test, config.n, config.seed_sampling); });
        auto [dev_sel, test_sel] = stage("split", [&] {
            return split_dev_test(test, subset, config.dev_size, mix64(config.seed_sampling, 1));
        });
        bundle.dev_count = dev_sel.size();
        bundle.test_count = test_sel.size();

        const auto id_index = index_by_id(test);
        auto record_of = [&](std::int64_t id) -> const FlowRecord& {
            return test.records[id_index.at(id)];
        };

        struct RenderedItem {
            std::int64_t id;
            int label;
            FlowText flow;
            FlagSet flags;
        };
        std::vector<RenderedItem> dev_items, test_items;
        stage("render", [&] {
            auto render_ids = [&](const SubsetSelection& sel, std::vector<RenderedItem>& out) {
                out.reserve(sel.size());
                for (std::int64_t id : sel.ids) {
                    const FlowRecord& rec = record_of(id);
                    RenderedItem item;
                    item.id = id;
                    item.label = rec.label;
                    item.flow = renderer.render(rec);
                    item.flags = renderer.flags_for(rec);
                    write_text_file(config.out_dir / "prompts" / (std::to_string(id) + ".txt"),
                                    item.flow.text);
                    out.push_back(std::move(item));
                }
            };
            render_ids(dev_sel, dev_items);
            render_ids(test_sel, test_items);
            return 0;
        });

        const PromptTemplate tmpl = PromptTemplate::defaults();
        std::vector<Exemplar> exemplars;
        std::vector<BatchItem> dev_batch, test_batch;
        stage("prompt", [&] {
            if (config.mode.variant == PromptVariant::few_shot) {
                std::vector<FlowRecord> dev_records;
                dev_records.reserve(dev_sel.size());
                for (std::int64_t id : dev_sel.ids) dev_records.push_back(record_of(id));
                exemplars = select_exemplars(dev_records, config.mode.k_per_class,
                                             config.seed_exemplar, renderer);
                // leakage guard: exemplars must come from the dev slice only
                const std::set<std::int64_t> dev_ids(dev_sel.ids.begin(), dev_sel.ids.end());
                for (const auto& ex : exemplars) {
                    if (!dev_ids.count(ex.flow_text.record_id))
                        throw Error(ErrorCode::BadValue, "exemplar drawn outside the dev slice");
                }
            }
            auto to_batch = [&](const std::vector<RenderedItem>& items, std::vector<BatchItem>& out) {
                out.reserve(items.size());
                for (const auto& item : items)
                    out.push_back({item.id, build_prompt(config.mode, item.flow, tmpl, exemplars),
                                   item.flags});
            };
            to_batch(dev_items, dev_batch);
            to_batch(test_items, test_batch);
            return 0;
        });

        std::vector<InferenceOutcome> dev_outcomes, test_outcomes;
        stage("inference", [&] {
            dev_outcomes = classify_batch(config.backend, dev_batch);
            test_outcomes = classify_batch(config.backend, test_batch);
            return 0;
        });

        stage("calibrate", [&] {
            std::vector<double> scores;
            std::vector<int> labels;
            for (size_t i = 0; i < dev_outcomes.size(); ++i) {
                if (!dev_outcomes[i].ok()) continue;
                scores.push_back(dev_outcomes[i].verdict->p_attack);
                labels.push_back(dev_items[i].label);
            }
            bundle.calibration = calibrate_threshold(scores, labels);
            bundle.calibration.save(config.out_dir / "calibration.json");
            return 0;
        });

        std::vector<int> test_labels, test_preds;
        std::vector<double> test_scores;
        stage("evaluate", [&] {
            for (size_t i = 0; i < test_outcomes.size(); ++i) {
                if (!test_outcomes[i].ok()) {
                    ++bundle.failed_count;
                    continue;
                }
                test_scores.push_back(test_outcomes[i].verdict->p_attack);
                test_labels.push_back(test_items[i].label);
            }
            test_preds = apply_threshold(test_scores, bundle.calibration.tau_star);
            auto artifacts =
                write_metric_artifacts(config.out_dir, test_labels, test_preds, test_scores,
                                       config.bootstrap_b, config.seed_bootstrap);
            bundle.cm = artifacts.cm;
            bundle.metrics = artifacts.metrics;
            return 0;
        });

        stage("bundle", [&] {
            write_text_file(config.out_dir / "grammar.gbnf", config.backend.grammar.gbnf_text);
            tmpl.save(config.out_dir / "template.json");
            renderer.thresholds.save(config.out_dir / "thresholds.json");
            write_ids_file(config.out_dir / "ids.txt", dev_sel, test_sel);
            write_text_file(config.out_dir / "config.json", config_to_json(config).dump(2) + "\n");

            CsvTable predictions;
            predictions.header = {"id", "label", "p_attack", "prediction", "latency_ms", "error"};
            size_t score_idx = 0;
            for (size_t i = 0; i < test_outcomes.size(); ++i) {
                const auto& outcome = test_outcomes[i];
                std::vector<std::string> row(6);
                row[0] = std::to_string(test_items[i].id);
                row[1] = std::to_string(test_items[i].label);
                if (outcome.ok()) {
                    row[2] = outcome.verdict->p_attack_literal;
                    row[3] = test_preds[score_idx] == 1 ? "attack" : "benign";
                    ++score_idx;
                }
                row[4] = format_shortest(outcome.latency_ms);
                row[5] = failure_label(outcome.failure);
                predictions.rows.push_back(std::move(row));
            }
            write_csv_file(config.out_dir / "predictions.csv", predictions);
            write_manifest(config.out_dir, "COMPLETE", "", "");
            return 0;
        });
    } catch (const Error& err) {
        write_manifest(config.out_dir, "INCOMPLETE", err.stage(), err.what());
        throw;
    }
    return bundle;
}

namespace {

std::string pad(const std::string& text, size_t width) {
    std::string out = text;
    if (out.size() < width) out.append(width - out.size(), ' ');
    return out + "  ";
}

void append_row(std::string& out, const std::string& name, const std::string& type,
                const std::string& accuracy, const std::string& precision,
                const std::string& recall, const std::string& f1, const std::string& macro_f1) {
    out += pad(name, 32) + pad(type, 26) + pad(accuracy, 8) + pad(precision, 8) + pad(recall, 9) +
           pad(f1, 8) + pad(macro_f1, 8);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
}

} // namespace

std::string cmd_report(const std::filesystem::path& bundle_dir) {
    const fs::path manifest_path = bundle_dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw Error(ErrorCode::IncompleteBundle, "no manifest.json in " + bundle_dir.string());
    std::ifstream manifest_in(manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(manifest_in);
    if (manifest.value("status", "") != "COMPLETE")
        throw Error(ErrorCode::IncompleteBundle,
                    "bundle status is '" + manifest.value("status", "") + "'");
    if (!fs::exists(bundle_dir / "metrics.json"))
        throw Error(ErrorCode::IncompleteBundle, "metrics.json missing from bundle");

    const MetricsReport report = load_metrics_json(bundle_dir / "metrics.json");

    std::string run_name = "this run";
    std::string run_type = "LLM pipeline";
    {
        std::ifstream config_in(bundle_dir / "config.json");
        if (config_in) {
            nlohmann::json config = nlohmann::json::parse(config_in, nullptr, false);
            if (!config.is_discarded()) {
                run_name = config.value("run_name", run_name);
                std::string mode = config.contains("mode") ? config["mode"].value("variant", "") : "";
                std::string backend =
                    config.contains("backend") ? config["backend"].value("kind", "") : "";
                if (!mode.empty()) run_type = backend + " / " + mode;
            }
        }
    }

    auto cell = [](double value) { return format_fixed(value, 4); };

    std::string out;
    append_row(out, "Model / Run", "Type", "Acc", "Prec(+)", "Recall(+)", "F1(+)", "Macro-F1");
    out += "-- published tabular baselines (full official split) --\n";
    for (const auto& row : tabular_reference_rows())
        append_row(out, row.name, row.type, row.accuracy, row.precision_pos, row.recall_pos,
                   row.f1_pos, row.macro_f1);
    out += "-- published prompt-pipeline runs (recorded subsets) --\n";
    for (const auto& row : llm_reference_rows())
        append_row(out, row.name, row.type, row.accuracy, row.precision_pos, row.recall_pos,
                   row.f1_pos, row.macro_f1);
    out += "-- this bundle (n=" + std::to_string(report.n) + ") --\n";
    append_row(out, run_name, run_type, cell(report.metrics.accuracy),
               cell(report.metrics.precision_pos), cell(report.metrics.recall_pos),
               cell(report.metrics.f1_pos), cell(report.metrics.macro_f1));
    return out;
}

void cmd_evaluate(const std::filesystem::path& predictions_csv,
                  const std::filesystem::path& out_dir, double tau, int bootstrap_b,
                  std::uint64_t bootstrap_seed) {
    CsvTable table = read_csv_file(predictions_csv);
    auto column = [&](const char* name) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            throw Error(ErrorCode::MissingColumn, std::string("predictions file lacks '") + name + "'");
        return static_cast<size_t>(it - table.header.begin());
    };
    const size_t label_col = column("label");
    const size_t score_col = column("p_attack");
    const size_t pred_col = column("prediction");
    const size_t error_col = column("error");

    std::vector<int> labels, preds;
    std::vector<double> scores;
    for (const auto& row : table.rows) {
        if (!row[error_col].empty()) continue; // failed item: no verdict to score
        labels.push_back(row[label_col] == "1" ? 1 : 0);
        scores.push_back(parse_score(row[score_col]));
        if (std::isnan(tau)) {
            preds.push_back(row[pred_col] == "attack" ? 1 : 0);
        }
    }
    if (!std::isnan(tau)) preds = apply_threshold(scores, tau);

    fs::create_directories(out_dir);
    write_metric_artifacts(out_dir, labels, preds, scores, bootstrap_b, bootstrap_seed);
}

size_t verify_manifest(const std::filesystem::path& bundle_dir) {
    std::ifstream in(bundle_dir / "manifest.json");
    if (!in) throw Error(ErrorCode::IncompleteBundle, "no manifest.json in " + bundle_dir.string());
    nlohmann::json manifest = nlohmann::json::parse(in);

    const auto& files = manifest.at("files");
    const auto on_disk = bundle_files(bundle_dir);
    if (on_disk.size() != files.size())
        throw Error(ErrorCode::IncompleteBundle,
                    "manifest lists " + std::to_string(files.size()) + " files, bundle holds " +
                        std::to_string(on_disk.size()));
    size_t checked = 0;
    for (const auto& rel : on_disk) {
        if (!files.contains(rel))
            throw Error(ErrorCode::IncompleteBundle, "file not in manifest: " + rel);
        if (files.at(rel).get<std::string>() != sha256_file_hex(bundle_dir / rel))
            throw Error(ErrorCode::IncompleteBundle, "hash mismatch for " + rel);
        ++checked;
    }
    return checked;
}

} // namespace flowprompt
