#pragma once

#include "flowprompt/calibration.hpp"
#include "flowprompt/inference.hpp"
#include "flowprompt/metrics.hpp"
#include "flowprompt/prompt.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace flowprompt {

struct RunConfig {
    std::filesystem::path train_csv;
    std::filesystem::path test_csv;
    std::filesystem::path out_dir;
    std::int64_t n = 200;
    std::int64_t dev_size = 50;
    std::uint64_t seed_sampling = 7;
    std::uint64_t seed_exemplar = 11;
    std::uint64_t seed_bootstrap = 13;
    PromptMode mode{PromptVariant::instruction, 1};
    std::filesystem::path thresholds_file; // optional; defaults when empty
    BackendConfig backend = BackendConfig::mock_default();
    int bootstrap_b = 2000;
    std::string run_name = "run";
};

/// Summary of a completed run; the directory holds the full artifact set
/// (prompts/, grammar.gbnf, template.json, thresholds.json,
/// calibration.json, predictions.csv, metrics.json, confusion.json,
/// curves.csv, ids.txt, config.json, manifest.json).
struct EvalBundle {
    std::filesystem::path dir;
    CalibrationResult calibration;
    ConfusionMatrix cm;
    Metrics metrics;
    size_t dev_count = 0;
    size_t test_count = 0;
    size_t failed_count = 0;
};

/// Full pipeline: ingest, rarity fit on the training file, balanced
/// sampling, dev/test split, render, prompt, inference, dev calibration,
/// frozen-threshold evaluation, bundle emission. A failing stage writes an
/// INCOMPLETE manifest naming the stage and rethrows.
EvalBundle cmd_run(const RunConfig& config);

/// Metrics table for a complete bundle next to the fixed reference rows.
std::string cmd_report(const std::filesystem::path& bundle_dir);

/// Recompute metrics artifacts (metrics.json, confusion.json, curves.csv)
/// from a predictions.csv. When tau is NaN the prediction column is used
/// as-is; otherwise decisions are re-derived from p_attack.
void cmd_evaluate(const std::filesystem::path& predictions_csv,
                  const std::filesystem::path& out_dir, double tau, int bootstrap_b,
                  std::uint64_t bootstrap_seed);

/// Verify every manifest hash; returns the number of files checked.
size_t verify_manifest(const std::filesystem::path& bundle_dir);

} // namespace flowprompt
