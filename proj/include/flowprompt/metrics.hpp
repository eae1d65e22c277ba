#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace flowprompt {

struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }

    void save(const std::filesystem::path& json_path) const;
    static ConfusionMatrix load(const std::filesystem::path& json_path);
};

/// Attack (label 1) is the positive class. Zero-denominator scores are
/// defined as 0, which the all-benign collapse rows require.
struct Metrics {
    double accuracy = 0.0;
    double precision_pos = 0.0;
    double recall_pos = 0.0;
    double f1_pos = 0.0;
    double precision_neg = 0.0;
    double recall_neg = 0.0;
    double f1_neg = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

struct IntervalEstimate {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string method; // "wilson" or "bootstrap"
};

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& preds);

Metrics classification_metrics(const ConfusionMatrix& cm);

/// Wilson score interval for a binomial proportion; point is k/n.
IntervalEstimate wilson_ci(long long successes, long long n, double z = 1.96);

/// Percentile bootstrap (2.5/97.5) over paired resamples of (label, pred);
/// per-resample RNG streams derive from (seed, resample index).
IntervalEstimate bootstrap_f1_ci(const std::vector<int>& labels, const std::vector<int>& preds,
                                 int b, std::uint64_t seed);

struct CurvePoints {
    std::vector<double> thresholds;               // descending unique scores
    std::vector<std::pair<double, double>> roc;   // (fpr, tpr) incl. (0,0) and (1,1)
    std::vector<std::pair<double, double>> pr;    // (recall, precision) per threshold
    double auc_roc = 0.0;
};

CurvePoints roc_pr_points(const std::vector<double>& scores, const std::vector<int>& labels);

/// curves.csv: threshold,fpr,tpr,precision,recall, one row per threshold.
void write_curves_csv(const std::filesystem::path& path, const CurvePoints& curves);

struct MetricsReport {
    Metrics metrics;
    IntervalEstimate accuracy_wilson;
    IntervalEstimate precision_pos_wilson;
    IntervalEstimate recall_pos_wilson;
    IntervalEstimate f1_pos_bootstrap;
    long long n = 0;
    int bootstrap_b = 0;
    std::uint64_t bootstrap_seed = 0;
};

/// metrics.json with every value rounded half-to-even to 4 decimals.
void save_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport load_metrics_json(const std::filesystem::path& path);

} // namespace flowprompt
