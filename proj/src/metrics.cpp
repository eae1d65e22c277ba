#include "flowprompt/metrics.hpp"

#include "flowprompt/calibration.hpp"
#include "flowprompt/errors.hpp"
#include "flowprompt/rng.hpp"
#include "flowprompt/rounding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flowprompt {

namespace {

double safe_ratio(long long num, long long den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

double harmonic_f1(double precision, double recall) {
    return (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// Type-7 quantile over an already sorted vector.
double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& preds) {
    if (labels.size() != preds.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                                   std::to_string(preds.size()) + " predictions");
    if (labels.empty()) throw Error(ErrorCode::Empty, "no items to score");
    ConfusionMatrix cm;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) {
            preds[i] == 1 ? ++cm.tp : ++cm.fn;
        } else {
            preds[i] == 1 ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

Metrics classification_metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw Error(ErrorCode::Empty, "empty confusion matrix");
    Metrics m;
    m.accuracy = safe_ratio(cm.tp + cm.tn, cm.total());
    m.precision_pos = safe_ratio(cm.tp, cm.tp + cm.fp);
    m.recall_pos = safe_ratio(cm.tp, cm.tp + cm.fn);
    m.f1_pos = harmonic_f1(m.precision_pos, m.recall_pos);
    m.precision_neg = safe_ratio(cm.tn, cm.tn + cm.fn);
    m.recall_neg = safe_ratio(cm.tn, cm.tn + cm.fp);
    m.f1_neg = harmonic_f1(m.precision_neg, m.recall_neg);
    m.macro_precision = (m.precision_pos + m.precision_neg) / 2.0;
    m.macro_recall = (m.recall_pos + m.recall_neg) / 2.0;
    m.macro_f1 = (m.f1_pos + m.f1_neg) / 2.0;
    return m;
}

IntervalEstimate wilson_ci(long long successes, long long n, double z) {
    if (n <= 0 || successes < 0 || successes > n)
        throw Error(ErrorCode::BadCounts, "need 0 <= successes <= n with n > 0");
    const double nn = static_cast<double>(n);
    const double p_hat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p_hat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn)) / denom;
    IntervalEstimate est;
    est.point = p_hat;
    est.lo = std::max(0.0, center - half);
    est.hi = std::min(1.0, center + half);
    est.method = "wilson";
    return est;
}

IntervalEstimate bootstrap_f1_ci(const std::vector<int>& labels, const std::vector<int>& preds,
                                 int b, std::uint64_t seed) {
    if (labels.size() != preds.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                                   std::to_string(preds.size()) + " predictions");
    if (labels.empty()) throw Error(ErrorCode::Empty, "no items to resample");
    if (b < 100) throw Error(ErrorCode::BadCounts, "need at least 100 resamples");

    const size_t n = labels.size();
    std::vector<double> f1s;
    f1s.reserve(static_cast<size_t>(b));
    for (int r = 0; r < b; ++r) {
        SplitMix64 rng(mix64(seed, static_cast<std::uint64_t>(r)));
        long long tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < n; ++i) {
            const size_t j = static_cast<size_t>(rng.next_below(n));
            if (labels[j] == 1) {
                preds[j] == 1 ? ++tp : ++fn;
            } else if (preds[j] == 1) {
                ++fp;
            }
        }
        f1s.push_back(f1_from_counts(tp, fp, fn));
    }
    std::sort(f1s.begin(), f1s.end());

    long long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < n; ++i) {
        if (labels[i] == 1) {
            preds[i] == 1 ? ++tp : ++fn;
        } else if (preds[i] == 1) {
            ++fp;
        }
    }

    IntervalEstimate est;
    est.point = f1_from_counts(tp, fp, fn);
    est.lo = sorted_quantile(f1s, 0.025);
    est.hi = sorted_quantile(f1s, 0.975);
    // keep lo <= point <= hi even when the percentile ends land on the far
    // side of the point estimate (skewed small-n resamples can do that)
    est.lo = std::min(est.lo, est.point);
    est.hi = std::max(est.hi, est.point);
    est.method = "bootstrap";
    return est;
}

CurvePoints roc_pr_points(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                                   std::to_string(labels.size()) + " labels");
    const long long pos = std::count(labels.begin(), labels.end(), 1);
    const long long neg = static_cast<long long>(labels.size()) - pos;
    if (pos == 0 || neg == 0)
        throw Error(ErrorCode::SingleClass, "ROC/PR need both classes present");

    std::vector<std::pair<double, int>> items(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) items[i] = {scores[i], labels[i]};
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    CurvePoints curves;
    curves.roc.emplace_back(0.0, 0.0);
    long long tp = 0, fp = 0;
    size_t i = 0;
    while (i < items.size()) {
        const double threshold = items[i].first;
        while (i < items.size() && items[i].first == threshold) {
            items[i].second == 1 ? ++tp : ++fp;
            ++i;
        }
        curves.thresholds.push_back(threshold);
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        curves.roc.emplace_back(fpr, tpr);
        curves.pr.emplace_back(tpr, safe_ratio(tp, tp + fp));
    }
    if (curves.roc.back() != std::make_pair(1.0, 1.0)) curves.roc.emplace_back(1.0, 1.0);

    double auc = 0.0;
    for (size_t k = 1; k < curves.roc.size(); ++k) {
        const auto& [x0, y0] = curves.roc[k - 1];
        const auto& [x1, y1] = curves.roc[k];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    curves.auc_roc = auc;
    return curves;
}

void write_curves_csv(const std::filesystem::path& path, const CurvePoints& curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << "threshold,fpr,tpr,precision,recall\n";
    for (size_t i = 0; i < curves.thresholds.size(); ++i) {
        const auto& [fpr, tpr] = curves.roc[i + 1]; // slot 0 is the (0,0) anchor
        const auto& [recall, precision] = curves.pr[i];
        out << format_shortest(curves.thresholds[i]) << ',' << format_shortest(fpr) << ','
            << format_shortest(tpr) << ',' << format_shortest(precision) << ','
            << format_shortest(recall) << '\n';
    }
}

void ConfusionMatrix::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["tp"] = tp;
    doc["fp"] = fp;
    doc["tn"] = tn;
    doc["fn"] = fn;
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

ConfusionMatrix ConfusionMatrix::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    ConfusionMatrix cm;
    cm.tp = doc.at("tp").get<long long>();
    cm.fp = doc.at("fp").get<long long>();
    cm.tn = doc.at("tn").get<long long>();
    cm.fn = doc.at("fn").get<long long>();
    return cm;
}

namespace {

nlohmann::ordered_json interval_to_json(const IntervalEstimate& est) {
    nlohmann::ordered_json doc;
    doc["point"] = round_half_even(est.point, 4);
    doc["lo"] = round_half_even(est.lo, 4);
    doc["hi"] = round_half_even(est.hi, 4);
    doc["method"] = est.method;
    return doc;
}

IntervalEstimate interval_from_json(const nlohmann::json& doc) {
    IntervalEstimate est;
    est.point = doc.at("point").get<double>();
    est.lo = doc.at("lo").get<double>();
    est.hi = doc.at("hi").get<double>();
    est.method = doc.at("method").get<std::string>();
    return est;
}

} // namespace

void save_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
    nlohmann::ordered_json doc;
    const Metrics& m = report.metrics;
    doc["accuracy"] = round_half_even(m.accuracy, 4);
    doc["precision_pos"] = round_half_even(m.precision_pos, 4);
    doc["recall_pos"] = round_half_even(m.recall_pos, 4);
    doc["f1_pos"] = round_half_even(m.f1_pos, 4);
    doc["precision_neg"] = round_half_even(m.precision_neg, 4);
    doc["recall_neg"] = round_half_even(m.recall_neg, 4);
    doc["f1_neg"] = round_half_even(m.f1_neg, 4);
    doc["macro_precision"] = round_half_even(m.macro_precision, 4);
    doc["macro_recall"] = round_half_even(m.macro_recall, 4);
    doc["macro_f1"] = round_half_even(m.macro_f1, 4);
    doc["n"] = report.n;
    nlohmann::ordered_json intervals;
    intervals["accuracy_wilson"] = interval_to_json(report.accuracy_wilson);
    intervals["precision_pos_wilson"] = interval_to_json(report.precision_pos_wilson);
    intervals["recall_pos_wilson"] = interval_to_json(report.recall_pos_wilson);
    auto f1_json = interval_to_json(report.f1_pos_bootstrap);
    f1_json["b"] = report.bootstrap_b;
    f1_json["seed"] = report.bootstrap_seed;
    intervals["f1_pos_bootstrap"] = std::move(f1_json);
    doc["intervals"] = std::move(intervals);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

MetricsReport load_metrics_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    MetricsReport report;
    Metrics& m = report.metrics;
    m.accuracy = doc.at("accuracy").get<double>();
    m.precision_pos = doc.at("precision_pos").get<double>();
    m.recall_pos = doc.at("recall_pos").get<double>();
    m.f1_pos = doc.at("f1_pos").get<double>();
    m.precision_neg = doc.at("precision_neg").get<double>();
    m.recall_neg = doc.at("recall_neg").get<double>();
    m.f1_neg = doc.at("f1_neg").get<double>();
    m.macro_precision = doc.at("macro_precision").get<double>();
    m.macro_recall = doc.at("macro_recall").get<double>();
    m.macro_f1 = doc.at("macro_f1").get<double>();
    report.n = doc.at("n").get<long long>();
    const auto& intervals = doc.at("intervals");
    report.accuracy_wilson = interval_from_json(intervals.at("accuracy_wilson"));
    report.precision_pos_wilson = interval_from_json(intervals.at("precision_pos_wilson"));
    report.recall_pos_wilson = interval_from_json(intervals.at("recall_pos_wilson"));
    report.f1_pos_bootstrap = interval_from_json(intervals.at("f1_pos_bootstrap"));
    report.bootstrap_b = intervals.at("f1_pos_bootstrap").value("b", 0);
    report.bootstrap_seed = intervals.at("f1_pos_bootstrap").value("seed", 0ULL);
    return report;
}

} // namespace flowprompt
