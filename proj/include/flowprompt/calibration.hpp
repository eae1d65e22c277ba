#pragma once

#include <filesystem>
#include <utility>
#include <vector>

namespace flowprompt {

/// Result of the dev-slice threshold sweep. F1 as a function of tau is
/// piecewise constant between observed scores, so the candidate set
/// {0} + unique scores is exact; tau_star is the smallest candidate
/// attaining the maximum.
struct CalibrationResult {
    double tau_star = 0.0;
    double dev_f1 = 0.0;
    int candidate_count = 0;
    std::vector<std::pair<double, double>> sweep; // (tau, f1), tau ascending

    void save(const std::filesystem::path& json_path) const;
    static CalibrationResult load(const std::filesystem::path& json_path);
};

/// F1 on the positive class with the zero-denominator convention
/// (precision, recall and F1 are 0 when their denominators are 0).
double f1_from_counts(long long tp, long long fp, long long fn);

CalibrationResult calibrate_threshold(const std::vector<double>& scores,
                                      const std::vector<int>& labels);

/// y_i = 1 iff score_i >= tau (inclusive boundary, pinned).
std::vector<int> apply_threshold(const std::vector<double>& scores, double tau);

} // namespace flowprompt
