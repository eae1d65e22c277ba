#include "flowprompt/calibration.hpp"

#include "flowprompt/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace flowprompt {

double f1_from_counts(long long tp, long long fp, long long fn) {
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

CalibrationResult calibrate_threshold(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " scores vs " +
                                                   std::to_string(labels.size()) + " labels");
    const long long total_pos = std::count(labels.begin(), labels.end(), 1);
    if (scores.empty() || total_pos == 0)
        throw Error(ErrorCode::NoPositives, "F1 is undefined without positive labels");

    // candidates: 0.0 plus every unique score
    std::vector<double> candidates = scores;
    candidates.push_back(0.0);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // items sorted by descending score; walking candidates from high to low
    // lets tp/fp accumulate incrementally
    std::vector<std::pair<double, int>> items(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) items[i] = {scores[i], labels[i]};
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    CalibrationResult result;
    result.sweep.resize(candidates.size());

    long long tp = 0, fp = 0;
    size_t consumed = 0;
    for (size_t c = candidates.size(); c-- > 0;) {
        const double tau = candidates[c];
        while (consumed < items.size() && items[consumed].first >= tau) {
            if (items[consumed].second == 1) ++tp;
            else ++fp;
            ++consumed;
        }
        result.sweep[c] = {tau, f1_from_counts(tp, fp, total_pos - tp)};
    }

    result.candidate_count = static_cast<int>(candidates.size());
    result.dev_f1 = 0.0;
    for (const auto& [tau, f1] : result.sweep)
        result.dev_f1 = std::max(result.dev_f1, f1);
    for (const auto& [tau, f1] : result.sweep) {
        if (f1 == result.dev_f1) {
            result.tau_star = tau; // sweep is ascending, first hit is the smallest
            break;
        }
    }
    return result;
}

std::vector<int> apply_threshold(const std::vector<double>& scores, double tau) {
    std::vector<int> preds(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= tau ? 1 : 0;
    return preds;
}

void CalibrationResult::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["tau_star"] = tau_star;
    doc["dev_f1"] = dev_f1;
    doc["candidate_count"] = candidate_count;
    auto sweep_json = nlohmann::ordered_json::array();
    for (const auto& [tau, f1] : sweep) sweep_json.push_back({tau, f1});
    doc["sweep"] = std::move(sweep_json);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

CalibrationResult CalibrationResult::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    CalibrationResult result;
    result.tau_star = doc.at("tau_star").get<double>();
    result.dev_f1 = doc.at("dev_f1").get<double>();
    result.candidate_count = doc.at("candidate_count").get<int>();
    for (const auto& pair : doc.at("sweep"))
        result.sweep.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    return result;
}

} // namespace flowprompt
