#pragma once

#include "flowprompt/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flowprompt {

using FeatureVector = std::vector<double>;

/// Per-feature z-score parameters fitted on training data only. A std
/// below 1e-12 is replaced by 1 so constant columns map to 0.
struct Standardizer {
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stds;
};

/// First-seen category order per categorical column; unknown test-time
/// categories map to the all-zero block.
struct OneHotEncoder {
    struct Column {
        std::string name;
        std::vector<std::string> categories;
    };
    std::vector<Column> columns;

    size_t width() const;
};

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.0;
    std::map<int, double> class_weights;

    void save(const std::filesystem::path& json_path) const;
    static LogRegModel load(const std::filesystem::path& json_path);
};

struct FittedTransform {
    Standardizer standardizer;
    OneHotEncoder encoder;
    std::vector<FeatureVector> train_vectors;
};

/// Fit mu/sigma and category lists on train; vectors are standardized
/// numerics followed by the one-hot blocks for proto, service, state.
FittedTransform fit_transform(const Dataset& train);

std::vector<FeatureVector> transform(const Standardizer& standardizer, const OneHotEncoder& encoder,
                                     const Dataset& records);

void save_preprocessor(const std::filesystem::path& json_path, const Standardizer& standardizer,
                       const OneHotEncoder& encoder);
std::pair<Standardizer, OneHotEncoder> load_preprocessor(const std::filesystem::path& json_path);

struct TrainOptions {
    double lambda = 1e-4;
    int epochs = 200;
    double step = 0.5;
    std::uint64_t seed = 1;
    int batch_size = 64;
};

/// Class-weighted cross-entropy objective with L2 penalty:
/// sum_i w_{y_i} CE_i + lambda * ||w||^2, class weights n / (2 n_y).
double logreg_objective(const std::vector<double>& weights, double bias,
                        const std::vector<FeatureVector>& x, const std::vector<int>& y,
                        double lambda, const std::map<int, double>& class_weights);

/// Analytic gradient of logreg_objective; (d_weights, d_bias).
std::pair<std::vector<double>, double> logreg_gradient(
    const std::vector<double>& weights, double bias, const std::vector<FeatureVector>& x,
    const std::vector<int>& y, double lambda, const std::map<int, double>& class_weights);

/// Mini-batch gradient descent with a step-halving safeguard: an epoch
/// that raises the objective is rolled back and the step halves, so the
/// accepted objective never rises above its starting value.
LogRegModel train_logreg(const std::vector<FeatureVector>& x, const std::vector<int>& y,
                         const TrainOptions& options = {});

std::vector<double> predict_proba(const LogRegModel& model, const std::vector<FeatureVector>& x);

} // namespace flowprompt
