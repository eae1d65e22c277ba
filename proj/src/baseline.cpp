#include "flowprompt/baseline.hpp"

#include "flowprompt/errors.hpp"
#include "flowprompt/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace flowprompt {

namespace {

constexpr double kStdFloor = 1e-12;

const std::vector<std::string>& named_numeric_columns() {
    static const std::vector<std::string> cols = {
        "dur",    "spkts",  "dpkts",  "sbytes", "dbytes",      "sttl",
        "dttl",   "tcprtt", "synack", "ackdat", "ct_state_ttl",
    };
    return cols;
}

std::vector<double> numeric_row(const FlowRecord& rec) {
    std::vector<double> row = {
        rec.dur,
        static_cast<double>(rec.spkts),
        static_cast<double>(rec.dpkts),
        static_cast<double>(rec.sbytes),
        static_cast<double>(rec.dbytes),
        static_cast<double>(rec.sttl),
        static_cast<double>(rec.dttl),
        rec.tcprtt,
        rec.synack,
        rec.ackdat,
        static_cast<double>(rec.ct_state_ttl),
    };
    row.insert(row.end(), rec.extra_numeric.begin(), rec.extra_numeric.end());
    return row;
}

std::vector<std::string> numeric_names(const Dataset& data) {
    std::vector<std::string> names = named_numeric_columns();
    names.insert(names.end(), data.extra_names.begin(), data.extra_names.end());
    return names;
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

const std::string& categorical_value(const FlowRecord& rec, const std::string& column) {
    if (column == "proto") return rec.proto;
    if (column == "service") return rec.service;
    return rec.state;
}

FeatureVector build_vector(const Standardizer& standardizer, const OneHotEncoder& encoder,
                           const FlowRecord& rec, const std::vector<double>& numerics) {
    FeatureVector v;
    v.reserve(standardizer.names.size() + encoder.width());
    for (size_t i = 0; i < numerics.size(); ++i)
        v.push_back((numerics[i] - standardizer.means[i]) / standardizer.stds[i]);
    for (const auto& column : encoder.columns) {
        const std::string& value = categorical_value(rec, column.name);
        for (const auto& category : column.categories)
            v.push_back(category == value ? 1.0 : 0.0); // unknown => all-zero block
    }
    return v;
}

} // namespace

size_t OneHotEncoder::width() const {
    size_t w = 0;
    for (const auto& column : columns) w += column.categories.size();
    return w;
}

FittedTransform fit_transform(const Dataset& train) {
    if (train.records.empty()) throw Error(ErrorCode::EmptyTrain, "transform fit requires records");

    FittedTransform fitted;
    fitted.standardizer.names = numeric_names(train);
    const size_t d_num = fitted.standardizer.names.size();
    fitted.standardizer.means.assign(d_num, 0.0);
    fitted.standardizer.stds.assign(d_num, 0.0);

    const double n = static_cast<double>(train.records.size());
    std::vector<std::vector<double>> rows;
    rows.reserve(train.records.size());
    for (const auto& rec : train.records) {
        rows.push_back(numeric_row(rec));
        for (size_t i = 0; i < d_num; ++i) fitted.standardizer.means[i] += rows.back()[i];
    }
    for (double& mean : fitted.standardizer.means) mean /= n;
    for (const auto& row : rows)
        for (size_t i = 0; i < d_num; ++i) {
            const double delta = row[i] - fitted.standardizer.means[i];
            fitted.standardizer.stds[i] += delta * delta;
        }
    for (double& std_val : fitted.standardizer.stds) {
        std_val = std::sqrt(std_val / n);
        if (std_val < kStdFloor) std_val = 1.0;
    }

    for (const char* column : {"proto", "service", "state"}) {
        OneHotEncoder::Column col;
        col.name = column;
        for (const auto& rec : train.records) {
            const std::string& value = categorical_value(rec, col.name);
            if (std::find(col.categories.begin(), col.categories.end(), value) == col.categories.end())
                col.categories.push_back(value); // first-seen order
        }
        fitted.encoder.columns.push_back(std::move(col));
    }

    fitted.train_vectors.reserve(train.records.size());
    for (size_t r = 0; r < train.records.size(); ++r)
        fitted.train_vectors.push_back(
            build_vector(fitted.standardizer, fitted.encoder, train.records[r], rows[r]));
    return fitted;
}

std::vector<FeatureVector> transform(const Standardizer& standardizer, const OneHotEncoder& encoder,
                                     const Dataset& records) {
    const auto names = numeric_names(records);
    if (names != standardizer.names)
        throw Error(ErrorCode::DimensionMismatch,
                    "numeric columns differ from the fitted transformer");
    std::vector<FeatureVector> out;
    out.reserve(records.records.size());
    for (const auto& rec : records.records)
        out.push_back(build_vector(standardizer, encoder, rec, numeric_row(rec)));
    return out;
}

void save_preprocessor(const std::filesystem::path& json_path, const Standardizer& standardizer,
                       const OneHotEncoder& encoder) {
    nlohmann::ordered_json doc;
    doc["numeric"] = {{"names", standardizer.names},
                      {"means", standardizer.means},
                      {"stds", standardizer.stds}};
    auto categorical = nlohmann::ordered_json::array();
    for (const auto& column : encoder.columns)
        categorical.push_back({{"name", column.name}, {"categories", column.categories}});
    doc["categorical"] = std::move(categorical);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

std::pair<Standardizer, OneHotEncoder> load_preprocessor(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    Standardizer standardizer;
    standardizer.names = doc.at("numeric").at("names").get<std::vector<std::string>>();
    standardizer.means = doc.at("numeric").at("means").get<std::vector<double>>();
    standardizer.stds = doc.at("numeric").at("stds").get<std::vector<double>>();
    OneHotEncoder encoder;
    for (const auto& column : doc.at("categorical")) {
        OneHotEncoder::Column col;
        col.name = column.at("name").get<std::string>();
        col.categories = column.at("categories").get<std::vector<std::string>>();
        encoder.columns.push_back(std::move(col));
    }
    return {std::move(standardizer), std::move(encoder)};
}

double logreg_objective(const std::vector<double>& weights, double bias,
                        const std::vector<FeatureVector>& x, const std::vector<int>& y,
                        double lambda, const std::map<int, double>& class_weights) {
    double loss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double z = bias;
        for (size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[i][j];
        double p = stable_sigmoid(z);
        p = std::clamp(p, 1e-12, 1.0 - 1e-12);
        const double w = class_weights.at(y[i]);
        loss += w * (y[i] == 1 ? -std::log(p) : -std::log(1.0 - p));
    }
    double reg = 0.0;
    for (double w : weights) reg += w * w;
    return loss + lambda * reg;
}

std::pair<std::vector<double>, double> logreg_gradient(
    const std::vector<double>& weights, double bias, const std::vector<FeatureVector>& x,
    const std::vector<int>& y, double lambda, const std::map<int, double>& class_weights) {
    std::vector<double> grad_w(weights.size(), 0.0);
    double grad_b = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double z = bias;
        for (size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[i][j];
        const double residual = class_weights.at(y[i]) * (stable_sigmoid(z) - static_cast<double>(y[i]));
        for (size_t j = 0; j < weights.size(); ++j) grad_w[j] += residual * x[i][j];
        grad_b += residual;
    }
    for (size_t j = 0; j < weights.size(); ++j) grad_w[j] += 2.0 * lambda * weights[j];
    return {std::move(grad_w), grad_b};
}

LogRegModel train_logreg(const std::vector<FeatureVector>& x, const std::vector<int>& y,
                         const TrainOptions& options) {
    if (x.size() != y.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(x.size()) + " vectors vs " + std::to_string(y.size()) + " labels");
    const long long n_pos = std::count(y.begin(), y.end(), 1);
    const long long n = static_cast<long long>(y.size());
    if (n == 0 || n_pos == 0 || n_pos == n)
        throw Error(ErrorCode::SingleClass, "training needs both classes");

    LogRegModel model;
    model.lambda = options.lambda;
    model.weights.assign(x[0].size(), 0.0);
    model.class_weights[0] = static_cast<double>(n) / (2.0 * static_cast<double>(n - n_pos));
    model.class_weights[1] = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));

    const size_t batch = std::min<size_t>(std::max(1, options.batch_size), x.size());
    double step = options.step;
    double best_objective =
        logreg_objective(model.weights, model.bias, x, y, model.lambda, model.class_weights);

    std::vector<size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        // deterministic per-epoch Fisher-Yates shuffle
        SplitMix64 rng(mix64(options.seed, static_cast<std::uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        const std::vector<double> saved_weights = model.weights;
        const double saved_bias = model.bias;

        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(start + batch, order.size());
            std::vector<double> grad_w(model.weights.size(), 0.0);
            double grad_b = 0.0;
            for (size_t k = start; k < end; ++k) {
                const size_t i = order[k];
                double z = model.bias;
                for (size_t j = 0; j < model.weights.size(); ++j) z += model.weights[j] * x[i][j];
                const double residual =
                    model.class_weights.at(y[i]) * (stable_sigmoid(z) - static_cast<double>(y[i]));
                for (size_t j = 0; j < model.weights.size(); ++j) grad_w[j] += residual * x[i][j];
                grad_b += residual;
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            const double reg_scale = 2.0 * model.lambda / static_cast<double>(n);
            for (size_t j = 0; j < model.weights.size(); ++j)
                model.weights[j] -= step * (grad_w[j] * scale + reg_scale * model.weights[j]);
            model.bias -= step * grad_b * scale;
        }

        for (double w : model.weights)
            if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteLoss, "weights diverged; lower the step");
        if (!std::isfinite(model.bias))
            throw Error(ErrorCode::NonFiniteLoss, "bias diverged; lower the step");

        const double objective =
            logreg_objective(model.weights, model.bias, x, y, model.lambda, model.class_weights);
        if (!std::isfinite(objective))
            throw Error(ErrorCode::NonFiniteLoss, "objective diverged; lower the step");
        if (objective > best_objective) {
            model.weights = saved_weights;
            model.bias = saved_bias;
            step *= 0.5;
            if (step < 1e-12) break;
        } else {
            best_objective = objective;
        }
    }
    return model;
}

std::vector<double> predict_proba(const LogRegModel& model, const std::vector<FeatureVector>& x) {
    std::vector<double> probs;
    probs.reserve(x.size());
    for (const auto& row : x) {
        if (row.size() != model.weights.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "feature vector of dim " + std::to_string(row.size()) + ", model expects " +
                            std::to_string(model.weights.size()));
        double z = model.bias;
        for (size_t j = 0; j < row.size(); ++j) z += model.weights[j] * row[j];
        probs.push_back(stable_sigmoid(z));
    }
    return probs;
}

void LogRegModel::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["weights"] = weights;
    doc["bias"] = bias;
    doc["lambda"] = lambda;
    nlohmann::ordered_json cw;
    for (const auto& [label, weight] : class_weights) cw[std::to_string(label)] = weight;
    doc["class_weights"] = std::move(cw);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

LogRegModel LogRegModel::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    LogRegModel model;
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
    model.lambda = doc.at("lambda").get<double>();
    for (auto it = doc.at("class_weights").begin(); it != doc.at("class_weights").end(); ++it)
        model.class_weights[std::stoi(it.key())] = it.value().get<double>();
    return model;
}

} // namespace flowprompt
