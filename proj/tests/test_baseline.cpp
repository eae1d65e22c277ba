#include "flowprompt/baseline.hpp"

#include "flowprompt/errors.hpp"
#include "flowprompt/rng.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace flowprompt;

namespace {

double gaussian(SplitMix64& rng, double mean, double sigma) {
    // Box-Muller
    const double u1 = std::max(rng.next_double(), 1e-12);
    const double u2 = rng.next_double();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::pair<std::vector<FeatureVector>, std::vector<int>> two_blobs(size_t per_class,
                                                                  std::uint64_t seed,
                                                                  double sigma = 0.5) {
    SplitMix64 rng(seed);
    std::vector<FeatureVector> x;
    std::vector<int> y;
    for (size_t i = 0; i < per_class; ++i) {
        x.push_back({gaussian(rng, -2.0, sigma), gaussian(rng, -2.0, sigma)});
        y.push_back(0);
        x.push_back({gaussian(rng, 2.0, sigma), gaussian(rng, 2.0, sigma)});
        y.push_back(1);
    }
    return {std::move(x), std::move(y)};
}

std::map<int, double> balanced_weights(const std::vector<int>& y) {
    const double n = static_cast<double>(y.size());
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    return {{0, n / (2.0 * (n - pos))}, {1, n / (2.0 * pos)}};
}

} // namespace

TEST_CASE("standardizer maps the mean to zero and guards constant columns") {
    Dataset train = synth::make_dataset(10, 10, 21, 2);
    // make one extra column constant
    for (auto& rec : train.records) rec.extra_numeric[1] = 7.5;

    const FittedTransform fitted = fit_transform(train);
    const size_t const_idx = fitted.standardizer.names.size() - 1;
    CHECK(fitted.standardizer.stds[const_idx] == 1.0); // sigma floor applied
    for (const auto& v : fitted.train_vectors) CHECK(v[const_idx] == 0.0);

    // z = 0 exactly when the value equals the column mean
    const double mean0 = fitted.standardizer.means[0];
    Dataset probe = train;
    probe.records.resize(1);
    probe.records[0].dur = mean0;
    const auto vectors = transform(fitted.standardizer, fitted.encoder, probe);
    CHECK(vectors[0][0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("feature dimension counts numerics plus one-hot widths") {
    // 11 named numerics + 28 extras = 39 numerics; 2 protos, 3 services, 2 states
    Dataset train;
    for (size_t i = 0; i < 28; ++i) train.extra_names.push_back("x" + std::to_string(i));
    static const char* services[] = {"http", "dns", "smtp"};
    for (int i = 0; i < 12; ++i) {
        FlowRecord rec;
        rec.id = i + 1;
        rec.proto = i % 2 == 0 ? "tcp" : "udp";
        rec.service = services[i % 3];
        rec.state = i % 2 == 0 ? "FIN" : "CON";
        rec.label = i % 2;
        rec.extra_numeric.assign(28, static_cast<double>(i));
        train.records.push_back(rec);
    }
    const FittedTransform fitted = fit_transform(train);
    CHECK(fitted.standardizer.names.size() == 39);
    CHECK(fitted.encoder.width() == 7);
    REQUIRE(!fitted.train_vectors.empty());
    CHECK(fitted.train_vectors[0].size() == 46);
}

TEST_CASE("unknown categories map to the all-zero block") {
    const Dataset train = synth::make_dataset(20, 20, 33);
    const FittedTransform fitted = fit_transform(train);

    Dataset probe = train;
    probe.records.resize(1);
    probe.records[0].service = "never-seen-service";
    const auto vectors = transform(fitted.standardizer, fitted.encoder, probe);

    const size_t numeric_width = fitted.standardizer.names.size();
    size_t offset = numeric_width + fitted.encoder.columns[0].categories.size();
    double service_block_sum = 0.0;
    for (size_t i = 0; i < fitted.encoder.columns[1].categories.size(); ++i)
        service_block_sum += vectors[0][offset + i];
    CHECK(service_block_sum == 0.0);
}

TEST_CASE("transform of training records matches fit_transform output") {
    const Dataset train = synth::make_dataset(15, 15, 44);
    const FittedTransform fitted = fit_transform(train);
    const auto again = transform(fitted.standardizer, fitted.encoder, train);
    REQUIRE(again.size() == fitted.train_vectors.size());
    for (size_t i = 0; i < again.size(); ++i) CHECK(again[i] == fitted.train_vectors[i]);
}

TEST_CASE("transform rejects a missing numeric column") {
    const Dataset train = synth::make_dataset(10, 10, 50, 3);
    const FittedTransform fitted = fit_transform(train);
    Dataset probe = synth::make_dataset(2, 2, 50, 2); // one extra column fewer
    try {
        transform(fitted.standardizer, fitted.encoder, probe);
        FAIL("expected DimensionMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("preprocessor serialization reproduces transforms bit-for-bit") {
    const Dataset train = synth::make_dataset(25, 25, 61);
    const FittedTransform fitted = fit_transform(train);
    const auto path = std::filesystem::temp_directory_path() / "fp_preprocessor.json";
    save_preprocessor(path, fitted.standardizer, fitted.encoder);
    const auto [std_loaded, ohe_loaded] = load_preprocessor(path);

    const auto direct = transform(fitted.standardizer, fitted.encoder, train);
    const auto reloaded = transform(std_loaded, ohe_loaded, train);
    REQUIRE(direct.size() == reloaded.size());
    for (size_t i = 0; i < direct.size(); ++i) CHECK(direct[i] == reloaded[i]);
    std::filesystem::remove(path);
}

TEST_CASE("analytic gradient matches central finite differences") {
    SplitMix64 rng(70);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t d = 1 + rng.next_below(10);
        const size_t n = 2 + rng.next_below(48);
        std::vector<FeatureVector> x(n, FeatureVector(d));
        std::vector<int> y(n);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) x[i][j] = 2.0 * rng.next_double() - 1.0;
            y[i] = rng.next_double() < 0.5 ? 1 : 0;
        }
        y[0] = 1;
        y[1] = 0;
        std::vector<double> w(d);
        for (auto& wi : w) wi = 2.0 * rng.next_double() - 1.0;
        const double bias = 2.0 * rng.next_double() - 1.0;
        const double lambda = rng.next_double() * 0.1;
        const auto cw = balanced_weights(y);

        const auto [grad_w, grad_b] = logreg_gradient(w, bias, x, y, lambda, cw);

        const double h = 1e-6;
        for (size_t j = 0; j < d; ++j) {
            auto plus = w, minus = w;
            plus[j] += h;
            minus[j] -= h;
            const double fd = (logreg_objective(plus, bias, x, y, lambda, cw) -
                               logreg_objective(minus, bias, x, y, lambda, cw)) /
                              (2.0 * h);
            CHECK(std::abs(fd - grad_w[j]) < 1e-4 * std::max(1.0, std::abs(grad_w[j])));
        }
        const double fd_b = (logreg_objective(w, bias + h, x, y, lambda, cw) -
                             logreg_objective(w, bias - h, x, y, lambda, cw)) /
                            (2.0 * h);
        CHECK(std::abs(fd_b - grad_b) < 1e-4 * std::max(1.0, std::abs(grad_b)));
    }
}

TEST_CASE("training separates two Gaussian blobs") {
    const auto [x, y] = two_blobs(100, 5);
    TrainOptions options;
    options.epochs = 100;
    options.step = 0.5;
    const LogRegModel model = train_logreg(x, y, options);
    const auto probs = predict_proba(model, x);
    size_t correct = 0;
    for (size_t i = 0; i < y.size(); ++i)
        if ((probs[i] >= 0.5 ? 1 : 0) == y[i]) ++correct;
    CHECK(static_cast<double>(correct) / static_cast<double>(y.size()) >= 0.99);
}

TEST_CASE("huge L2 penalty shrinks the weights away") {
    const auto [x, y] = two_blobs(100, 6);
    TrainOptions options;
    options.lambda = 1e6;
    options.epochs = 100;
    const LogRegModel model = train_logreg(x, y, options);
    double norm = 0.0;
    for (double w : model.weights) norm += w * w;
    CHECK(std::sqrt(norm) < 1e-2);
}

TEST_CASE("training is deterministic per seed and never raises the objective") {
    const auto [x, y] = two_blobs(50, 7, 1.5);
    TrainOptions options;
    options.epochs = 40;
    options.seed = 3;
    const LogRegModel a = train_logreg(x, y, options);
    const LogRegModel b = train_logreg(x, y, options);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);

    const auto cw = balanced_weights(y);
    const double initial =
        logreg_objective(std::vector<double>(x[0].size(), 0.0), 0.0, x, y, options.lambda, cw);
    const double final_objective = logreg_objective(a.weights, a.bias, x, y, options.lambda, cw);
    CHECK(final_objective <= initial);
}

TEST_CASE("class weights follow the balanced heuristic") {
    const auto [x, y_orig] = two_blobs(50, 8);
    auto y = y_orig;
    // unbalance it: drop most positives
    std::vector<FeatureVector> x2;
    std::vector<int> y2;
    int kept_pos = 0;
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1 && kept_pos >= 10) continue;
        if (y[i] == 1) ++kept_pos;
        x2.push_back(x[i]);
        y2.push_back(y[i]);
    }
    const LogRegModel model = train_logreg(x2, y2, {});
    const double n = static_cast<double>(y2.size());
    CHECK(model.class_weights.at(1) == doctest::Approx(n / (2.0 * 10.0)));
    CHECK(model.class_weights.at(0) == doctest::Approx(n / (2.0 * (n - 10.0))));
}

TEST_CASE("train_logreg error paths") {
    try {
        train_logreg({{1.0}, {2.0}}, {1, 1}, {});
        FAIL("expected SingleClass");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::SingleClass);
    }
    try {
        train_logreg({{1.0}}, {1, 0}, {});
        FAIL("expected LengthMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::LengthMismatch);
    }
}

TEST_CASE("predict_proba is stable and monotone") {
    LogRegModel model;
    model.weights = {0.0};
    model.bias = 0.0;
    model.class_weights = {{0, 1.0}, {1, 1.0}};
    CHECK(predict_proba(model, {{3.0}})[0] == 0.5);

    model.bias = 40.0;
    CHECK(predict_proba(model, {{0.0}})[0] == doctest::Approx(1.0).epsilon(1e-15));
    model.bias = -1000.0;
    CHECK(predict_proba(model, {{0.0}})[0] >= 0.0);
    CHECK(std::isfinite(predict_proba(model, {{0.0}})[0]));

    model.bias = 0.0;
    model.weights = {2.0};
    const auto probs = predict_proba(model, {{-1.0}, {0.0}, {1.0}});
    CHECK(probs[0] < probs[1]);
    CHECK(probs[1] < probs[2]);

    try {
        predict_proba(model, {{1.0, 2.0}});
        FAIL("expected DimensionMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("logreg model round-trips through json") {
    const auto [x, y] = two_blobs(30, 9);
    const LogRegModel model = train_logreg(x, y, {});
    const auto path = std::filesystem::temp_directory_path() / "fp_logreg.json";
    model.save(path);
    const LogRegModel loaded = LogRegModel::load(path);
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.lambda == model.lambda);
    CHECK(loaded.class_weights == model.class_weights);
    std::filesystem::remove(path);
}
