#include "flowprompt/inference.hpp"

#include "flowprompt/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace flowprompt {

const char* to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::none: return "";
        case FailureKind::timeout: return "Timeout";
        case FailureKind::http_error: return "HttpError";
        case FailureKind::grammar_violation: return "GrammarViolation";
        case FailureKind::budget_exceeded: return "BudgetExceeded";
    }
    return "";
}

BackendConfig BackendConfig::mock_default() {
    BackendConfig config;
    config.kind = BackendKind::mock;
    config.grammar = emit_gbnf();
    return config;
}

void BackendConfig::validate() const {
    if (temperature != 0.0 || top_p != 1.0)
        throw Error(ErrorCode::BadValue, "decoding must stay deterministic: temperature 0, top_p 1");
    if (n_batch < 1) throw Error(ErrorCode::BadValue, "n_batch must be >= 1");
    if (n_ctx < 1) throw Error(ErrorCode::BadValue, "n_ctx must be >= 1");
    if (max_retries < 0) throw Error(ErrorCode::BadValue, "max_retries must be >= 0");
}

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// chars/3 proxy for the token count of a prompt
bool within_context_budget(const std::string& prompt, int n_ctx) {
    return prompt.size() <= static_cast<size_t>(n_ctx) * 3;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return (value && *value) ? std::string(value) : fallback;
}

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    const size_t scheme = url.find("://");
    const size_t path_start = (scheme == std::string::npos)
                                  ? url.find('/')
                                  : url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

InferenceOutcome mock_classify(const BackendConfig& config, std::int64_t record_id,
                               const FlagSet& flags) {
    const double score =
        config.mock.bias + config.mock.per_flag_weight * static_cast<double>(flags.count_true());
    const double p = stable_sigmoid(score);
    const Prediction pred = p >= 0.5 ? Prediction::attack : Prediction::benign;

    InferenceOutcome outcome;
    outcome.record_id = record_id;
    outcome.verdict = make_verdict(pred, p); // through the canonical JSON + parse path
    outcome.latency_ms = 0.0;
    outcome.attempts = 1;
    return outcome;
}

InferenceOutcome remote_classify(const BackendConfig& config, std::int64_t record_id,
                                 const std::string& prompt) {
    const std::string endpoint = !config.endpoint.empty()
                                     ? config.endpoint
                                     : env_or("FLOWPROMPT_ENDPOINT", "");
    InferenceOutcome outcome;
    outcome.record_id = record_id;
    if (endpoint.empty()) {
        outcome.failure = {FailureKind::http_error, 0, "no endpoint configured"};
        outcome.attempts = 0;
        return outcome;
    }
    const auto [base, path] = split_endpoint(endpoint);
    const std::string api_key = !config.api_key.empty() ? config.api_key : env_or("FLOWPROMPT_API_KEY", "");

    nlohmann::json body;
    if (!config.model_name.empty()) body["model"] = config.model_name;
    body["prompt"] = prompt;
    body["temperature"] = config.temperature;
    body["top_p"] = config.top_p;
    body["grammar"] = config.grammar.gbnf_text;
    const std::string payload = body.dump();

    const auto started = std::chrono::steady_clock::now();
    InferenceFailure last_failure;
    int attempts = 0;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            const double delay_s = config.backoff_base_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
        }
        ++attempts;

        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration<double>(config.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(config.timeout_s));
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            const auto err = result.error();
            const bool timed_out =
                err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            last_failure = {timed_out ? FailureKind::timeout : FailureKind::http_error, 0,
                            httplib::to_string(err)};
            continue; // transport errors are retryable
        }
        if (result->status < 200 || result->status >= 300) {
            last_failure = {FailureKind::http_error, result->status,
                            "HTTP " + std::to_string(result->status)};
            if (retryable_status(result->status)) continue;
            break;
        }

        std::string completion;
        try {
            nlohmann::json response = nlohmann::json::parse(result->body);
            completion = response.at("choices").at(0).at("text").get<std::string>();
        } catch (const std::exception& ex) {
            last_failure = {FailureKind::http_error, result->status,
                            std::string("unusable response body: ") + ex.what()};
            break;
        }

        try {
            outcome.verdict = parse_verdict(completion);
            last_failure = {};
        } catch (const Error& ex) {
            // backend not honoring the grammar constraint; deterministic, no retry
            last_failure = {FailureKind::grammar_violation, result->status, ex.what()};
        }
        break;
    }

    outcome.failure = last_failure;
    outcome.attempts = attempts;
    outcome.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    return outcome;
}

} // namespace

InferenceOutcome classify_flow(const BackendConfig& config, const std::string& prompt,
                               const FlagSet& flags, std::int64_t record_id) {
    config.validate();
    if (prompt.empty()) throw Error(ErrorCode::BadValue, "prompt must be non-empty");

    if (!within_context_budget(prompt, config.n_ctx)) {
        InferenceOutcome outcome;
        outcome.record_id = record_id;
        outcome.failure = {FailureKind::budget_exceeded, 0,
                           "prompt of " + std::to_string(prompt.size()) + " chars exceeds n_ctx " +
                               std::to_string(config.n_ctx)};
        outcome.attempts = 0;
        return outcome;
    }
    if (config.kind == BackendKind::mock) return mock_classify(config, record_id, flags);
    return remote_classify(config, record_id, prompt);
}

std::vector<InferenceOutcome> classify_batch(const BackendConfig& config,
                                             const std::vector<BatchItem>& items) {
    config.validate();
    if (items.empty()) throw Error(ErrorCode::Empty, "batch must be non-empty");

    std::vector<InferenceOutcome> outcomes(items.size());
    const size_t hw = std::max<size_t>(1, std::thread::hardware_concurrency());
    const size_t workers = std::min({static_cast<size_t>(config.n_batch), items.size(),
                                     config.kind == BackendKind::mock ? hw : size_t{32}});

    std::atomic<size_t> cursor{0};
    auto work = [&]() {
        while (true) {
            const size_t i = cursor.fetch_add(1);
            if (i >= items.size()) break;
            const auto& item = items[i];
            try {
                outcomes[i] = classify_flow(config, item.prompt, item.flags, item.record_id);
            } catch (const Error& ex) {
                InferenceOutcome failed;
                failed.record_id = item.record_id;
                failed.failure = {FailureKind::http_error, 0, ex.what()};
                failed.attempts = 0;
                outcomes[i] = std::move(failed);
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

} // namespace flowprompt
