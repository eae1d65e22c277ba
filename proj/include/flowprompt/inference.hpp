#pragma once

#include "flowprompt/flags.hpp"
#include "flowprompt/grammar.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowprompt {

enum class BackendKind { mock, remote };

/// Deterministic stand-in for a served model: a logistic score over the
/// number of true flags, emitted through the canonical JSON surface so the
/// mock exercises the same grammar path as a real backend.
struct MockWeights {
    double bias = -3.0;
    double per_flag_weight = 1.2;
};

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;   // remote only; FLOWPROMPT_ENDPOINT overrides when empty
    std::string model_name;
    double temperature = 0.0; // pinned; decoding must be deterministic
    double top_p = 1.0;       // pinned
    int n_ctx = 1024;         // token budget (chars/3 proxy)
    int n_batch = 1024;       // max requests in flight
    double timeout_s = 30.0;
    int max_retries = 3;
    double backoff_base_s = 0.5; // delay is base * 2^attempt
    GrammarSpec grammar;
    MockWeights mock;
    std::string api_key; // FLOWPROMPT_API_KEY overrides when empty

    static BackendConfig mock_default();
    void validate() const;
};

enum class FailureKind { none, timeout, http_error, grammar_violation, budget_exceeded };

const char* to_string(FailureKind kind);

struct InferenceFailure {
    FailureKind kind = FailureKind::none;
    int http_status = 0;
    std::string detail;
};

struct InferenceOutcome {
    std::int64_t record_id = 0;
    std::optional<ModelVerdict> verdict;
    InferenceFailure failure;
    double latency_ms = 0.0; // 0 for the mock backend: no wire, no wait
    int attempts = 1;

    bool ok() const { return verdict.has_value(); }
};

struct BatchItem {
    std::int64_t record_id = 0;
    std::string prompt;
    FlagSet flags;
};

/// One prompt -> one outcome. The remote path POSTs
/// {model, prompt, temperature, top_p, grammar} to the completion endpoint
/// and reads the first choice's text; retryable failures (timeouts,
/// connection errors, 408/429/5xx) back off exponentially up to
/// max_retries. A completion that fails parse_verdict is a
/// grammar_violation and is not retried.
InferenceOutcome classify_flow(const BackendConfig& config, const std::string& prompt,
                               const FlagSet& flags, std::int64_t record_id = 0);

/// Outcomes in input order regardless of completion order; at most n_batch
/// requests outstanding; a failed item never aborts the batch.
std::vector<InferenceOutcome> classify_batch(const BackendConfig& config,
                                             const std::vector<BatchItem>& items);

} // namespace flowprompt
