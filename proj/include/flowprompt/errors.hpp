#pragma once

#include <stdexcept>
#include <string>

namespace flowprompt {

enum class ErrorCode {
    // dataset
    MissingColumn,
    BadValue,
    EmptyFile,
    InsufficientClass,
    OddN,
    DevTooLarge,
    // flags / baseline fitting
    EmptyTrain,
    // render / inference budgets
    BudgetExceeded,
    // prompt
    ExemplarMismatch,
    // grammar
    ExtraTokens,
    Malformed,
    OutOfRange,
    MissingKey,
    // calibration / metrics
    NoPositives,
    LengthMismatch,
    Empty,
    BadCounts,
    SingleClass,
    // baseline
    DimensionMismatch,
    NonFiniteLoss,
    // bundle
    IncompleteBundle,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Exception type carrying a machine-checkable code plus, when raised inside
/// the pipeline, the name of the failing stage.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }
    const std::string& stage() const { return stage_; }
    void set_stage(std::string stage) { stage_ = std::move(stage); }

private:
    ErrorCode code_;
    std::string stage_;
};

} // namespace flowprompt
