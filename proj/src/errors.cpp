#include "flowprompt/errors.hpp"

namespace flowprompt {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::BadValue: return "BadValue";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::InsufficientClass: return "InsufficientClass";
        case ErrorCode::OddN: return "OddN";
        case ErrorCode::DevTooLarge: return "DevTooLarge";
        case ErrorCode::EmptyTrain: return "EmptyTrain";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::ExemplarMismatch: return "ExemplarMismatch";
        case ErrorCode::ExtraTokens: return "ExtraTokens";
        case ErrorCode::Malformed: return "Malformed";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::MissingKey: return "MissingKey";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::BadCounts: return "BadCounts";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::IncompleteBundle: return "IncompleteBundle";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace flowprompt
