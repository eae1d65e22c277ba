#pragma once

#include <vector>

namespace flowprompt {

/// Published results carried as fixed reference constants for the report
/// view. These runs need the full dataset, external learners or specific
/// served model weights; they are never recomputed here. Missing cells are
/// "-".
struct ReferenceRow {
    const char* name;
    const char* type;
    const char* accuracy;
    const char* precision_pos;
    const char* recall_pos;
    const char* f1_pos;
    const char* macro_f1;
};

const std::vector<ReferenceRow>& tabular_reference_rows();
const std::vector<ReferenceRow>& llm_reference_rows();

} // namespace flowprompt
