#include "flowprompt/reference.hpp"

namespace flowprompt {

const std::vector<ReferenceRow>& tabular_reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        {"Logistic Regression (CV)", "Linear ML", "0.7755", "-", "-", "-", "0.4102"},
        {"Logistic Regression (Test)", "Linear ML", "0.6983", "-", "-", "-", "0.3352"},
        {"Random Forest (CV)", "Tree Ensemble", "0.7545", "-", "-", "-", "0.4657"},
        {"Random Forest (Final Test)", "Tree Ensemble", "0.8711", "0.8178", "0.9854", "0.8938", "-"},
        {"XGBoost (Balanced, Light)", "Boosted Trees", "0.9528", "0.9407", "0.9530", "0.9465", "-"},
        {"Linear SVM (Balanced)", "Linear ML", "0.9327", "0.9248", "0.9196", "0.9221", "-"},
        {"XGBoost (Binary, Other Run)", "Boosted Trees", "0.9528", "-", "-", "-", "-"},
        {"MLP / ANN (Tabular DL)", "Neural Net", "-", "-", "-", "-", "-"},
    };
    return rows;
}

const std::vector<ReferenceRow>& llm_reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        {"Mistral-7B-Instruct", "LLM (Zero-shot)", "0.0900", "-", "-", "-", "0.0826"},
        {"Qwen 2.5-3B (Zero-shot)", "LLM (Zero-shot)", "0.4550", "-", "-", "-", "0.3127"},
        {"TinyLlama-1.1B (Guided)", "LLM (Instruction-guided)", "0.4550", "-", "-", "-", "0.3127"},
        {"Qwen 2.5-7B-Instruct + Flags", "LLM (Guided + Flags)", "0.7850", "0.7565", "0.8529",
         "0.8018", "0.7834"},
        {"Qwen 3B Calibrated", "LLM (Few-shot + Flags)", "0.6963", "0.7073", "0.6591", "0.6824", "-"},
        {"Qwen 2.5-7B (Engineered Flags)", "LLM", "0.5040", "0.5858", "0.3436", "0.4331", "0.4961"},
        {"Qwen Calibrated (Recall-heavy)", "LLM (Recall-optimized)", "0.5588", "0.5310", "1.0000",
         "0.6936", "-"},
        {"Qwen (Fast 1k Run)", "LLM (Fast Inferencing)", "0.5000", "0.5000", "1.0000", "0.6667", "-"},
    };
    return rows;
}

} // namespace flowprompt
