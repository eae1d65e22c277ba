#pragma once

#include "flowprompt/dataset.hpp"
#include "flowprompt/grammar.hpp"
#include "flowprompt/render.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flowprompt {

enum class PromptVariant { zero_shot, instruction, few_shot };

const char* to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(const std::string& name);

struct PromptMode {
    PromptVariant variant = PromptVariant::zero_shot;
    int k_per_class = 1; // few_shot only; must be 1 or 2
};

/// A labeled demonstration drawn from the dev slice: the rendered flow
/// text plus the grammar-valid answer it teaches.
struct Exemplar {
    FlowText flow_text;
    int label = 0;
    std::string verdict_json;
};

struct PromptTemplate {
    std::string role_preamble;
    std::string instruction_block;
    std::string answer_directive;

    static PromptTemplate defaults();
    static PromptTemplate load(const std::filesystem::path& json_path);
    void save(const std::filesystem::path& json_path) const;
};

/// Assemble the full prompt for one flow. Modes are cumulative:
/// instruction adds the heuristics block to zero-shot, few-shot adds
/// labeled exemplars on top of that. The target flow always appears
/// exactly once, last before the answer directive.
std::string build_prompt(const PromptMode& mode, const FlowText& flow, const PromptTemplate& tmpl,
                         const std::vector<Exemplar>& exemplars);

/// Deterministic exemplar selection from the dev slice: k per class ranked
/// by mix64(seed, id), interleaved benign/attack. Exemplar answers carry
/// p_attack 0.9 (attack) / 0.1 (benign).
std::vector<Exemplar> select_exemplars(const std::vector<FlowRecord>& dev, int k_per_class,
                                       std::uint64_t seed, const FlowRenderer& renderer);

} // namespace flowprompt
