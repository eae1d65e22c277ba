#include "flowprompt/prompt.hpp"

#include "flowprompt/errors.hpp"
#include "flowprompt/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace flowprompt {

const char* to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::zero_shot: return "zero_shot";
        case PromptVariant::instruction: return "instruction";
        case PromptVariant::few_shot: return "few_shot";
    }
    return "zero_shot";
}

PromptVariant prompt_variant_from_string(const std::string& name) {
    if (name == "zero_shot") return PromptVariant::zero_shot;
    if (name == "instruction") return PromptVariant::instruction;
    if (name == "few_shot") return PromptVariant::few_shot;
    throw Error(ErrorCode::BadValue, "unknown prompt mode '" + name + "'");
}

PromptTemplate PromptTemplate::defaults() {
    PromptTemplate t;
    t.role_preamble =
        "You are a network security analyst reviewing summarized flow records from a "
        "perimeter sensor. Decide whether the flow below is an attack or benign traffic.";
    t.instruction_block =
        "Flag heuristics:\n"
        "- asymmetry_high: a strong imbalance between sent and received bytes or packets "
        "often indicates exfiltration or one-sided probing.\n"
        "- pkt_rate_high: a very high packet rate over the flow duration suggests scanning "
        "or flooding.\n"
        "- ttl_anomaly: TTL values outside the plausible range suggest spoofing or "
        "tunneling.\n"
        "- tcp_timer_anomaly: implausible handshake timers (tcprtt, synack, ackdat) suggest "
        "manipulated or broken handshakes.\n"
        "- rare_service_state: a rarely observed service or connection state is more likely "
        "to be malicious.\n"
        "- short_burst: many packets inside a very short duration is burst behavior typical "
        "of automated attacks.\n"
        "Weigh the flags together with the numeric cues; no single flag is proof on its own.";
    t.answer_directive =
        "Answer with exactly one JSON object of the form "
        "{\"prediction\":\"attack|benign\",\"p_attack\":0..1} and no other text.";
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + json_path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    PromptTemplate t;
    t.role_preamble = doc.at("role_preamble").get<std::string>();
    t.instruction_block = doc.at("instruction_block").get<std::string>();
    t.answer_directive = doc.at("answer_directive").get<std::string>();
    return t;
}

void PromptTemplate::save(const std::filesystem::path& json_path) const {
    nlohmann::ordered_json doc;
    doc["role_preamble"] = role_preamble;
    doc["instruction_block"] = instruction_block;
    doc["answer_directive"] = answer_directive;
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

std::string build_prompt(const PromptMode& mode, const FlowText& flow, const PromptTemplate& tmpl,
                         const std::vector<Exemplar>& exemplars) {
    if (mode.variant != PromptVariant::few_shot) {
        if (!exemplars.empty())
            throw Error(ErrorCode::ExemplarMismatch,
                        "exemplars supplied for a non-few-shot prompt");
    } else {
        if (mode.k_per_class < 1 || mode.k_per_class > 2)
            throw Error(ErrorCode::ExemplarMismatch, "k_per_class must be 1 or 2");
        const size_t expected = 2 * static_cast<size_t>(mode.k_per_class);
        if (exemplars.size() != expected)
            throw Error(ErrorCode::ExemplarMismatch,
                        "expected " + std::to_string(expected) + " exemplars, got " +
                            std::to_string(exemplars.size()));
        const auto attacks = static_cast<size_t>(
            std::count_if(exemplars.begin(), exemplars.end(), [](const Exemplar& e) { return e.label == 1; }));
        if (attacks * 2 != exemplars.size())
            throw Error(ErrorCode::ExemplarMismatch, "exemplar labels must be balanced");
    }

    std::string prompt = tmpl.role_preamble;
    prompt += "\n\n";
    if (mode.variant != PromptVariant::zero_shot) {
        prompt += tmpl.instruction_block;
        prompt += "\n\n";
    }
    if (mode.variant == PromptVariant::few_shot) {
        for (const auto& ex : exemplars) {
            prompt += "### EXAMPLE\n";
            prompt += ex.flow_text.text;
            prompt += "\n### ANSWER\n";
            prompt += ex.verdict_json;
            prompt += "\n\n";
        }
    }
    prompt += "### FLOW\n";
    prompt += flow.text;
    prompt += "\n### ANSWER\n";
    prompt += tmpl.answer_directive;
    return prompt;
}

std::vector<Exemplar> select_exemplars(const std::vector<FlowRecord>& dev, int k_per_class,
                                       std::uint64_t seed, const FlowRenderer& renderer) {
    if (k_per_class < 1)
        throw Error(ErrorCode::BadValue, "k_per_class must be >= 1");

    std::vector<const FlowRecord*> by_class[2];
    for (const auto& rec : dev) by_class[rec.label].push_back(&rec);
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < static_cast<size_t>(k_per_class))
            throw Error(ErrorCode::InsufficientClass,
                        "dev slice has " + std::to_string(by_class[c].size()) + " records of class " +
                            std::to_string(c) + ", need " + std::to_string(k_per_class));
    }

    // rank by mix64(seed, id) with id tiebreak, then interleave benign/attack
    std::vector<const FlowRecord*> picked[2];
    for (int c = 0; c < 2; ++c) {
        auto pool = by_class[c];
        std::sort(pool.begin(), pool.end(), [seed](const FlowRecord* a, const FlowRecord* b) {
            const auto ka = mix64(seed, static_cast<std::uint64_t>(a->id));
            const auto kb = mix64(seed, static_cast<std::uint64_t>(b->id));
            return ka != kb ? ka < kb : a->id < b->id;
        });
        picked[c].assign(pool.begin(), pool.begin() + k_per_class);
    }

    std::vector<Exemplar> exemplars;
    exemplars.reserve(2 * static_cast<size_t>(k_per_class));
    for (int i = 0; i < k_per_class; ++i) {
        for (int c = 0; c < 2; ++c) {
            const FlowRecord& rec = *picked[c][static_cast<size_t>(i)];
            Exemplar ex;
            ex.flow_text = renderer.render(rec);
            ex.label = rec.label;
            ex.verdict_json = to_canonical_json(
                make_verdict(rec.label == 1 ? Prediction::attack : Prediction::benign,
                             rec.label == 1 ? 0.9 : 0.1));
            exemplars.push_back(std::move(ex));
        }
    }
    return exemplars;
}

} // namespace flowprompt
