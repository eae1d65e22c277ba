#include "flowprompt/render.hpp"

#include "flowprompt/errors.hpp"
#include "flowprompt/rounding.hpp"

namespace flowprompt {

RenderPolicy RenderPolicy::defaults() {
    RenderPolicy p;
    p.field_order = {"dur",    "pkt_rate", "byte_ratio", "pkt_ratio",   "ttl_ratio",
                     "tcprtt", "synack",   "ackdat",     "ct_state_ttl"};
    p.decimals = {
        {"dur", 3},    {"pkt_rate", 1}, {"byte_ratio", 2}, {"pkt_ratio", 2},   {"ttl_ratio", 2},
        {"tcprtt", 4}, {"synack", 4},   {"ackdat", 4},     {"ct_state_ttl", 0},
    };
    return p;
}

namespace {

double cue_value(const std::string& name, const DerivedCues& cues) {
    if (name == "dur") return cues.dur;
    if (name == "pkt_rate") return cues.pkt_rate;
    if (name == "byte_ratio") return cues.byte_ratio;
    if (name == "pkt_ratio") return cues.pkt_ratio;
    if (name == "ttl_ratio") return cues.ttl_ratio;
    if (name == "tcprtt") return cues.tcprtt;
    if (name == "synack") return cues.synack;
    if (name == "ackdat") return cues.ackdat;
    if (name == "ct_state_ttl") return static_cast<double>(cues.ct_state_ttl);
    throw Error(ErrorCode::BadValue, "unknown cue '" + name + "' in render policy");
}

} // namespace

FlowText render_flow_text(const FlowRecord& record, const DerivedCues& cues, const FlagSet& flags,
                          const RenderPolicy& policy) {
    std::string text = policy.flag_prefix_format;
    for (size_t i = 0; i < FlagSet::kCount; ++i) {
        text += ' ';
        text += FlagSet::names()[i];
        text += flags.get(i) ? "=true" : "=false";
    }
    text += " proto=" + record.proto;
    text += " service=" + record.service;
    text += " state=" + record.state;
    for (const auto& name : policy.field_order) {
        auto it = policy.decimals.find(name);
        if (it == policy.decimals.end())
            throw Error(ErrorCode::BadValue, "cue '" + name + "' has no decimals entry");
        text += ' ';
        text += name;
        text += '=';
        text += format_fixed(cue_value(name, cues), it->second);
    }
    if (text.size() > policy.max_chars)
        throw Error(ErrorCode::BudgetExceeded,
                    "rendered flow text is " + std::to_string(text.size()) + " chars, budget " +
                        std::to_string(policy.max_chars));
    FlowText out;
    out.record_id = record.id;
    out.char_count = text.size();
    out.text = std::move(text);
    return out;
}

FlagSet FlowRenderer::flags_for(const FlowRecord& record) const {
    return compute_flags(compute_cues(record), record, thresholds, rarity);
}

FlowText FlowRenderer::render(const FlowRecord& record) const {
    const DerivedCues cues = compute_cues(record);
    return render_flow_text(record, cues, compute_flags(cues, record, thresholds, rarity), policy);
}

} // namespace flowprompt
