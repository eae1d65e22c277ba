#pragma once

#include "flowprompt/dataset.hpp"
#include "flowprompt/flags.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace flowprompt {

/// How a flow is serialized: which cues, in what order, at what precision
/// (half-to-even), under what character budget.
struct RenderPolicy {
    std::vector<std::string> field_order;
    std::map<std::string, int> decimals;
    std::string flag_prefix_format = "FLAGS:";
    size_t max_chars = 900;

    static RenderPolicy defaults();
};

struct FlowText {
    std::string text;
    std::int64_t record_id = 0;
    size_t char_count = 0;
};

/// Single-line key=value serialization: flags first (fixed order), then
/// proto/service/state, then the cues from field_order. Deterministic;
/// throws BudgetExceeded past policy.max_chars.
FlowText render_flow_text(const FlowRecord& record, const DerivedCues& cues, const FlagSet& flags,
                          const RenderPolicy& policy);

/// Bundles thresholds + rarity + policy so callers can go straight from a
/// record to its flow text (and flags) without re-plumbing the parts.
struct FlowRenderer {
    FlagThresholds thresholds;
    RarityTable rarity;
    RenderPolicy policy;

    FlagSet flags_for(const FlowRecord& record) const;
    FlowText render(const FlowRecord& record) const;
};

} // namespace flowprompt
