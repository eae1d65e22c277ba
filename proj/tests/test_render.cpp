#include "flowprompt/render.hpp"

#include "flowprompt/errors.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <set>

using namespace flowprompt;

namespace {

FlowRecord sample_record() {
    FlowRecord rec;
    rec.id = 42;
    rec.proto = "tcp";
    rec.service = "http";
    rec.state = "FIN";
    rec.dur = 0.01;
    rec.spkts = 100;
    rec.dpkts = 100;
    rec.sbytes = 4000;
    rec.dbytes = 3000;
    rec.sttl = 64;
    rec.dttl = 64;
    rec.tcprtt = 0.0512;
    rec.synack = 0.02;
    rec.ackdat = 0.02;
    rec.ct_state_ttl = 1;
    rec.label = 0;
    return rec;
}

RarityTable empty_rarity() {
    RarityTable table;
    table.service_freq["http"] = 1.0;
    table.state_freq["FIN"] = 1.0;
    table.cutoff_freq = 0.0;
    return table;
}

} // namespace

TEST_CASE("render is deterministic and shaped as flags, categoricals, cues") {
    const FlowRecord rec = sample_record();
    const DerivedCues cues = compute_cues(rec);
    const FlagSet flags = compute_flags(cues, rec, FlagThresholds{}, empty_rarity());
    const RenderPolicy policy = RenderPolicy::defaults();

    const FlowText a = render_flow_text(rec, cues, flags, policy);
    const FlowText b = render_flow_text(rec, cues, flags, policy);
    CHECK(a.text == b.text);
    CHECK(a.record_id == 42);
    CHECK(a.char_count == a.text.size());
    CHECK(a.text.find('\n') == std::string::npos);
    CHECK(a.text.rfind("FLAGS:", 0) == 0);
    CHECK(a.text.find("proto=tcp service=http state=FIN") != std::string::npos);
    CHECK(a.text.find("FLAGS:") < a.text.find("proto="));
    CHECK(a.text.find("proto=") < a.text.find("dur="));
    CHECK(a.text.back() != ' ');
}

TEST_CASE("render rounds half-to-even per the decimals policy") {
    FlowRecord rec = sample_record();
    rec.spkts = 100;
    rec.dpkts = 100;
    rec.dur = 0.0099998; // pkt_rate = 200/0.0099998 = 20000.4xx -> 20000.4
    const DerivedCues cues = compute_cues(rec);
    CHECK(cues.pkt_rate == doctest::Approx(20000.4).epsilon(1e-4));

    DerivedCues exact = cues;
    exact.pkt_rate = 20000.04;
    const FlagSet flags{};
    const FlowText text = render_flow_text(rec, exact, flags, RenderPolicy::defaults());
    CHECK(text.text.find("pkt_rate=20000.0") != std::string::npos);
    CHECK(text.text.find("dur=0.010") != std::string::npos);
    CHECK(text.text.find("tcprtt=0.0512") != std::string::npos);
    CHECK(text.text.find("ct_state_ttl=1") != std::string::npos);
}

TEST_CASE("all-false flag set still renders six entries") {
    const FlowRecord rec = sample_record();
    const FlowText text =
        render_flow_text(rec, compute_cues(rec), FlagSet{}, RenderPolicy::defaults());
    size_t count = 0;
    size_t pos = 0;
    while ((pos = text.text.find("=false", pos)) != std::string::npos) {
        ++count;
        pos += 6;
    }
    CHECK(count == 6);
    for (const char* name : FlagSet::names())
        CHECK(text.text.find(std::string(name) + "=false") != std::string::npos);
}

TEST_CASE("render enforces the character budget") {
    const FlowRecord rec = sample_record();
    RenderPolicy policy = RenderPolicy::defaults();
    policy.max_chars = 40;
    try {
        render_flow_text(rec, compute_cues(rec), FlagSet{}, policy);
        FAIL("expected BudgetExceeded");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::BudgetExceeded);
    }
}

TEST_CASE("render rejects a cue missing its decimals entry") {
    RenderPolicy policy = RenderPolicy::defaults();
    policy.field_order.push_back("mystery");
    const FlowRecord rec = sample_record();
    CHECK_THROWS_AS(render_flow_text(rec, compute_cues(rec), FlagSet{}, policy), Error);
}

TEST_CASE("rendering is injective across differing records") {
    const FlagThresholds thresholds;
    const Dataset data = synth::make_dataset(120, 120, 31);
    const RarityTable rarity = fit_rarity_table(data.records, thresholds);
    FlowRenderer renderer{thresholds, rarity, RenderPolicy::defaults()};

    std::set<std::string> seen;
    size_t distinct_inputs = 0;
    for (const auto& rec : data.records) {
        seen.insert(renderer.render(rec).text);
        ++distinct_inputs;
    }
    // synthetic records differ in at least one rendered field pairwise
    CHECK(seen.size() == distinct_inputs);
}

TEST_CASE("token-length proxy fits the default context budget") {
    const RenderPolicy policy = RenderPolicy::defaults();
    CHECK(policy.max_chars / 3 < 1024);

    const Dataset data = synth::make_dataset(30, 30, 8);
    const RarityTable rarity = fit_rarity_table(data.records, FlagThresholds{});
    FlowRenderer renderer{FlagThresholds{}, rarity, policy};
    for (const auto& rec : data.records) {
        const FlowText text = renderer.render(rec);
        CHECK(text.char_count / 3 < 1024);
    }
}
