#include "flowprompt/prompt.hpp"

#include "flowprompt/errors.hpp"
#include "support/synth.hpp"

#include <doctest.h>

using namespace flowprompt;

namespace {

FlowText target_flow() {
    FlowText flow;
    flow.text = "FLAGS: asymmetry_high=false pkt_rate_high=false ttl_anomaly=false "
                "tcp_timer_anomaly=false rare_service_state=false short_burst=false "
                "proto=tcp service=http state=FIN dur=0.100";
    flow.record_id = 900;
    flow.char_count = flow.text.size();
    return flow;
}

FlowRenderer test_renderer(const Dataset& data) {
    FlowRenderer renderer;
    renderer.policy = RenderPolicy::defaults();
    renderer.rarity = fit_rarity_table(data.records, renderer.thresholds);
    return renderer;
}

size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

TEST_CASE("zero-shot prompt is role + flow + directive") {
    const PromptTemplate tmpl = PromptTemplate::defaults();
    const std::string prompt = build_prompt({PromptVariant::zero_shot, 1}, target_flow(), tmpl, {});
    CHECK(prompt.rfind(tmpl.role_preamble, 0) == 0);
    CHECK(prompt.find(target_flow().text) != std::string::npos);
    CHECK(prompt.find(tmpl.instruction_block) == std::string::npos);
    CHECK(prompt.find(tmpl.answer_directive) != std::string::npos);
    // directive last
    CHECK(prompt.rfind(tmpl.answer_directive) + tmpl.answer_directive.size() == prompt.size());
}

TEST_CASE("instruction prompt carries the instruction block verbatim") {
    const PromptTemplate tmpl = PromptTemplate::defaults();
    const std::string prompt = build_prompt({PromptVariant::instruction, 1}, target_flow(), tmpl, {});
    CHECK(prompt.find(tmpl.instruction_block) != std::string::npos);
    CHECK(prompt.find("### FLOW") != std::string::npos);
}

TEST_CASE("zero-shot with exemplars is an ExemplarMismatch") {
    const Dataset data = synth::make_dataset(5, 5, 1);
    const FlowRenderer renderer = test_renderer(data);
    const auto exemplars = select_exemplars(data.records, 1, 3, renderer);
    try {
        build_prompt({PromptVariant::zero_shot, 1}, target_flow(), PromptTemplate::defaults(),
                     exemplars);
        FAIL("expected ExemplarMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ExemplarMismatch);
    }
}

TEST_CASE("few-shot prompt embeds 2k balanced exemplar blocks before the target") {
    const Dataset data = synth::make_dataset(6, 6, 2);
    const FlowRenderer renderer = test_renderer(data);
    const PromptTemplate tmpl = PromptTemplate::defaults();

    const auto exemplars = select_exemplars(data.records, 1, 3, renderer);
    REQUIRE(exemplars.size() == 2);
    const std::string prompt = build_prompt({PromptVariant::few_shot, 1}, target_flow(), tmpl, exemplars);

    CHECK(count_occurrences(prompt, "### EXAMPLE") == 2);
    CHECK(count_occurrences(prompt, "### FLOW") == 1);
    CHECK(count_occurrences(prompt, target_flow().text) == 1);
    // target flow is last before the final answer directive
    CHECK(prompt.rfind("### FLOW") > prompt.rfind("### EXAMPLE"));
    CHECK(prompt.rfind(target_flow().text) > prompt.rfind("### EXAMPLE"));

    // mismatched count
    try {
        build_prompt({PromptVariant::few_shot, 2}, target_flow(), tmpl, exemplars);
        FAIL("expected ExemplarMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ExemplarMismatch);
    }
}

TEST_CASE("few-shot rejects unbalanced exemplar labels") {
    const Dataset data = synth::make_dataset(6, 6, 2);
    const FlowRenderer renderer = test_renderer(data);
    auto exemplars = select_exemplars(data.records, 1, 3, renderer);
    exemplars[0].label = exemplars[1].label;
    try {
        build_prompt({PromptVariant::few_shot, 1}, target_flow(), PromptTemplate::defaults(),
                     exemplars);
        FAIL("expected ExemplarMismatch");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ExemplarMismatch);
    }
}

TEST_CASE("select_exemplars is deterministic per seed and balanced") {
    const Dataset data = synth::make_dataset(20, 20, 4);
    const FlowRenderer renderer = test_renderer(data);

    const auto a = select_exemplars(data.records, 2, 9, renderer);
    const auto b = select_exemplars(data.records, 2, 9, renderer);
    REQUIRE(a.size() == 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].flow_text.record_id == b[i].flow_text.record_id);
        CHECK(a[i].verdict_json == b[i].verdict_json);
    }
    int attacks = 0;
    for (const auto& ex : a) attacks += ex.label;
    CHECK(attacks == 2);

    const auto c = select_exemplars(data.records, 2, 10, renderer);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].flow_text.record_id != c[i].flow_text.record_id) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("select_exemplars verdicts carry the designed confidences") {
    const Dataset data = synth::make_dataset(3, 3, 6);
    const FlowRenderer renderer = test_renderer(data);
    const auto exemplars = select_exemplars(data.records, 1, 1, renderer);
    for (const auto& ex : exemplars) {
        if (ex.label == 1)
            CHECK(ex.verdict_json == R"({"prediction":"attack","p_attack":0.9})");
        else
            CHECK(ex.verdict_json == R"({"prediction":"benign","p_attack":0.1})");
    }
}

TEST_CASE("select_exemplars with a minimal dev slice returns the only choice") {
    const Dataset data = synth::make_dataset(1, 1, 8);
    const FlowRenderer renderer = test_renderer(data);
    const auto exemplars = select_exemplars(data.records, 1, 999, renderer);
    REQUIRE(exemplars.size() == 2);
    CHECK(exemplars[0].label + exemplars[1].label == 1);
}

TEST_CASE("select_exemplars rejects an undersized class") {
    const Dataset data = synth::make_dataset(4, 1, 8);
    const FlowRenderer renderer = test_renderer(data);
    try {
        select_exemplars(data.records, 2, 1, renderer);
        FAIL("expected InsufficientClass");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::InsufficientClass);
    }
}

TEST_CASE("template round-trips through template.json") {
    const PromptTemplate tmpl = PromptTemplate::defaults();
    const auto path = std::filesystem::temp_directory_path() / "fp_template.json";
    tmpl.save(path);
    const PromptTemplate loaded = PromptTemplate::load(path);
    CHECK(loaded.role_preamble == tmpl.role_preamble);
    CHECK(loaded.instruction_block == tmpl.instruction_block);
    CHECK(loaded.answer_directive == tmpl.answer_directive);
    std::filesystem::remove(path);
}
