#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/llm/backend.hpp"
#include "synthelite/llm/http_backends.hpp"
#include "synthelite/llm/prompt.hpp"
#include "synthelite/llm/protocol.hpp"
#include "synthelite/llm/scripted.hpp"
#include "synthelite/util/io.hpp"

using namespace synthelite;
using namespace synthelite::llm;

TEST(Prompt, RendersPlaceholders) {
    PromptTemplate t("t", "target: {{TARGET_MOLECULE}}");
    EXPECT_EQ(t.render({{"TARGET_MOLECULE", "CCO"}}), "target: CCO");
    EXPECT_EQ(t.required_vars(), std::set<std::string>{"TARGET_MOLECULE"});
}

TEST(Prompt, MissingVarNamesPlaceholder) {
    PromptTemplate t("t", "target: {{TARGET_MOLECULE}}");
    try {
        t.render({});
        FAIL();
    } catch (const MissingVarError& e) {
        EXPECT_EQ(e.var(), "TARGET_MOLECULE");
    }
}

TEST(Prompt, ValuesAreNotReexpanded) {
    PromptTemplate t("t", "{{A}} and {{B}}");
    EXPECT_EQ(t.render({{"A", "{{B}}"}, {"B", "x"}}), "{{B}} and x");
}

TEST(Prompt, ShippedAssetsDeclareTheirVariables) {
    for (const auto& entry : std::filesystem::directory_iterator(util::asset_dir() / "prompts")) {
        const auto t = load_prompt(entry.path().stem().string());
        std::map<std::string, std::string> vars;
        for (const auto& v : t.required_vars()) vars[v] = "value";
        EXPECT_EQ(t.render(vars).find("{{"), std::string::npos) << t.name();
    }
    EXPECT_EQ(load_prompt("plan_state").required_vars(),
              (std::set<std::string>{"PREVIOUS_REACTIONS", "CURRENT_MOLECULE_SMILES", "CURRENT_MOLECULE_SMILES_MAPPED"}));
}

TEST(Protocol, ExtractTag) {
    EXPECT_EQ(extract_tag("<stop_signal>TRUE</stop_signal>", "stop_signal"), "TRUE");
    EXPECT_EQ(extract_tag("<a> one </a> <a>two</a>", "a"), "one");
    EXPECT_THROW(extract_tag("nothing", "a"), TagMissingError);
    EXPECT_THROW(extract_tag("<a>open", "a"), TagMissingError);
}

TEST(Protocol, StopSignal) {
    EXPECT_TRUE(parse_stop("<stop_signal>TRUE</stop_signal>"));
    EXPECT_TRUE(parse_stop("<stop_signal>\ntrue\n</stop_signal>"));
    EXPECT_FALSE(parse_stop("continue please"));
    EXPECT_FALSE(parse_stop("<stop_signal>FALSE</stop_signal>"));
}

TEST(Protocol, IntLists) {
    EXPECT_EQ(parse_int_list("<reaction_atom_indices>[3, 7]</reaction_atom_indices>", "reaction_atom_indices"),
              (std::vector<int>{3, 7}));
    EXPECT_EQ(parse_int_list("<selected_reaction_indices>[0, 2, 3]</selected_reaction_indices>",
                             "selected_reaction_indices"),
              (std::vector<int>{0, 2, 3}));
    EXPECT_EQ(parse_int_list("<expandable_molecule_index>0</expandable_molecule_index>", "expandable_molecule_index"),
              (std::vector<int>{0}));
    EXPECT_EQ(parse_int_list("<x>[]</x>", "x"), std::vector<int>{});
    EXPECT_THROW(parse_int_list("<x>[1, two]</x>", "x"), FormatError);
    EXPECT_THROW(parse_int_list("<x>zero</x>", "x"), FormatError);
    EXPECT_THROW(parse_int_list("<y>1</y>", "x"), TagMissingError);
}

TEST(Protocol, PlanMinimal) {
    const auto plan = parse_plan(R"(<synthesis_plan>{"next_steps": [{"step_number": 1, "step_description": "amide"}]}</synthesis_plan>)");
    ASSERT_EQ(plan.next_steps.size(), 1u);
    EXPECT_EQ(plan.next_steps[0].step_description, "amide");
}

TEST(Protocol, PlanToleratesCommentsAndTrailingCommas) {
    const std::string text = R"(Here is the plan.
<synthesis_plan>
{
  "target_smiles": "C#N",
  "expandable_molecules": ["C#N"],
  "previous_steps": [
    {"step_number": 1, "step_reaction": "a>>b", "step_description": "x"},
    // ... more steps
    ...
  ],
  "next_steps": [
    {
      "step_number": 2, # continuing
      "step_description": "cut the // bond",
    },
  ],
}
</synthesis_plan>)";
    const auto plan = parse_plan(text);
    EXPECT_EQ(plan.target_smiles, "C#N");
    ASSERT_EQ(plan.previous_steps.size(), 1u);
    ASSERT_EQ(plan.next_steps.size(), 1u);
    EXPECT_EQ(plan.next_steps[0].step_description, "cut the // bond");
}

TEST(Protocol, PlanErrors) {
    EXPECT_THROW(parse_plan("<synthesis_plan>{not json</synthesis_plan>"), PlanParseError);
    EXPECT_THROW(parse_plan("no plan here"), TagMissingError);
    EXPECT_THROW(parse_plan(R"(<synthesis_plan>{"next_steps": [{"step_number": 2}, {"step_number": 2}]}</synthesis_plan>)"),
                 PlanParseError);
}

TEST(Protocol, Feedback) {
    const auto fb = parse_feedback(R"(<feedback>
{
    "overall_feedback": "ok",
    "problematic_steps": [
        {"step_id": 1, "feedback": "a"},
        {"step_id": 2, "feedback": "b"}
        // ... more problematic steps if needed
    ]
}
</feedback>)");
    EXPECT_EQ(fb.problematic_steps.size(), 2u);
    EXPECT_EQ(fb.problematic_steps[1].step_id, 2);
    EXPECT_TRUE(parse_feedback(R"(<feedback>{"overall_feedback": "good", "problematic_steps": []}</feedback>)")
                    .problematic_steps.empty());
    EXPECT_THROW(parse_feedback(R"(<feedback>{"problematic_steps": []}</feedback>)"), PlanParseError);
}

TEST(Protocol, DescriptionStripsQuotes) {
    EXPECT_EQ(parse_description("<description>\n\"This reaction involves x.\"\n</description>"),
              "This reaction involves x.");
}

namespace {

std::string random_text(std::mt19937_64& rng) {
    static const std::string alphabet = "abcXYZ019 ,.;:()[]{}#/\\\"'=+-@<>\n\t";
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s += alphabet[pick(rng)];
    // tag bodies are compared after trimming, and may not contain the closing tag
    s = util::trim(s);
    if (s.empty()) s = "x";
    for (std::size_t p; (p = s.find('<')) != std::string::npos;) s[p] = '(';
    return s;
}

std::vector<int> random_ints(std::mt19937_64& rng, int min_len) {
    std::uniform_int_distribution<int> len(min_len, 6), val(-5, 500);
    std::vector<int> v(len(rng));
    for (auto& x : v) x = val(rng);
    return v;
}

} // namespace

TEST(Protocol, RoundTripsWithNoise) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto prefix = random_text(rng) + "\n", suffix = "\n" + random_text(rng);

        NextStep step{random_text(rng), random_text(rng), static_cast<int>(rng() % 20), random_ints(rng, 0)};
        EXPECT_EQ(parse_next_step(prefix + format_next_step(step) + suffix), step);

        const auto ranks = random_ints(rng, 0);
        EXPECT_EQ(parse_int_list(prefix + format_tag("selected_reaction_indices", format_int_list(ranks)) + suffix,
                                 "selected_reaction_indices"),
                  ranks);

        SynthesisPlan plan;
        plan.target_smiles = random_text(rng);
        plan.expandable_molecules = {random_text(rng), random_text(rng)};
        plan.user_constraint = random_text(rng);
        plan.previous_steps = {{1, random_text(rng), random_text(rng)}};
        plan.strategy_overview = random_text(rng);
        plan.step_estimate = random_text(rng);
        plan.next_steps = {{2, "", random_text(rng)}, {3, "", random_text(rng)}};
        plan.additional_notes = random_text(rng);
        EXPECT_EQ(parse_plan(prefix + format_tag("synthesis_plan", to_json(plan).dump(2)) + suffix), plan);

        Feedback fb{random_text(rng), {{1, random_text(rng)}, {4, random_text(rng)}}};
        EXPECT_EQ(parse_feedback(prefix + format_tag("feedback", to_json(fb).dump(4)) + suffix), fb);

        const bool stop = rng() % 2;
        EXPECT_EQ(parse_stop(prefix + (stop ? format_tag("stop_signal", "TRUE") : "") + suffix), stop);
    }
}

namespace {

ScriptRule rule(std::vector<std::string> match, std::string response, int fail = 0) {
    ScriptRule r;
    r.match = std::move(match);
    r.response = std::move(response);
    r.fail = fail;
    return r;
}

RetryPolicy fast(int budget) { return {budget, std::chrono::milliseconds(1)}; }

} // namespace

TEST(Backend, ScriptedFirstMatch) {
    ScriptedBackend b({rule({"alpha"}, "A"), rule({"a"}, "generic")});
    EXPECT_EQ(complete(b, {{{"user", "alpha"}}}, fast(0)), "A");
    EXPECT_EQ(complete(b, {{{"user", "beta"}}}, fast(0)), "generic");
    EXPECT_THROW(complete(b, {{{"user", "zzz"}}}, fast(0)), BackendError);
}

TEST(Backend, ScriptedMatchesHash) {
    LlmRequest req{{{"system", "s"}, {"user", "u"}}};
    ScriptedBackend b({rule({"sha256:" + prompt_hash(req)}, "hashed")});
    EXPECT_EQ(complete(b, req, fast(0)), "hashed");
}

TEST(Backend, RetriesTransportFailures) {
    CallLedger ledger;
    ScriptedBackend b({rule({"x"}, "ok", 2)});
    EXPECT_EQ(complete(b, {{{"user", "x"}}}, fast(2), &ledger), "ok");
    EXPECT_EQ(b.calls(), 3u);
    ASSERT_EQ(ledger.size(), 1u);
    EXPECT_EQ(ledger.entries()[0].response_sha256, util::sha256_hex("ok"));

    ScriptedBackend once({rule({"x"}, "ok", 1)});
    EXPECT_THROW(complete(once, {{{"user", "x"}}}, fast(0)), BackendError);
}

TEST(Backend, LoadsLedgerFileAndWritesRunRecord) {
    const auto dir = std::filesystem::temp_directory_path() / "synthelite_llm_test";
    std::filesystem::create_directories(dir);
    util::atomic_write(dir / "script.jsonl", "# comment\n{\"match\": [\"a\", \"b\"], \"response\": \"both\"}\n"
                                             "{\"match\": \"a\", \"response\": \"one\"}\n");
    std::filesystem::remove(dir / "run.jsonl");
    LlmClient client(make_backend("scripted:" + (dir / "script.jsonl").string()), fast(0),
                     std::make_shared<CallLedger>(dir / "run.jsonl"));
    EXPECT_EQ(client.complete(std::vector<Message>{{"user", "a b"}}), "both");
    EXPECT_EQ(client.complete(std::vector<Message>{{"user", "a"}}), "one");
    const auto lines = util::read_lines(dir / "run.jsonl");
    ASSERT_EQ(lines.size(), 2u);
    const auto j = nlohmann::json::parse(lines[0]);
    for (const char* key : {"ts", "backend", "prompt_sha256", "response_sha256", "latency_ms"}) EXPECT_TRUE(j.contains(key));
    EXPECT_THROW(make_backend("openai"), Error);
    EXPECT_THROW(make_backend("nope:x"), Error);
}

TEST(Backend, HttpAdaptersSpeakProviderFormats) {
    httplib::Server server;
    nlohmann::json seen_openai, seen_anthropic;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_openai = nlohmann::json::parse(req.body);
        seen_openai["auth"] = req.get_header_value("Authorization");
        res.set_content(R"({"choices":[{"message":{"content":"hi"}}],"usage":{"total_tokens":12}})", "application/json");
    });
    server.Post("/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
        seen_anthropic = nlohmann::json::parse(req.body);
        seen_anthropic["key"] = req.get_header_value("x-api-key");
        res.set_content(R"({"content":[{"type":"text","text":"yo"}],"usage":{"input_tokens":3,"output_tokens":4}})",
                        "application/json");
    });
    server.Post("/fail/v1/messages", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    setenv("OPENAI_API_KEY", "k1", 1);
    setenv("OPENAI_BASE_URL", base.c_str(), 1);
    setenv("ANTHROPIC_API_KEY", "k2", 1);
    setenv("ANTHROPIC_BASE_URL", base.c_str(), 1);
    LlmRequest req{{{"system", "sys"}, {"user", "u"}}};
    const auto a = OpenAiBackend("m1").complete(req);
    EXPECT_EQ(a.text, "hi");
    EXPECT_EQ(a.tokens, 12);
    EXPECT_EQ(seen_openai["model"], "m1");
    EXPECT_EQ(seen_openai["messages"].size(), 2u);
    EXPECT_EQ(seen_openai["auth"], "Bearer k1");
    const auto b = AnthropicBackend("m2").complete(req);
    EXPECT_EQ(b.text, "yo");
    EXPECT_EQ(b.tokens, 7);
    EXPECT_EQ(seen_anthropic["system"], "sys");
    EXPECT_EQ(seen_anthropic["messages"].size(), 1u);
    EXPECT_EQ(seen_anthropic["key"], "k2");

    setenv("ANTHROPIC_BASE_URL", (base + "/fail").c_str(), 1);
    EXPECT_THROW(AnthropicBackend("m2").complete(req), BackendError);
    server.stop();
    t.join();
    unsetenv("OPENAI_BASE_URL");
    unsetenv("ANTHROPIC_BASE_URL");
}
