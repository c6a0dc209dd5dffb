#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "nashcot/templates.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nashcot;

namespace {

Question coin_question() {
    Question q;
    q.id = "coin1";
    q.text = "A coin is heads up. It is flipped twice. Is it still heads up?";
    q.kind = TaskKind::Binary;
    q.gold = *canonicalize(TaskKind::Binary, "yes");
    return q;
}

}  // namespace

TEST_CASE("render_cot two-stage contract") {
    Question q = test_util::numeric_question();
    CotTemplate cot;

    RenderedPrompt reasoning = render_cot(q, cot, PromptStage::Reasoning);
    REQUIRE(reasoning.messages.size() == 1);
    CHECK(reasoning.messages[0].role == Role::User);
    const std::string& text = reasoning.messages[0].text;
    CHECK(text.find(q.text) != std::string::npos);
    CHECK(text.ends_with("Let's think step by step."));

    RenderedPrompt extraction =
        render_cot(q, cot, PromptStage::AnswerExtraction, "Half of 14 is 7, so 7 hens.");
    const std::string& full = extraction.messages[0].text;
    CHECK(full.find("Half of 14 is 7, so 7 hens.") != std::string::npos);
    CHECK(full.find(q.text) != std::string::npos);
    CHECK(full.ends_with("Therefore, the answer (arabic numerals) is"));

    CHECK_THROWS_AS(render_cot(q, cot, PromptStage::AnswerExtraction), MissingRationale);
}

TEST_CASE("render_guided prepends the persona as system text") {
    Question q = test_util::numeric_question();
    CotTemplate cot;
    const PlayerRegistry& registry = builtin_registry();

    RenderedPrompt guided = render_guided(q, registry.by_id(1), cot, PromptStage::Reasoning);
    REQUIRE(guided.messages.size() == 2);
    CHECK(guided.messages[0].role == Role::System);
    CHECK(guided.messages[0].text.starts_with("You are a mathematician"));
    CHECK(guided.messages[1].text == render_cot(q, cot, PromptStage::Reasoning).messages[0].text);

    RenderedPrompt geo = render_guided(q, registry.by_id(4), cot, PromptStage::Reasoning);
    CHECK(geo.messages[0].text.starts_with("You are a geographer with"));

    // empty persona reduces to plain CoT rendering
    PlayerTemplate empty{9, "Nobody", ""};
    RenderedPrompt plain = render_guided(q, empty, cot, PromptStage::Reasoning);
    RenderedPrompt cot_only = render_cot(q, cot, PromptStage::Reasoning);
    REQUIRE(plain.messages.size() == cot_only.messages.size());
    CHECK(plain.messages[0].text == cot_only.messages[0].text);
}

TEST_CASE("render_preference substitutes every placeholder") {
    const PlayerRegistry& registry = builtin_registry();
    Question q = coin_question();

    RenderedPrompt reasoning = render_preference(q, registry, PromptStage::Reasoning);
    REQUIRE(reasoning.messages.size() == 1);
    const std::string& text = reasoning.messages[0].text;
    CHECK(text.find("There are total 4 players") != std::string::npos);
    CHECK(text.find("1. Mathematician:") != std::string::npos);
    CHECK(text.find("4. Geographer:") != std::string::npos);
    CHECK(text.find(q.text) != std::string::npos);
    CHECK(text.ends_with("Let us think step by step."));
    CHECK(text.find('{') == std::string::npos);

    RenderedPrompt extraction =
        render_preference(q, registry, PromptStage::AnswerExtraction, "This is about logic.");
    CHECK(extraction.messages[0].text.ends_with(
        "Therefore, the most appropriate player in this game is who? (please direct give us the "
        "number)"));
    CHECK(extraction.messages[0].text.find("This is about logic.") != std::string::npos);

    PlayerRegistry single;
    single.players = {{1, "Mathematician", "You are a mathematician."}};
    RenderedPrompt one = render_preference(coin_question(), single, PromptStage::Reasoning);
    CHECK(one.messages[0].text.find("There are total 1 players") != std::string::npos);

    PlayerRegistry empty;
    CHECK_THROWS_AS(render_preference(coin_question(), empty, PromptStage::Reasoning),
                    RegistryError);
}

TEST_CASE("rendering is deterministic and injective in the question text") {
    CotTemplate cot;
    oracle::TestRng rng(5150);
    for (int i = 0; i < 200; ++i) {
        Question a = test_util::numeric_question("qa");
        Question b = test_util::numeric_question("qb");
        a.text = "Problem " + std::to_string(rng.next());
        b.text = "Problem " + std::to_string(rng.next());
        auto ra = render_cot(a, cot, PromptStage::Reasoning);
        auto rb = render_cot(b, cot, PromptStage::Reasoning);
        auto ra2 = render_cot(a, cot, PromptStage::Reasoning);
        CHECK(ra.messages[0].text == ra2.messages[0].text);
        if (a.text != b.text) CHECK(ra.messages[0].text != rb.messages[0].text);
    }
}

TEST_CASE("multiple choice questions render their options") {
    Question q;
    q.id = "mc1";
    q.text = "Which is a mammal?";
    q.kind = TaskKind::MultipleChoice;
    q.options = {"trout", "whale", "gecko"};
    q.gold = *canonicalize(TaskKind::MultipleChoice, "B");
    std::string block = question_block(q);
    CHECK(block.find("(A) trout") != std::string::npos);
    CHECK(block.find("(B) whale") != std::string::npos);
    CHECK(block.find("(C) gecko") != std::string::npos);
}

TEST_CASE("builtin registry ships the four personas") {
    const PlayerRegistry& registry = builtin_registry();
    REQUIRE(registry.size() == 4);
    CHECK(registry.by_id(1).name == "Mathematician");
    CHECK(registry.by_id(2).name == "Literary scholar");
    CHECK(registry.by_id(3).name == "Philosophical");
    CHECK(registry.by_id(4).name == "Geographer");
    CHECK_NOTHROW(registry.validate());
}

TEST_CASE("registry file round-trips losslessly and matches the golden file") {
    const std::string tmp = "registry_roundtrip_tmp.jsonl";
    save_registry(builtin_registry(), tmp);
    PlayerRegistry loaded = load_registry(tmp);
    REQUIRE(loaded.size() == 4);
    for (int id = 1; id <= 4; ++id) {
        CHECK(loaded.by_id(id).name == builtin_registry().by_id(id).name);
        CHECK(loaded.by_id(id).description == builtin_registry().by_id(id).description);
    }

    // golden file: byte-for-byte the serialization of the built-ins
    std::ifstream golden(test_util::data_path("players.jsonl"), std::ios::binary);
    std::ifstream written(tmp, std::ios::binary);
    REQUIRE(golden.good());
    std::string golden_bytes((std::istreambuf_iterator<char>(golden)),
                             std::istreambuf_iterator<char>());
    std::string written_bytes((std::istreambuf_iterator<char>(written)),
                              std::istreambuf_iterator<char>());
    CHECK(golden_bytes == written_bytes);
    std::remove(tmp.c_str());
}

TEST_CASE("registry validation failures") {
    PlayerRegistry duplicate;
    duplicate.players = {{1, "A", "desc"}, {1, "B", "desc"}};
    CHECK_THROWS_AS(duplicate.validate(), RegistryError);

    PlayerRegistry gap;
    gap.players = {{1, "A", "desc"}, {3, "B", "desc"}};
    CHECK_THROWS_AS(gap.validate(), RegistryError);

    PlayerRegistry empty;
    CHECK_THROWS_AS(empty.validate(), RegistryError);

    const std::string tmp = "registry_duplicate_tmp.jsonl";
    {
        std::ofstream out(tmp);
        out << R"({"id": 1, "name": "A", "description": "x"})" << "\n";
        out << R"({"id": 1, "name": "B", "description": "y"})" << "\n";
    }
    CHECK_THROWS_AS(load_registry(tmp), RegistryError);
    std::remove(tmp.c_str());
}

TEST_CASE("registry exclusion renumbers for ablations") {
    PlayerRegistry derived = builtin_registry().without("Mathematician");
    REQUIRE(derived.size() == 3);
    CHECK(derived.by_id(1).name == "Literary scholar");
    CHECK(derived.by_id(3).name == "Geographer");
    CHECK_NOTHROW(derived.validate());
    CHECK_THROWS_AS(builtin_registry().without("Chemist"), RegistryError);
}
