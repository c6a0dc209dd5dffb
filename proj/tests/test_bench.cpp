#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "nashcot/bench.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nashcot;

namespace {

std::vector<Question> synthetic_dataset(int count) {
    std::vector<Question> questions;
    for (int i = 0; i < count; ++i) {
        questions.push_back(
            test_util::numeric_question("q" + std::to_string(1000 + i), std::to_string(i % 10)));
    }
    return questions;
}

}  // namespace

TEST_CASE("smoke datasets load and round-trip") {
    for (const char* name :
         {"smoke_numeric.jsonl", "smoke_choice.jsonl", "smoke_binary.jsonl",
          "smoke_freeform.jsonl"}) {
        CAPTURE(name);
        std::vector<Question> questions = load_dataset(test_util::data_path(name));
        CHECK(questions.size() == 10);
        for (const auto& q : questions) {
            CHECK_NOTHROW(q.validate());
            // gold reparses to itself under the question's own kind
            auto again = canonicalize(q.kind, q.gold.value);
            REQUIRE(again.has_value());
            CHECK(canonical_equal(*again, q.gold));
        }
    }
}

TEST_CASE("dataset schema violations carry line numbers") {
    const std::string tmp = "bad_dataset_tmp.jsonl";
    {
        std::ofstream out(tmp);
        out << R"({"id": "a", "question": "How many?", "kind": "numeric", "gold": "3"})" << "\n";
        out << R"({"id": "b", "question": "Pick one", "kind": "numeric", "choices": ["x", "y"], "gold": "2"})"
            << "\n";
    }
    try {
        load_dataset(tmp);
        FAIL("expected DatasetParseError");
    } catch (const DatasetParseError& ex) {
        CHECK(ex.line == 2);
    }
    std::remove(tmp.c_str());
}

TEST_CASE("unparsable gold answers are reported by id") {
    const std::string tmp = "bad_gold_tmp.jsonl";
    {
        std::ofstream out(tmp);
        out << R"({"id": "good", "question": "How many?", "kind": "numeric", "gold": "3"})" << "\n";
        out << R"({"id": "bad1", "question": "How many?", "kind": "numeric", "gold": "three"})"
            << "\n";
    }
    try {
        load_dataset(tmp);
        FAIL("expected GoldUnparsable");
    } catch (const GoldUnparsable& ex) {
        REQUIRE(ex.ids.size() == 1);
        CHECK(ex.ids[0] == "bad1");
    }
    std::remove(tmp.c_str());
}

TEST_CASE("dataset kind inference") {
    const std::string tmp = "infer_tmp.jsonl";
    {
        std::ofstream out(tmp);
        out << R"({"id": "n", "question": "How many?", "gold": "12"})" << "\n";
        out << R"({"id": "b", "question": "Is it?", "gold": "yes"})" << "\n";
        out << R"({"id": "m", "question": "Pick", "choices": ["x", "y", "z"], "gold": "B"})"
            << "\n";
        out << R"({"id": "f", "question": "Name it", "gold": "blue whale"})" << "\n";
    }
    std::vector<Question> questions = load_dataset(tmp);
    CHECK(questions[0].kind == TaskKind::Numeric);
    CHECK(questions[1].kind == TaskKind::Binary);
    CHECK(questions[2].kind == TaskKind::MultipleChoice);
    CHECK(questions[3].kind == TaskKind::FreeForm);
    std::remove(tmp.c_str());
}

TEST_CASE("sampling is deterministic and without replacement") {
    std::vector<Question> questions = synthetic_dataset(100);
    std::vector<Question> a = sample(questions, 60, 7);
    std::vector<Question> b = sample(questions, 60, 7);
    REQUIRE(a.size() == 60);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);

    std::set<std::string> ids;
    for (const auto& q : a) ids.insert(q.id);
    CHECK(ids.size() == 60);

    // n == dataset size yields a permutation containing every question
    std::vector<Question> full = sample(questions, 100, 3);
    std::set<std::string> all;
    for (const auto& q : full) all.insert(q.id);
    CHECK(all.size() == 100);

    CHECK_THROWS_AS(sample(questions, 101, 1), std::invalid_argument);
}

TEST_CASE("disjoint-seed sample overlap tracks the hypergeometric expectation") {
    // |A ∩ B| for two independent 60-of-100 samples: mean 36, variance
    // 60*0.6*0.4*(40/99); the mean over 200 seed pairs stays within the
    // alpha = 0.001 band (z = 3.29).
    std::vector<Question> questions = synthetic_dataset(100);
    const int pairs = 200;
    double overlap_sum = 0.0;
    for (int i = 0; i < pairs; ++i) {
        std::vector<Question> a = sample(questions, 60, 1000 + i * 2);
        std::vector<Question> b = sample(questions, 60, 1001 + i * 2);
        std::set<std::string> in_a;
        for (const auto& q : a) in_a.insert(q.id);
        int overlap = 0;
        for (const auto& q : b) overlap += in_a.count(q.id) ? 1 : 0;
        overlap_sum += overlap;
    }
    double mean = overlap_sum / pairs;
    double expected = 60.0 * 60.0 / 100.0;
    double variance = 60.0 * 0.6 * 0.4 * (40.0 / 99.0);
    double band = 3.29 * std::sqrt(variance / pairs);
    CHECK(std::abs(mean - expected) < band);
}

TEST_CASE("evaluate grades with canonical_equal and an all-correct script is 1.0") {
    std::vector<Question> questions;
    for (int i = 0; i < 10; ++i)
        questions.push_back(test_util::numeric_question("q" + std::to_string(i), "7"));
    RunSpec spec;
    spec.strategies = {Strategy::SelfConsistency};
    spec.engine.sc_paths = 3;
    spec.sample_size = 6;
    spec.seeds = {1, 2, 3};
    auto backend = ScriptedBackend::from_generator(test_util::uniform_answer_generator("7"));
    BenchReport report = evaluate(questions, spec, *backend);
    REQUIRE(report.strategies.size() == 1);
    CHECK(report.strategies[0].mean_accuracy == doctest::Approx(1.0));
    CHECK(report.strategies[0].stderr_accuracy == doctest::Approx(0.0));
}

TEST_CASE("nash bench books the path-budget arithmetic across the sample") {
    std::vector<Question> questions = synthetic_dataset(80);
    RunSpec spec;
    spec.strategies = {Strategy::NashCot};
    spec.sample_size = 60;
    spec.seeds = {5};
    auto backend = ScriptedBackend::from_generator(test_util::uniform_answer_generator("1"));
    BenchReport report = evaluate(questions, spec, *backend);
    // 60 questions x 10 paths
    CHECK(report.strategies[0].ledger.logical_paths == 600);
    CHECK(report.strategies[0].ledger.raw_calls == 1200);
    CHECK(backend->calls_served() == 1200);
}

TEST_CASE("ledger conservation: totals equal the sum of per-question ledgers") {
    std::vector<Question> questions = synthetic_dataset(20);
    RunSpec spec;
    spec.strategies = {Strategy::SelfConsistency, Strategy::NashCot};
    spec.engine.sc_paths = 4;
    spec.sample_size = 10;
    spec.seeds = {1, 2};
    auto backend = ScriptedBackend::from_generator(test_util::uniform_answer_generator("3"));
    BenchReport report = evaluate(questions, spec, *backend);

    std::int64_t backend_calls = 0;
    for (const auto& strategy : report.strategies) {
        CostLedger total;
        for (const auto& seed : strategy.per_seed) {
            for (const auto& q : seed.questions) total += q.result.ledger;
        }
        CHECK(total.raw_calls == strategy.ledger.raw_calls);
        CHECK(total.logical_paths == strategy.ledger.logical_paths);
        backend_calls += total.raw_calls;
    }
    CHECK(backend_calls == backend->calls_served());
}

TEST_CASE("mean and stderr recompute exactly from per-seed accuracies") {
    std::vector<Question> questions = synthetic_dataset(30);
    RunSpec spec;
    spec.strategies = {Strategy::ZeroShot};
    spec.sample_size = 12;
    spec.seeds = {11, 22, 33};
    // half the answers correct: accuracy varies by seed sample contents
    auto backend = ScriptedBackend::from_generator(
        [](const CompletionRequest&) { return std::string("4"); });
    BenchReport report = evaluate(questions, spec, *backend);
    const StrategyReport& strategy = report.strategies[0];
    double mean = 0.0;
    for (const auto& seed : strategy.per_seed) mean += seed.accuracy();
    mean /= strategy.per_seed.size();
    CHECK(strategy.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
    double var = 0.0;
    for (const auto& seed : strategy.per_seed) {
        var += (seed.accuracy() - mean) * (seed.accuracy() - mean);
    }
    var /= (strategy.per_seed.size() - 1);
    CHECK(strategy.stderr_accuracy ==
          doctest::Approx(std::sqrt(var / strategy.per_seed.size())).epsilon(1e-12));
}

TEST_CASE("shared sample: every strategy sees the same questions per seed") {
    std::vector<Question> questions = synthetic_dataset(40);
    RunSpec spec;
    spec.strategies = {Strategy::ZeroShot, Strategy::ZeroShotCot};
    spec.sample_size = 15;
    spec.seeds = {9};
    auto backend = ScriptedBackend::from_generator(test_util::uniform_answer_generator("2"));
    BenchReport report = evaluate(questions, spec, *backend);
    REQUIRE(report.strategies.size() == 2);
    auto ids = [](const SeedOutcome& outcome) {
        std::vector<std::string> out;
        for (const auto& q : outcome.questions) out.push_back(q.id);
        return out;
    };
    CHECK(ids(report.strategies[0].per_seed[0]) == ids(report.strategies[1].per_seed[0]));
}

TEST_CASE("scripted bench reports serialize byte-identically") {
    std::vector<Question> questions = synthetic_dataset(25);
    RunSpec spec;
    spec.strategies = {Strategy::NashCot};
    spec.sample_size = 8;
    spec.seeds = {1, 2};
    auto run = [&] {
        auto backend = ScriptedBackend::from_generator(test_util::uniform_answer_generator("5"));
        BenchReport report = evaluate(questions, spec, *backend);
        report.dataset_path = "synthetic";
        return to_json(report).dump(2) + "\n---\n" + to_csv(report);
    };
    CHECK(run() == run());
}

TEST_CASE("backend failure aborts the seed with partial results preserved") {
    std::vector<Question> questions = synthetic_dataset(10);
    RunSpec spec;
    spec.strategies = {Strategy::ZeroShot};
    spec.sample_size = 5;
    spec.seeds = {4};
    // three scripted replies, then exhaustion mid-seed
    auto backend = ScriptedBackend::from_queue({"1", "2", "3"});
    BenchReport report = evaluate(questions, spec, *backend);
    const SeedOutcome& seed = report.strategies[0].per_seed[0];
    CHECK_FALSE(seed.complete);
    CHECK(seed.questions.size() == 3);
    CHECK(seed.abort_reason.find("exhausted") != std::string::npos);
}

TEST_CASE("worker count does not change the report") {
    std::vector<Question> questions = synthetic_dataset(12);
    RunSpec serial;
    serial.strategies = {Strategy::ZeroShotCot};
    serial.sample_size = 8;
    serial.seeds = {6};
    RunSpec threaded = serial;
    threaded.workers = 4;

    auto generator = [](const CompletionRequest& request) -> std::string {
        const std::string& text = request.messages.back().text;
        if (text.find("Therefore,") != std::string::npos)
            return "The answer is " + std::to_string(request.seed_hint.value_or(0) % 10);
        return "rationale";
    };
    auto b1 = ScriptedBackend::from_generator(generator);
    auto b2 = ScriptedBackend::from_generator(generator);
    BenchReport r1 = evaluate(questions, serial, *b1);
    BenchReport r2 = evaluate(questions, threaded, *b2);
    r1.spec.workers = r2.spec.workers = 0;  // exclude the knob itself
    CHECK(to_json(r1).dump() == to_json(r2).dump());
}

TEST_CASE("run spec validation") {
    std::vector<Question> questions = synthetic_dataset(10);
    RunSpec spec;
    spec.sample_size = 11;
    CHECK_THROWS_AS(spec.validate(questions.size()), std::invalid_argument);
    spec.sample_size = 5;
    spec.seeds = {1, 1};
    CHECK_THROWS_AS(spec.validate(questions.size()), std::invalid_argument);
}
