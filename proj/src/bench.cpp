#include "nashcot/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace nashcot {

using nlohmann::json;

void RunSpec::validate(std::size_t dataset_size) const {
    if (strategies.empty()) throw std::invalid_argument("run spec: no strategies");
    engine.validate();
    if (sample_size < 1 || static_cast<std::size_t>(sample_size) > dataset_size)
        throw std::invalid_argument("run spec: sample size must be in 1..dataset size");
    if (seeds.empty()) throw std::invalid_argument("run spec: no seeds");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size())
        throw std::invalid_argument("run spec: seeds must be distinct");
    if (workers < 1) throw std::invalid_argument("run spec: workers must be >= 1");
}

namespace {

SeedOutcome run_seed(const std::vector<Question>& sampled, Strategy strategy, const RunSpec& spec,
                     Backend& backend, const PlayerRegistry& registry,
                     const std::atomic<bool>* stop) {
    SeedOutcome outcome;
    outcome.sampled = static_cast<int>(sampled.size());
    outcome.questions.reserve(sampled.size());

    auto grade = [&](const Question& question, StrategyResult result) {
        QuestionOutcome q;
        q.id = question.id;
        q.correct = result.final && canonical_equal(*result.final, question.gold);
        q.result = std::move(result);
        return q;
    };

    try {
        if (spec.workers > 1) {
            std::vector<std::future<QuestionOutcome>> futures;
            futures.reserve(sampled.size());
            for (const auto& question : sampled) {
                futures.push_back(std::async(std::launch::async, [&]() {
                    return grade(question, run_strategy(strategy, question, backend, spec.engine,
                                                        registry));
                }));
            }
            for (auto& f : futures) outcome.questions.push_back(f.get());
        } else {
            for (const auto& question : sampled) {
                if (stop && stop->load()) {
                    outcome.complete = false;
                    outcome.abort_reason = "interrupted";
                    break;
                }
                outcome.questions.push_back(
                    grade(question, run_strategy(strategy, question, backend, spec.engine,
                                                 registry)));
            }
        }
    } catch (const BackendError& ex) {
        outcome.complete = false;
        outcome.abort_reason = ex.what();
    }

    std::sort(outcome.questions.begin(), outcome.questions.end(),
              [](const QuestionOutcome& a, const QuestionOutcome& b) { return a.id < b.id; });
    for (const auto& q : outcome.questions) outcome.correct += q.correct ? 1 : 0;
    return outcome;
}

void finalize_strategy(StrategyReport& report) {
    double sum = 0.0;
    for (const auto& seed : report.per_seed) {
        sum += seed.accuracy();
        for (const auto& q : seed.questions) report.ledger += q.result.ledger;
    }
    const std::size_t n = report.per_seed.size();
    report.mean_accuracy = n == 0 ? 0.0 : sum / static_cast<double>(n);
    if (n > 1) {
        double var = 0.0;
        for (const auto& seed : report.per_seed) {
            double d = seed.accuracy() - report.mean_accuracy;
            var += d * d;
        }
        var /= static_cast<double>(n - 1);
        report.stderr_accuracy = std::sqrt(var / static_cast<double>(n));
    }
}

}  // namespace

BenchReport evaluate(const std::vector<Question>& dataset, const RunSpec& spec, Backend& backend,
                     const PlayerRegistry& registry, const std::atomic<bool>* stop) {
    spec.validate(dataset.size());
    CapabilityReport capability = backend.probe();
    if (!capability.reachable)
        throw BackendError(BackendError::Kind::Transport, "bench: backend probe failed");

    BenchReport report;
    report.spec = spec;
    for (Strategy strategy : spec.strategies) {
        StrategyReport strategy_report;
        strategy_report.strategy = strategy;
        for (std::uint64_t seed : spec.seeds) {
            // the sample is a function of (dataset, seed) alone, so every
            // strategy sees the same questions for a given seed
            std::vector<Question> sampled = sample(dataset, spec.sample_size, seed);
            SeedOutcome outcome = run_seed(sampled, strategy, spec, backend, registry, stop);
            outcome.seed = seed;
            strategy_report.per_seed.push_back(std::move(outcome));
            if (stop && stop->load()) break;
        }
        finalize_strategy(strategy_report);
        report.strategies.push_back(std::move(strategy_report));
        if (stop && stop->load()) break;
    }
    return report;
}

json to_json(const BenchReport& report) {
    json seeds = json::array();
    for (auto s : report.spec.seeds) seeds.push_back(s);
    json strategy_names = json::array();
    for (auto s : report.spec.strategies) strategy_names.push_back(std::string(to_string(s)));

    json spec{{"dataset", report.dataset_path},
              {"strategies", std::move(strategy_names)},
              {"sample_size", report.spec.sample_size},
              {"seeds", std::move(seeds)},
              {"workers", report.spec.workers},
              {"engine",
               {{"n_outer", report.spec.engine.n_outer},
                {"n_mini", report.spec.engine.n_mini},
                {"sc_paths", report.spec.engine.sc_paths},
                {"temperature", report.spec.engine.temperature},
                {"seed", report.spec.engine.seed},
                {"accumulate_batches", report.spec.engine.accumulate_batches}}}};

    json strategies = json::array();
    for (const auto& strategy_report : report.strategies) {
        json per_seed = json::array();
        for (const auto& seed : strategy_report.per_seed) {
            json questions = json::array();
            for (const auto& q : seed.questions) {
                questions.push_back(json{{"id", q.id},
                                         {"correct", q.correct},
                                         {"result", to_json(q.result)}});
            }
            per_seed.push_back(json{{"seed", seed.seed},
                                    {"complete", seed.complete},
                                    {"abort_reason", seed.abort_reason},
                                    {"sampled", seed.sampled},
                                    {"correct", seed.correct},
                                    {"accuracy", seed.accuracy()},
                                    {"questions", std::move(questions)}});
        }
        strategies.push_back(json{{"strategy", std::string(to_string(strategy_report.strategy))},
                                  {"per_seed", std::move(per_seed)},
                                  {"mean_accuracy", strategy_report.mean_accuracy},
                                  {"stderr_accuracy", strategy_report.stderr_accuracy},
                                  {"ledger", to_json(strategy_report.ledger)}});
    }
    return json{{"spec", std::move(spec)}, {"strategies", std::move(strategies)}};
}

std::string to_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "strategy,seed,accuracy,complete,sampled,correct,logical_paths,raw_calls,"
           "prompt_tokens,completion_tokens,latency_ms\n";
    for (const auto& strategy_report : report.strategies) {
        for (const auto& seed : strategy_report.per_seed) {
            CostLedger ledger;
            for (const auto& q : seed.questions) ledger += q.result.ledger;
            out << to_string(strategy_report.strategy) << ',' << seed.seed << ','
                << seed.accuracy() << ',' << (seed.complete ? "true" : "false") << ','
                << seed.sampled << ',' << seed.correct << ',' << ledger.logical_paths << ','
                << ledger.raw_calls << ',' << ledger.prompt_tokens << ','
                << ledger.completion_tokens << ',' << ledger.latency_ms << '\n';
        }
    }
    return out.str();
}

void write_report_files(const BenchReport& report, const std::string& json_path,
                        const std::string& csv_path) {
    {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error("bench: cannot write " + json_path);
        out << to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("bench: cannot write " + csv_path);
        out << to_csv(report);
    }
}

}  // namespace nashcot
