#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nashcot/dataset.hpp"
#include "nashcot/engine.hpp"

namespace nashcot {

// ============================================================================
// Run specification and report
// ============================================================================

struct RunSpec {
    std::vector<Strategy> strategies{Strategy::NashCot};
    EngineConfig engine;
    int sample_size = 60;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int workers = 1;  // concurrent questions; capped by the backend's limits

    void validate(std::size_t dataset_size) const;  // sample <= dataset, seeds distinct
};

struct QuestionOutcome {
    std::string id;
    bool correct = false;
    StrategyResult result;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool complete = true;  // false when a backend failure aborted the seed
    std::string abort_reason;
    int sampled = 0;
    int correct = 0;
    std::vector<QuestionOutcome> questions;  // ordered by question id

    double accuracy() const { return sampled == 0 ? 0.0 : static_cast<double>(correct) / sampled; }
};

struct StrategyReport {
    Strategy strategy = Strategy::NashCot;
    std::vector<SeedOutcome> per_seed;
    double mean_accuracy = 0.0;
    double stderr_accuracy = 0.0;  // sample standard error over seeds; 0 for one seed
    CostLedger ledger;             // totals across seeds and questions
};

struct BenchReport {
    RunSpec spec;
    std::string dataset_path;
    std::vector<StrategyReport> strategies;
};

/// Grading compares the strategy's final answer to gold via canonical_equal
/// only; abstentions grade incorrect. Every seed shares its sampled question
/// set across strategies. Backend failures abort the affected seed with the
/// partial per-question results preserved and marked. The optional stop flag
/// aborts between questions (Ctrl-C support); interrupted seeds are marked
/// incomplete.
BenchReport evaluate(const std::vector<Question>& dataset, const RunSpec& spec, Backend& backend,
                     const PlayerRegistry& registry = builtin_registry(),
                     const std::atomic<bool>* stop = nullptr);

// ============================================================================
// Serialization: JSON document plus a flat CSV (one row per strategy x seed)
// ============================================================================

nlohmann::json to_json(const BenchReport& report);
std::string to_csv(const BenchReport& report);

void write_report_files(const BenchReport& report, const std::string& json_path,
                        const std::string& csv_path);

}  // namespace nashcot
