#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nashcot/backend.hpp"
#include "nashcot/question.hpp"
#include "nashcot/templates.hpp"

namespace nashcot {

// ============================================================================
// Configuration and result types
// ============================================================================

enum class Strategy { ZeroShot, ZeroShotCot, SelfConsistency, NashCot };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);

struct EngineConfig {
    int n_outer = 3;
    int n_mini = 2;
    int sc_paths = 20;
    double temperature = 0.7;  // sampling strategies; single-path runs use 0
    std::uint64_t seed = 0;
    int max_reasoning_tokens = 512;
    int max_answer_tokens = 64;
    // Literal-pseudocode mode: the answer list is never reset between outer
    // iterations, so trajectory t carries every batch answer gathered so far.
    bool accumulate_batches = false;
    // Run the paths of one gather iteration concurrently. Requires a backend
    // that tolerates concurrent callers (generator scripts or live).
    bool parallel_paths = false;

    CotTemplate cot;

    void validate() const;  // throws std::invalid_argument
};

/// Logical paths one Nash run consumes: the selection path plus, per outer
/// iteration, n_mini normal paths and one guided path. Always computed, never
/// stored.
int nash_logical_paths(const EngineConfig& config);

/// One complete generation for one answer plus its audit trail.
struct PathRecord {
    std::string rationale;    // empty for single-stage prompts
    std::string answer_text;  // raw completion the answer was extracted from
    std::optional<CanonicalAnswer> answer;
    ExtractStatus status = ExtractStatus::NoAnswerFound;

    bool abstained() const { return !answer.has_value(); }
};

/// One outer-loop record: the template-guided answer plus its mini-batch.
struct Trajectory {
    PathRecord guided;
    std::vector<PathRecord> batch;
};

Trajectory make_trajectory(std::optional<CanonicalAnswer> guided,
                           std::vector<std::optional<CanonicalAnswer>> batch);

struct PlayerSelection {
    int player_id = 1;
    bool fallback = false;  // reply was unparsable; defaulted to player 1
    std::string rationale;
    std::string reply;
};

struct CostLedger {
    int logical_paths = 0;
    int raw_calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    double latency_ms = 0.0;

    CostLedger& operator+=(const CostLedger& other);
};

struct StrategyResult {
    Strategy strategy = Strategy::ZeroShot;
    std::optional<CanonicalAnswer> final;
    std::vector<PathRecord> paths;        // zero-shot / CoT / self-consistency
    std::vector<Trajectory> trajectories; // nash-cot
    std::optional<PlayerSelection> selection;
    int equilibrium_hits = 0;
    CostLedger ledger;

    bool abstained() const { return !final.has_value(); }
};

nlohmann::json to_json(const CanonicalAnswer& answer);
nlohmann::json to_json(const PathRecord& record);
nlohmann::json to_json(const Trajectory& trajectory);
nlohmann::json to_json(const CostLedger& ledger);
nlohmann::json to_json(const StrategyResult& result);

// ============================================================================
// Aggregation primitives
// ============================================================================

/// Most frequent non-abstaining answer under canonical_equal grouping; ties
/// resolve to the group seen earliest in list order. Empty or all-abstaining
/// input yields an abstention.
std::optional<CanonicalAnswer> majority_vote(
    const std::vector<std::optional<CanonicalAnswer>>& answers);

struct FilterOutcome {
    std::optional<CanonicalAnswer> final;
    int equilibrium_hits = 0;   // total increments across the frequency map
    bool used_fallback = false; // map was empty; pooled vote decided
};

/// Equilibrium filtering. Counts, per canonical answer, the trajectories
/// whose guided answer matches some member of its own batch; returns the
/// most frequent such answer (ties to the earliest-seen trajectory). With no
/// equilibrium hit anywhere, falls back to a majority vote over the pooled
/// guided+batch answers of every trajectory. Abstentions never enter either
/// frequency count.
FilterOutcome filter_trajectories(const std::vector<Trajectory>& trajectories);

std::optional<CanonicalAnswer> filter(const std::vector<Trajectory>& trajectories);

// ============================================================================
// Strategies
// ============================================================================

StrategyResult run_zero_shot(const Question& question, Backend& backend,
                             const EngineConfig& config);

/// One two-stage chain-of-thought path: a reasoning call then an answer
/// extraction call (1 logical path, 2 raw calls). A persona makes it a
/// template-guided path.
PathRecord run_cot_path(const Question& question, Backend& backend, const EngineConfig& config,
                        const PlayerTemplate* guided_by, double temperature,
                        std::uint64_t path_ordinal, CostLedger& ledger);

StrategyResult run_zero_shot_cot(const Question& question, Backend& backend,
                                 const EngineConfig& config);

StrategyResult run_self_consistency(const Question& question, Backend& backend,
                                    const EngineConfig& config);

/// Two-stage preference prompt; parses the chosen player id from the reply.
/// An unparsable or out-of-range reply falls back to player 1 and flags the
/// record. Costs 1 logical path (2 raw calls).
PlayerSelection select_player(const Question& question, const PlayerRegistry& registry,
                              Backend& backend, const EngineConfig& config, CostLedger& ledger);

struct GatherOutcome {
    PlayerSelection selection;
    std::vector<Trajectory> trajectories;
    CostLedger ledger;
};

/// Answer gathering: select a player once, then per outer iteration run
/// n_mini normal paths and one guided path.
GatherOutcome gather(const Question& question, Backend& backend, const EngineConfig& config,
                     const PlayerRegistry& registry);

StrategyResult run_nash_cot(const Question& question, Backend& backend,
                            const EngineConfig& config, const PlayerRegistry& registry);

StrategyResult run_strategy(Strategy strategy, const Question& question, Backend& backend,
                            const EngineConfig& config, const PlayerRegistry& registry);

}  // namespace nashcot
