#include "nashcot/engine.hpp"

#include <algorithm>
#include <future>

namespace nashcot {

using nlohmann::json;

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::ZeroShot: return "zero-shot";
        case Strategy::ZeroShotCot: return "zero-shot-cot";
        case Strategy::SelfConsistency: return "self-consistency";
        case Strategy::NashCot: return "nash-cot";
    }
    return "unknown";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
    if (name == "zero-shot") return Strategy::ZeroShot;
    if (name == "zero-shot-cot") return Strategy::ZeroShotCot;
    if (name == "self-consistency") return Strategy::SelfConsistency;
    if (name == "nash-cot") return Strategy::NashCot;
    return std::nullopt;
}

void EngineConfig::validate() const {
    if (n_outer < 1) throw std::invalid_argument("engine config: n_outer must be >= 1");
    if (n_mini < 1) throw std::invalid_argument("engine config: n_mini must be >= 1");
    if (sc_paths < 1) throw std::invalid_argument("engine config: sc_paths must be >= 1");
    if (!(temperature >= 0.0) || temperature > 2.0)
        throw std::invalid_argument("engine config: temperature must be in [0, 2]");
    if (max_reasoning_tokens < 1 || max_answer_tokens < 1)
        throw std::invalid_argument("engine config: token limits must be >= 1");
    cot.validate();
}

int nash_logical_paths(const EngineConfig& config) {
    return config.n_outer * (config.n_mini + 1) + 1;
}

CostLedger& CostLedger::operator+=(const CostLedger& other) {
    logical_paths += other.logical_paths;
    raw_calls += other.raw_calls;
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    latency_ms += other.latency_ms;
    return *this;
}

Trajectory make_trajectory(std::optional<CanonicalAnswer> guided,
                           std::vector<std::optional<CanonicalAnswer>> batch) {
    Trajectory trajectory;
    trajectory.guided.answer = std::move(guided);
    trajectory.guided.status =
        trajectory.guided.answer ? ExtractStatus::Ok : ExtractStatus::NoAnswerFound;
    trajectory.batch.reserve(batch.size());
    for (auto& answer : batch) {
        PathRecord record;
        record.status = answer ? ExtractStatus::Ok : ExtractStatus::NoAnswerFound;
        record.answer = std::move(answer);
        trajectory.batch.push_back(std::move(record));
    }
    return trajectory;
}

// ============================================================================
// Serialization
// ============================================================================

json to_json(const CanonicalAnswer& answer) {
    return json{{"kind", std::string(to_string(answer.kind))}, {"value", answer.value}};
}

json to_json(const PathRecord& record) {
    json out{{"rationale", record.rationale},
             {"answer_text", record.answer_text},
             {"status", std::string(to_string(record.status))}};
    out["answer"] = record.answer ? to_json(*record.answer) : json(nullptr);
    return out;
}

json to_json(const Trajectory& trajectory) {
    json batch = json::array();
    for (const auto& record : trajectory.batch) batch.push_back(to_json(record));
    return json{{"guided", to_json(trajectory.guided)}, {"batch", std::move(batch)}};
}

json to_json(const CostLedger& ledger) {
    return json{{"logical_paths", ledger.logical_paths},
                {"raw_calls", ledger.raw_calls},
                {"prompt_tokens", ledger.prompt_tokens},
                {"completion_tokens", ledger.completion_tokens},
                {"latency_ms", ledger.latency_ms}};
}

json to_json(const StrategyResult& result) {
    json out{{"strategy", std::string(to_string(result.strategy))},
             {"abstained", result.abstained()},
             {"equilibrium_hits", result.equilibrium_hits},
             {"ledger", to_json(result.ledger)}};
    out["final"] = result.final ? to_json(*result.final) : json(nullptr);
    if (result.selection) {
        out["selection"] = json{{"player_id", result.selection->player_id},
                                {"fallback", result.selection->fallback},
                                {"rationale", result.selection->rationale},
                                {"reply", result.selection->reply}};
    }
    if (!result.paths.empty()) {
        json paths = json::array();
        for (const auto& record : result.paths) paths.push_back(to_json(record));
        out["paths"] = std::move(paths);
    }
    if (!result.trajectories.empty()) {
        json trajectories = json::array();
        for (const auto& t : result.trajectories) trajectories.push_back(to_json(t));
        out["trajectories"] = std::move(trajectories);
    }
    return out;
}

// ============================================================================
// Aggregation primitives
// ============================================================================

namespace {

struct Group {
    CanonicalAnswer representative;
    int count = 0;
    std::size_t first_seen = 0;
};

// Increment the group whose representative compares canonical_equal, keyed by
// first-seen order.
void bump(std::vector<Group>& groups, const CanonicalAnswer& answer, std::size_t order) {
    for (auto& group : groups) {
        if (canonical_equal(group.representative, answer)) {
            ++group.count;
            return;
        }
    }
    groups.push_back({answer, 1, order});
}

const Group* best_group(const std::vector<Group>& groups) {
    const Group* best = nullptr;
    for (const auto& group : groups) {
        if (!best || group.count > best->count ||
            (group.count == best->count && group.first_seen < best->first_seen)) {
            best = &group;
        }
    }
    return best;
}

}  // namespace

std::optional<CanonicalAnswer> majority_vote(
    const std::vector<std::optional<CanonicalAnswer>>& answers) {
    std::vector<Group> groups;
    std::size_t order = 0;
    for (const auto& answer : answers) {
        if (answer) bump(groups, *answer, order);
        ++order;
    }
    const Group* best = best_group(groups);
    if (!best) return std::nullopt;
    return best->representative;
}

FilterOutcome filter_trajectories(const std::vector<Trajectory>& trajectories) {
    std::vector<Group> equilibrium;
    std::vector<std::optional<CanonicalAnswer>> pooled;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& trajectory = trajectories[i];
        if (trajectory.guided.answer) {
            bool hit = std::any_of(
                trajectory.batch.begin(), trajectory.batch.end(), [&](const PathRecord& record) {
                    return record.answer &&
                           canonical_equal(*record.answer, *trajectory.guided.answer);
                });
            if (hit) bump(equilibrium, *trajectory.guided.answer, i);
        }
        pooled.push_back(trajectory.guided.answer);
        for (const auto& record : trajectory.batch) pooled.push_back(record.answer);
    }

    FilterOutcome outcome;
    if (const Group* best = best_group(equilibrium)) {
        outcome.final = best->representative;
        for (const auto& group : equilibrium) outcome.equilibrium_hits += group.count;
    } else {
        outcome.final = majority_vote(pooled);
        outcome.used_fallback = true;
    }
    return outcome;
}

std::optional<CanonicalAnswer> filter(const std::vector<Trajectory>& trajectories) {
    return filter_trajectories(trajectories).final;
}

// ============================================================================
// Strategy runners
// ============================================================================

namespace {

// splitmix64; derives per-call seed hints so generator-mode scripts are a
// pure function of (seed, question, path, stage).
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t seed_hint(const EngineConfig& config, const Question& question,
                        std::uint64_t path_ordinal, int stage) {
    return mix(config.seed ^ mix(hash_str(question.id) ^ mix(path_ordinal * 2 + stage)));
}

CompletionResponse call(Backend& backend, const std::string& model, RenderedPrompt prompt,
                        double temperature, int max_tokens, std::uint64_t hint,
                        CostLedger& ledger) {
    CompletionRequest request;
    request.model = model;
    request.messages = std::move(prompt.messages);
    request.temperature = temperature;
    request.max_tokens = max_tokens;
    request.seed_hint = hint;
    CompletionResponse response = backend.complete(request);
    ledger.raw_calls += 1;
    ledger.prompt_tokens += response.prompt_tokens;
    ledger.completion_tokens += response.completion_tokens;
    ledger.latency_ms += response.latency_ms;
    return response;
}

}  // namespace

StrategyResult run_zero_shot(const Question& question, Backend& backend,
                             const EngineConfig& config) {
    question.validate();
    config.validate();
    StrategyResult result;
    result.strategy = Strategy::ZeroShot;
    CompletionResponse response =
        call(backend, backend.model_id(), render_direct(question, config.cot), 0.0,
             config.max_answer_tokens, seed_hint(config, question, 0, 1), result.ledger);
    PathRecord record;
    record.answer_text = response.text;
    std::optional<int> options = question.kind == TaskKind::MultipleChoice
                                     ? std::optional<int>(question.option_count())
                                     : std::nullopt;
    Extraction extraction = extract(record.answer_text, question.kind, options);
    record.status = extraction.status;
    record.answer = extraction.answer;
    result.final = record.answer;
    result.paths.push_back(std::move(record));
    result.ledger.logical_paths = 1;
    return result;
}

PathRecord run_cot_path(const Question& question, Backend& backend, const EngineConfig& config,
                        const PlayerTemplate* guided_by, double temperature,
                        std::uint64_t path_ordinal, CostLedger& ledger) {
    PathRecord record;
    auto render = [&](PromptStage stage,
                      std::optional<std::string_view> rationale) -> RenderedPrompt {
        if (guided_by) return render_guided(question, *guided_by, config.cot, stage, rationale);
        return render_cot(question, config.cot, stage, rationale);
    };
    CompletionResponse reasoning =
        call(backend, backend.model_id(), render(PromptStage::Reasoning, std::nullopt),
             temperature, config.max_reasoning_tokens, seed_hint(config, question, path_ordinal, 0),
             ledger);
    record.rationale = reasoning.text;
    CompletionResponse answer =
        call(backend, backend.model_id(),
             render(PromptStage::AnswerExtraction, std::string_view(record.rationale)), 0.0,
             config.max_answer_tokens, seed_hint(config, question, path_ordinal, 1), ledger);
    record.answer_text = answer.text;
    std::optional<int> options = question.kind == TaskKind::MultipleChoice
                                     ? std::optional<int>(question.option_count())
                                     : std::nullopt;
    Extraction extraction = extract(record.answer_text, question.kind, options);
    record.status = extraction.status;
    record.answer = extraction.answer;
    return record;
}

StrategyResult run_zero_shot_cot(const Question& question, Backend& backend,
                                 const EngineConfig& config) {
    question.validate();
    config.validate();
    StrategyResult result;
    result.strategy = Strategy::ZeroShotCot;
    // single-path run: deterministic decoding
    result.paths.push_back(run_cot_path(question, backend, config, nullptr, 0.0, 0, result.ledger));
    result.final = result.paths.front().answer;
    result.ledger.logical_paths = 1;
    return result;
}

StrategyResult run_self_consistency(const Question& question, Backend& backend,
                                    const EngineConfig& config) {
    question.validate();
    config.validate();
    StrategyResult result;
    result.strategy = Strategy::SelfConsistency;
    result.paths.resize(config.sc_paths);

    auto run_one = [&](int index, CostLedger& ledger) {
        result.paths[index] = run_cot_path(question, backend, config, nullptr, config.temperature,
                                           static_cast<std::uint64_t>(index), ledger);
    };
    if (config.parallel_paths && config.sc_paths > 1) {
        std::vector<CostLedger> ledgers(config.sc_paths);
        std::vector<std::future<void>> futures;
        futures.reserve(config.sc_paths);
        for (int i = 0; i < config.sc_paths; ++i) {
            futures.push_back(std::async(std::launch::async,
                                         [&, i] { run_one(i, ledgers[i]); }));
        }
        for (auto& f : futures) f.get();
        for (const auto& ledger : ledgers) result.ledger += ledger;
    } else {
        for (int i = 0; i < config.sc_paths; ++i) run_one(i, result.ledger);
    }

    std::vector<std::optional<CanonicalAnswer>> answers;
    answers.reserve(result.paths.size());
    for (const auto& record : result.paths) answers.push_back(record.answer);
    result.final = majority_vote(answers);
    result.ledger.logical_paths = config.sc_paths;
    return result;
}

PlayerSelection select_player(const Question& question, const PlayerRegistry& registry,
                              Backend& backend, const EngineConfig& config, CostLedger& ledger) {
    registry.validate();
    PlayerSelection selection;
    CompletionResponse reasoning = call(
        backend, backend.model_id(), render_preference(question, registry, PromptStage::Reasoning),
        config.temperature, config.max_reasoning_tokens, seed_hint(config, question, 1u << 20, 0),
        ledger);
    selection.rationale = reasoning.text;
    CompletionResponse reply =
        call(backend, backend.model_id(),
             render_preference(question, registry, PromptStage::AnswerExtraction,
                               std::string_view(selection.rationale)),
             0.0, config.max_answer_tokens, seed_hint(config, question, 1u << 20, 1), ledger);
    selection.reply = reply.text;

    selection.player_id = 1;
    selection.fallback = true;
    Extraction parsed = extract(selection.reply, TaskKind::Numeric);
    if (parsed.ok() && parsed.answer->value.find('.') == std::string::npos &&
        parsed.answer->value.find('-') == std::string::npos) {
        int id = 0;
        try {
            id = std::stoi(parsed.answer->value);
        } catch (const std::exception&) {
            id = 0;
        }
        if (id >= 1 && id <= registry.size()) {
            selection.player_id = id;
            selection.fallback = false;
        }
    }
    return selection;
}

GatherOutcome gather(const Question& question, Backend& backend, const EngineConfig& config,
                     const PlayerRegistry& registry) {
    question.validate();
    config.validate();
    GatherOutcome outcome;
    outcome.selection = select_player(question, registry, backend, config, outcome.ledger);
    const PlayerTemplate& player = registry.by_id(outcome.selection.player_id);

    std::vector<PathRecord> accumulated;
    for (int outer = 0; outer < config.n_outer; ++outer) {
        std::vector<PathRecord> fresh(config.n_mini);
        PathRecord guided;
        // Path ordinals are fixed by (outer, mini) position so seed hints and
        // record order never depend on completion order.
        auto ordinal = [&](int mini) {
            return static_cast<std::uint64_t>(outer) * (config.n_mini + 1) + mini;
        };
        if (config.parallel_paths) {
            std::vector<CostLedger> ledgers(config.n_mini + 1);
            std::vector<std::future<void>> futures;
            for (int mini = 0; mini < config.n_mini; ++mini) {
                futures.push_back(std::async(std::launch::async, [&, mini] {
                    fresh[mini] = run_cot_path(question, backend, config, nullptr,
                                               config.temperature, ordinal(mini), ledgers[mini]);
                }));
            }
            futures.push_back(std::async(std::launch::async, [&] {
                guided = run_cot_path(question, backend, config, &player, config.temperature,
                                      ordinal(config.n_mini), ledgers[config.n_mini]);
            }));
            for (auto& f : futures) f.get();
            for (const auto& ledger : ledgers) outcome.ledger += ledger;
        } else {
            for (int mini = 0; mini < config.n_mini; ++mini) {
                fresh[mini] = run_cot_path(question, backend, config, nullptr, config.temperature,
                                           ordinal(mini), outcome.ledger);
            }
            guided = run_cot_path(question, backend, config, &player, config.temperature,
                                  ordinal(config.n_mini), outcome.ledger);
        }

        Trajectory trajectory;
        trajectory.guided = std::move(guided);
        if (config.accumulate_batches) {
            accumulated.insert(accumulated.end(), fresh.begin(), fresh.end());
            trajectory.batch = accumulated;
        } else {
            trajectory.batch = std::move(fresh);
        }
        outcome.trajectories.push_back(std::move(trajectory));
    }
    outcome.ledger.logical_paths = nash_logical_paths(config);
    return outcome;
}

StrategyResult run_nash_cot(const Question& question, Backend& backend,
                            const EngineConfig& config, const PlayerRegistry& registry) {
    GatherOutcome gathered = gather(question, backend, config, registry);
    FilterOutcome filtered = filter_trajectories(gathered.trajectories);

    StrategyResult result;
    result.strategy = Strategy::NashCot;
    result.final = filtered.final;
    result.trajectories = std::move(gathered.trajectories);
    result.selection = std::move(gathered.selection);
    result.equilibrium_hits = filtered.equilibrium_hits;
    result.ledger = gathered.ledger;
    return result;
}

StrategyResult run_strategy(Strategy strategy, const Question& question, Backend& backend,
                            const EngineConfig& config, const PlayerRegistry& registry) {
    switch (strategy) {
        case Strategy::ZeroShot: return run_zero_shot(question, backend, config);
        case Strategy::ZeroShotCot: return run_zero_shot_cot(question, backend, config);
        case Strategy::SelfConsistency: return run_self_consistency(question, backend, config);
        case Strategy::NashCot: return run_nash_cot(question, backend, config, registry);
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace nashcot
