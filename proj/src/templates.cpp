#include "nashcot/templates.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nashcot {

using nlohmann::json;

void Question::validate() const {
    if (id.empty()) throw std::invalid_argument("question: empty id");
    if (text.empty()) throw std::invalid_argument("question " + id + ": empty text");
    if (kind == TaskKind::MultipleChoice) {
        if (options.size() < 2 || options.size() > 8)
            throw std::invalid_argument("question " + id + ": option count must be in 2..8");
    } else if (!options.empty()) {
        throw std::invalid_argument("question " + id + ": options only valid for multiple_choice");
    }
    if (gold.kind != kind)
        throw std::invalid_argument("question " + id + ": gold kind does not match question kind");
    if (gold.value.empty())
        throw std::invalid_argument("question " + id + ": empty gold answer");
}

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

const std::string& CotTemplate::answer_trigger(TaskKind kind) const {
    switch (kind) {
        case TaskKind::Numeric: return numeric_trigger;
        case TaskKind::MultipleChoice: return choice_trigger;
        case TaskKind::Binary: return binary_trigger;
        case TaskKind::FreeForm: return freeform_trigger;
    }
    return freeform_trigger;
}

void CotTemplate::validate() const {
    if (reasoning_trigger.empty()) throw std::invalid_argument("cot template: empty reasoning trigger");
    for (auto kind : {TaskKind::Numeric, TaskKind::MultipleChoice, TaskKind::Binary, TaskKind::FreeForm}) {
        if (answer_trigger(kind).empty())
            throw std::invalid_argument("cot template: empty answer trigger for " +
                                        std::string(to_string(kind)));
    }
}

// ============================================================================
// Registry
// ============================================================================

const PlayerTemplate& PlayerRegistry::by_id(int id) const {
    for (const auto& p : players) {
        if (p.id == id) return p;
    }
    throw std::out_of_range("registry: no player with id " + std::to_string(id));
}

PlayerRegistry PlayerRegistry::without(std::string_view name) const {
    PlayerRegistry derived;
    derived.provenance = provenance + " (without " + std::string(name) + ")";
    for (const auto& p : players) {
        if (p.name == name) continue;
        PlayerTemplate copy = p;
        copy.id = derived.size() + 1;
        derived.players.push_back(std::move(copy));
    }
    if (derived.size() == size())
        throw RegistryError(RegistryError::Code::Parse,
                            "registry: no player named '" + std::string(name) + "'");
    derived.validate();
    return derived;
}

void PlayerRegistry::validate() const {
    if (players.empty()) throw RegistryError(RegistryError::Code::Empty, "registry: empty");
    std::set<int> ids;
    std::set<std::string> names;
    for (const auto& p : players) {
        if (!ids.insert(p.id).second)
            throw RegistryError(RegistryError::Code::DuplicateId,
                                "registry: duplicate id " + std::to_string(p.id));
        if (!names.insert(p.name).second)
            throw RegistryError(RegistryError::Code::Parse,
                                "registry: duplicate name '" + p.name + "'");
        if (p.name.empty() || p.description.empty())
            throw RegistryError(RegistryError::Code::Parse,
                                "registry: blank name or description for id " + std::to_string(p.id));
    }
    for (int expected = 1; expected <= size(); ++expected) {
        if (!ids.count(expected))
            throw RegistryError(RegistryError::Code::Parse,
                                "registry: ids must be contiguous 1..N, missing " +
                                    std::to_string(expected));
    }
}

const PlayerRegistry& builtin_registry() {
    static const PlayerRegistry registry = [] {
        PlayerRegistry r;
        r.provenance = "built-in";
        r.players = {
            {1, "Mathematician",
             "You are a mathematician, you excel at analyzing problems from a mathematical "
             "logical perspective and arrive at conclusions that align with your values."},
            {2, "Literary scholar",
             "You are a literary scholar who has read a vast array of literary works. Please "
             "consider the problem from the perspective of a literary scholar."},
            {3, "Philosophical",
             "You are a philosopher, your knowledge base includes a wealth of philosophical "
             "knowledge. You enjoy approaching problems from a philosophical perspective and "
             "arriving at conclusions that align with your values."},
            {4, "Geographer",
             "You are a geographer with a deep understanding of geographical knowledge. Please "
             "approach the given problem from the perspective of a geographer."},
        };
        r.validate();
        return r;
    }();
    return registry;
}

PlayerRegistry load_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RegistryError(RegistryError::Code::Parse, "registry: cannot open " + path);
    PlayerRegistry registry;
    registry.provenance = path;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
            PlayerTemplate p;
            p.id = record.at("id").get<int>();
            p.name = record.at("name").get<std::string>();
            p.description = record.at("description").get<std::string>();
            registry.players.push_back(std::move(p));
        } catch (const json::exception& ex) {
            throw RegistryError(RegistryError::Code::Parse,
                                "registry: " + path + ":" + std::to_string(line_no) + ": " +
                                    ex.what());
        }
    }
    registry.validate();
    return registry;
}

void save_registry(const PlayerRegistry& registry, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RegistryError(RegistryError::Code::Parse, "registry: cannot write " + path);
    for (const auto& p : registry.players) {
        json record{{"id", p.id}, {"name", p.name}, {"description", p.description}};
        out << record.dump() << "\n";
    }
}

// ============================================================================
// Rendering
// ============================================================================

namespace {

constexpr std::string_view kPreferenceReasoningTrigger = "Let us think step by step.";
constexpr std::string_view kPreferenceAnswerTrigger =
    "Therefore, the most appropriate player in this game is who? (please direct give us the "
    "number)";

constexpr std::string_view kPreferenceTemplate =
    "Q: Current issue is {query}, and the best player is who? Please give us the number of that "
    "player from the options below:\n{description}\nThere are total {count} players including "
    "{names}. Please point out the most appropriate player for the following task: {query}\n"
    "A: {trigger}";

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

void require_rationale(PromptStage stage, const std::optional<std::string_view>& rationale) {
    if (stage == PromptStage::AnswerExtraction && !rationale)
        throw MissingRationale("render: AnswerExtraction stage requires the prior rationale");
}

}  // namespace

std::string question_block(const Question& question) {
    if (question.text.empty()) throw std::invalid_argument("render: empty question text");
    std::string block = question.text;
    if (question.kind == TaskKind::MultipleChoice) {
        block += "\nAnswer Choices:";
        for (size_t i = 0; i < question.options.size(); ++i) {
            block += "\n(";
            block += static_cast<char>('A' + i);
            block += ") " + question.options[i];
        }
    }
    return block;
}

RenderedPrompt render_direct(const Question& question, const CotTemplate& cot) {
    RenderedPrompt prompt;
    prompt.stage = PromptStage::AnswerExtraction;
    prompt.messages.push_back(
        {Role::User, "Q: " + question_block(question) + "\nA: " + cot.answer_trigger(question.kind)});
    return prompt;
}

RenderedPrompt render_cot(const Question& question, const CotTemplate& cot, PromptStage stage,
                          std::optional<std::string_view> prior_rationale) {
    require_rationale(stage, prior_rationale);
    RenderedPrompt prompt;
    prompt.stage = stage;
    std::string text = "Q: " + question_block(question) + "\nA: " + cot.reasoning_trigger;
    if (stage == PromptStage::AnswerExtraction) {
        text += "\n" + std::string(*prior_rationale) + "\n" + cot.answer_trigger(question.kind);
    }
    prompt.messages.push_back({Role::User, std::move(text)});
    return prompt;
}

RenderedPrompt render_guided(const Question& question, const PlayerTemplate& player,
                             const CotTemplate& cot, PromptStage stage,
                             std::optional<std::string_view> prior_rationale) {
    RenderedPrompt prompt = render_cot(question, cot, stage, prior_rationale);
    if (!player.description.empty()) {
        prompt.messages.insert(prompt.messages.begin(), {Role::System, player.description});
    }
    return prompt;
}

RenderedPrompt render_preference(const Question& question, const PlayerRegistry& registry,
                                 PromptStage stage,
                                 std::optional<std::string_view> prior_rationale) {
    registry.validate();
    require_rationale(stage, prior_rationale);
    if (question.text.empty()) throw std::invalid_argument("render: empty question text");

    std::string description;
    std::string names;
    for (size_t i = 0; i < registry.players.size(); ++i) {
        const auto& p = registry.players[i];
        if (i > 0) {
            description += "\n";
            names += ", ";
        }
        description += std::to_string(p.id) + ". " + p.name + ": " + p.description;
        names += p.name;
    }

    std::string text{kPreferenceTemplate};
    text = replace_all(std::move(text), "{query}", question_block(question));
    text = replace_all(std::move(text), "{description}", description);
    text = replace_all(std::move(text), "{count}", std::to_string(registry.size()));
    text = replace_all(std::move(text), "{names}", names);
    text = replace_all(std::move(text), "{trigger}", kPreferenceReasoningTrigger);
    if (stage == PromptStage::AnswerExtraction) {
        text += "\n" + std::string(*prior_rationale) + "\n" + std::string(kPreferenceAnswerTrigger);
    }

    RenderedPrompt prompt;
    prompt.stage = stage;
    prompt.messages.push_back({Role::User, std::move(text)});
    return prompt;
}

}  // namespace nashcot
