#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nashcot/question.hpp"

namespace nashcot {

// ============================================================================
// Chat message plumbing
// ============================================================================

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct ChatMessage {
    Role role = Role::User;
    std::string text;
};

enum class PromptStage { Reasoning, AnswerExtraction };

/// A fully substituted prompt. The AnswerExtraction stage always embeds the
/// Reasoning stage's completion verbatim.
struct RenderedPrompt {
    std::vector<ChatMessage> messages;
    PromptStage stage = PromptStage::Reasoning;
};

// ============================================================================
// Templates
// ============================================================================

struct CotTemplate {
    std::string reasoning_trigger = "Let's think step by step.";
    std::string numeric_trigger = "Therefore, the answer (arabic numerals) is";
    std::string choice_trigger = "Therefore, the answer (one option letter) is";
    std::string binary_trigger = "Therefore, the answer (Yes or No) is";
    std::string freeform_trigger = "Therefore, the answer is";

    const std::string& answer_trigger(TaskKind kind) const;
    void validate() const;  // throws std::invalid_argument on empty triggers
};

/// One selectable persona. Ids are contiguous 1..N within a registry so the
/// preference prompt can ask for "the number of that player".
struct PlayerTemplate {
    int id = 0;
    std::string name;
    std::string description;
};

struct RegistryError : std::runtime_error {
    enum class Code { Parse, DuplicateId, Empty };
    Code code;
    RegistryError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct PlayerRegistry {
    std::vector<PlayerTemplate> players;
    std::string provenance = "built-in";

    int size() const { return static_cast<int>(players.size()); }
    const PlayerTemplate& by_id(int id) const;  // throws std::out_of_range

    /// Derived registry with one persona removed (ablation support); ids are
    /// renumbered to stay contiguous. Throws RegistryError when the name is
    /// unknown or the result would be empty.
    PlayerRegistry without(std::string_view name) const;

    /// Throws RegistryError: Empty, DuplicateId, or Parse for non-contiguous
    /// ids / duplicate names / blank fields.
    void validate() const;
};

/// The four personas that ship as the default registry.
const PlayerRegistry& builtin_registry();

/// Registry file format: UTF-8 JSON Lines, one object per template with
/// fields {"id": int, "name": str, "description": str}.
PlayerRegistry load_registry(const std::string& path);
void save_registry(const PlayerRegistry& registry, const std::string& path);

// ============================================================================
// Rendering
// ============================================================================

/// Question text plus enumerated answer choices for MultipleChoice kinds.
std::string question_block(const Question& question);

struct MissingRationale : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Single-stage prompt that goes straight to the answer trigger (the
/// no-reasoning baseline).
RenderedPrompt render_direct(const Question& question, const CotTemplate& cot = {});

/// Two-stage chain-of-thought prompt. The AnswerExtraction stage requires the
/// Reasoning stage completion as prior_rationale (else MissingRationale).
RenderedPrompt render_cot(const Question& question, const CotTemplate& cot, PromptStage stage,
                          std::optional<std::string_view> prior_rationale = std::nullopt);

/// render_cot with the persona description prepended as the system message.
/// An empty description renders identically to render_cot.
RenderedPrompt render_guided(const Question& question, const PlayerTemplate& player,
                             const CotTemplate& cot, PromptStage stage,
                             std::optional<std::string_view> prior_rationale = std::nullopt);

/// The player-selection prompt: enumerates the registry and asks for the
/// number of the most appropriate player. Throws RegistryError on an empty
/// registry; MissingRationale as render_cot.
RenderedPrompt render_preference(const Question& question, const PlayerRegistry& registry,
                                 PromptStage stage,
                                 std::optional<std::string_view> prior_rationale = std::nullopt);

}  // namespace nashcot
