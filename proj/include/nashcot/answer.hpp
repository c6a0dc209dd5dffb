#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nashcot {

// ============================================================================
// Task taxonomy and canonical answers
// ============================================================================

enum class TaskKind { Numeric, MultipleChoice, Binary, FreeForm };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view name);

/// A normalized answer payload. All voting and equilibrium membership tests
/// compare these through canonical_equal(), never through raw strings.
///
/// Normal forms per kind:
///   Numeric        exact decimal string: optional '-', no leading zeros,
///                  no trailing fractional zeros ("18.5", "0.5", "-3", "0")
///   MultipleChoice single uppercase option letter ("A".."H")
///   Binary         "yes" | "no"
///   FreeForm       lowercased, whitespace-collapsed, terminal punctuation
///                  stripped
struct CanonicalAnswer {
    TaskKind kind = TaskKind::FreeForm;
    std::string value;
};

/// Normalize a raw payload for the given kind. Returns nullopt when the raw
/// text holds no valid payload for that kind. Idempotent over its own output:
/// canonicalize(kind, a.value) == a for every answer it produces.
std::optional<CanonicalAnswer> canonicalize(TaskKind kind, std::string_view raw);

struct KindMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Answer equality: identical kind and value, except Numeric where values
/// within relative tolerance 1e-6 (absolute 1e-9 near zero) compare equal.
/// Both bounds are exclusive; the comparison is exact decimal arithmetic,
/// never floating point. Throws KindMismatch when kinds differ.
bool canonical_equal(const CanonicalAnswer& a, const CanonicalAnswer& b);

/// Exclusive-boundary tolerance test on two numeric canonical values:
/// |a - b| < max(1e-9, 1e-6 * max(|a|, |b|)).
bool numeric_within_tolerance(std::string_view a, std::string_view b);

// ============================================================================
// Extraction
// ============================================================================

enum class ExtractStatus { Ok, NoAnswerFound, OptionOutOfRange };

std::string_view to_string(ExtractStatus status);

/// Outcome of parsing one completion. A failed extraction is an abstention:
/// it carries its status and is excluded from frequency counts downstream,
/// never silently dropped.
struct Extraction {
    ExtractStatus status = ExtractStatus::NoAnswerFound;
    std::optional<CanonicalAnswer> answer;  // engaged iff status == Ok

    bool ok() const { return status == ExtractStatus::Ok; }
};

enum class FallbackPolicy {
    LastMatch,  // no cue matched: take the last answer-like token anywhere
    Fail,       // no cue matched: NoAnswerFound
};

struct ExtractionRule {
    TaskKind kind = TaskKind::FreeForm;
    std::vector<std::string> cues;  // ordered anchor phrases, matched case-insensitively
    FallbackPolicy fallback = FallbackPolicy::LastMatch;
};

const ExtractionRule& default_rule(TaskKind kind);

/// Parse a raw completion into a CanonicalAnswer. Takes the LAST answer-like
/// token following the LAST cue phrase; with no cue match, falls back per the
/// rule's policy. Never throws on arbitrary input text; throws
/// std::invalid_argument only on contract violations (empty text, option
/// count not matching the kind).
Extraction extract(std::string_view text, TaskKind kind,
                   std::optional<int> option_count = std::nullopt);

Extraction extract_with_rule(std::string_view text, const ExtractionRule& rule,
                             std::optional<int> option_count = std::nullopt);

}  // namespace nashcot
