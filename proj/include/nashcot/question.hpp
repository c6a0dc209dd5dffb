#pragma once

#include <string>
#include <vector>

#include "nashcot/answer.hpp"

namespace nashcot {

/// One task instance. For MultipleChoice questions the options list carries
/// the choice texts in letter order (A, B, ...); other kinds leave it empty.
struct Question {
    std::string id;
    std::string text;
    TaskKind kind = TaskKind::FreeForm;
    std::vector<std::string> options;
    CanonicalAnswer gold;

    int option_count() const { return static_cast<int>(options.size()); }

    /// Throws std::invalid_argument on structural violations: empty id/text,
    /// options present iff MultipleChoice, option count in 2..8, gold kind
    /// matching the question kind.
    void validate() const;
};

}  // namespace nashcot
