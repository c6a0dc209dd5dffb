#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nashcot/question.hpp"

namespace nashcot {

struct DatasetParseError : std::runtime_error {
    int line = 0;
    DatasetParseError(int line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct GoldUnparsable : std::runtime_error {
    std::vector<std::string> ids;
    explicit GoldUnparsable(std::vector<std::string> bad_ids);
};

/// Dataset format: UTF-8 JSON Lines, one record per question:
///   {"id": str, "question": str, "kind": str?, "choices": [str]?, "gold": str}
/// kind is inferred when absent: choices present -> multiple_choice; gold
/// parses as yes/no -> binary; gold parses as a number -> numeric; otherwise
/// free_form. A kind hint overrides inference for records without an explicit
/// kind field.
std::vector<Question> load_dataset(const std::string& path,
                                   std::optional<TaskKind> kind_hint = std::nullopt);

/// Uniform sample of n questions without replacement, reproducible from the
/// seed (partial Fisher-Yates over a splitmix64 stream). Throws
/// std::invalid_argument when n exceeds the dataset size.
std::vector<Question> sample(const std::vector<Question>& questions, int n, std::uint64_t seed);

}  // namespace nashcot
