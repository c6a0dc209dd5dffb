#include "nashcot/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nashcot {

using nlohmann::json;

GoldUnparsable::GoldUnparsable(std::vector<std::string> bad_ids)
    : std::runtime_error([&] {
          std::string msg = "gold answers unparsable for ids:";
          for (const auto& id : bad_ids) msg += " " + id;
          return msg;
      }()),
      ids(std::move(bad_ids)) {}

namespace {

TaskKind infer_kind(const json& record) {
    if (record.contains("choices")) return TaskKind::MultipleChoice;
    std::string gold = record.value("gold", "");
    if (canonicalize(TaskKind::Binary, gold)) return TaskKind::Binary;
    if (canonicalize(TaskKind::Numeric, gold)) return TaskKind::Numeric;
    return TaskKind::FreeForm;
}

}  // namespace

std::vector<Question> load_dataset(const std::string& path, std::optional<TaskKind> kind_hint) {
    std::ifstream in(path);
    if (!in) throw DatasetParseError(0, "cannot open " + path);

    std::vector<Question> questions;
    std::set<std::string> seen_ids;
    std::vector<std::string> unparsable_gold;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& ex) {
            throw DatasetParseError(line_no, std::string("invalid JSON: ") + ex.what());
        }
        try {
            Question q;
            q.id = record.at("id").get<std::string>();
            q.text = record.at("question").get<std::string>();
            if (record.contains("kind")) {
                auto kind = task_kind_from_string(record["kind"].get<std::string>());
                if (!kind) throw DatasetParseError(line_no, "unknown kind");
                q.kind = *kind;
            } else if (kind_hint) {
                q.kind = *kind_hint;
            } else {
                q.kind = infer_kind(record);
            }
            if (record.contains("choices")) {
                q.options = record["choices"].get<std::vector<std::string>>();
            }
            std::string gold_raw = record.at("gold").get<std::string>();
            auto gold = canonicalize(q.kind, gold_raw);
            if (!gold) {
                unparsable_gold.push_back(q.id);
                continue;
            }
            q.gold = *gold;
            if (!seen_ids.insert(q.id).second)
                throw DatasetParseError(line_no, "duplicate id " + q.id);
            q.validate();
            questions.push_back(std::move(q));
        } catch (const json::exception& ex) {
            throw DatasetParseError(line_no, std::string("bad record: ") + ex.what());
        } catch (const std::invalid_argument& ex) {
            throw DatasetParseError(line_no, ex.what());
        }
    }
    if (!unparsable_gold.empty()) throw GoldUnparsable(std::move(unparsable_gold));
    return questions;
}

std::vector<Question> sample(const std::vector<Question>& questions, int n, std::uint64_t seed) {
    if (n < 0 || static_cast<size_t>(n) > questions.size())
        throw std::invalid_argument("sample: n exceeds dataset size");

    std::uint64_t state = seed;
    auto next = [&state]() {
        std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };

    std::vector<size_t> indices(questions.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    for (int i = 0; i < n; ++i) {
        size_t j = i + static_cast<size_t>(next() % (indices.size() - i));
        std::swap(indices[i], indices[j]);
    }

    std::vector<Question> picked;
    picked.reserve(n);
    for (int i = 0; i < n; ++i) picked.push_back(questions[indices[i]]);
    return picked;
}

}  // namespace nashcot
