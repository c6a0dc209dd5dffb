#include "nashcot/answer.hpp"

#include <algorithm>
#include <cctype>

namespace nashcot {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alnum(char c) {
    return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](char c) { return lower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// ----------------------------------------------------------------------------
// Exact decimal arithmetic on digit strings. Magnitudes are plain base-10
// digit strings without leading zeros ("0" for zero); scaling by a power of
// ten appends zeros. This keeps the numeric tolerance rule exact for payloads
// of any length.
// ----------------------------------------------------------------------------

struct Decimal {
    bool negative = false;
    std::string digits = "0";  // magnitude, no leading zeros
    int scale = 0;             // value = +/- digits / 10^scale
};

std::string strip_leading_zeros(std::string s) {
    size_t i = 0;
    while (i + 1 < s.size() && s[i] == '0') ++i;
    return s.substr(i);
}

int cmp_mag(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
}

std::string add_mag(const std::string& a, const std::string& b) {
    std::string out;
    out.reserve(std::max(a.size(), b.size()) + 1);
    int carry = 0;
    for (size_t i = 0; i < a.size() || i < b.size() || carry; ++i) {
        int da = i < a.size() ? a[a.size() - 1 - i] - '0' : 0;
        int db = i < b.size() ? b[b.size() - 1 - i] - '0' : 0;
        int s = da + db + carry;
        out.push_back(static_cast<char>('0' + s % 10));
        carry = s / 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// requires a >= b
std::string sub_mag(const std::string& a, const std::string& b) {
    std::string out;
    out.reserve(a.size());
    int borrow = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        int da = a[a.size() - 1 - i] - '0';
        int db = i < b.size() ? b[b.size() - 1 - i] - '0' : 0;
        int s = da - db - borrow;
        borrow = s < 0 ? 1 : 0;
        if (s < 0) s += 10;
        out.push_back(static_cast<char>('0' + s));
    }
    std::reverse(out.begin(), out.end());
    return strip_leading_zeros(out);
}

std::string shl10(std::string s, int k) {
    if (s == "0") return s;
    s.append(static_cast<size_t>(k), '0');
    return s;
}

// Parses a canonical numeric value string. Canonical strings always parse.
std::optional<Decimal> parse_decimal(std::string_view v) {
    Decimal d;
    size_t i = 0;
    if (i < v.size() && (v[i] == '-' || v[i] == '+')) {
        d.negative = v[i] == '-';
        ++i;
    }
    std::string int_part, frac_part;
    while (i < v.size() && is_digit(v[i])) int_part.push_back(v[i++]);
    if (i < v.size() && v[i] == '.') {
        ++i;
        while (i < v.size() && is_digit(v[i])) frac_part.push_back(v[i++]);
    }
    if (i != v.size() || (int_part.empty() && frac_part.empty())) return std::nullopt;
    d.digits = strip_leading_zeros(int_part.empty() ? "0" + frac_part : int_part + frac_part);
    d.scale = static_cast<int>(frac_part.size());
    if (d.digits == "0") d.negative = false;
    return d;
}

// ----------------------------------------------------------------------------
// Canonicalization
// ----------------------------------------------------------------------------

// Accepts an answer-like numeric payload: optional currency sign, optional
// +/-, digits with optional well-formed thousands separators, optional
// fraction, optional %/terminal period. Commas are stripped only when every
// group to the right of one has exactly three digits.
std::optional<std::string> canonical_numeric(std::string_view raw) {
    std::string_view s = trim(raw);
    // leading currency markers (ASCII and common UTF-8 sequences)
    static constexpr std::string_view currencies[] = {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"};
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (auto cur : currencies) {
            if (s.substr(0, cur.size()) == cur) {
                s.remove_prefix(cur.size());
                stripped = true;
            }
        }
    }
    s = trim(s);
    if (s.empty()) return std::nullopt;

    size_t i = 0;
    bool negative = false;
    if (s[i] == '+' || s[i] == '-') {
        negative = s[i] == '-';
        ++i;
    }
    std::string int_digits, frac_digits;
    std::vector<size_t> group_sizes;
    size_t group = 0;
    bool saw_digit = false;
    while (i < s.size() && (is_digit(s[i]) || s[i] == ',')) {
        if (s[i] == ',') {
            if (group == 0) return std::nullopt;
            group_sizes.push_back(group);
            group = 0;
        } else {
            int_digits.push_back(s[i]);
            ++group;
            saw_digit = true;
        }
        ++i;
    }
    if (!group_sizes.empty()) {
        group_sizes.push_back(group);
        for (size_t g = 1; g < group_sizes.size(); ++g)
            if (group_sizes[g] != 3) return std::nullopt;
        if (group_sizes.front() == 0 || group_sizes.front() > 3) return std::nullopt;
    }
    if (i < s.size() && s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1])) {
        ++i;
        while (i < s.size() && is_digit(s[i])) {
            frac_digits.push_back(s[i]);
            ++i;
            saw_digit = true;
        }
    }
    if (!saw_digit) return std::nullopt;
    // tolerated suffixes: percent sign, terminal period
    if (i < s.size() && s[i] == '%') ++i;
    if (i < s.size() && s[i] == '.') ++i;
    if (i != s.size()) return std::nullopt;

    std::string int_norm = strip_leading_zeros(int_digits.empty() ? "0" : int_digits);
    while (!frac_digits.empty() && frac_digits.back() == '0') frac_digits.pop_back();
    std::string out;
    if (negative && !(int_norm == "0" && frac_digits.empty())) out.push_back('-');
    out += int_norm;
    if (!frac_digits.empty()) {
        out.push_back('.');
        out += frac_digits;
    }
    return out;
}

std::optional<std::string> canonical_choice(std::string_view raw) {
    std::string_view s = trim(raw);
    auto is_wrap = [](char c) {
        return c == '(' || c == ')' || c == '[' || c == ']' || c == '.' ||
               c == ':' || c == '*' || c == '\'' || c == '"' || c == ',';
    };
    while (!s.empty() && is_wrap(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_wrap(s.back())) s.remove_suffix(1);
    s = trim(s);
    if (s.empty()) return std::nullopt;
    char c = lower(s.front());
    if (c < 'a' || c > 'h') return std::nullopt;
    if (s.size() > 1 && is_ascii_alnum(s[1])) return std::nullopt;
    return std::string(1, static_cast<char>(c - 'a' + 'A'));
}

std::optional<std::string> canonical_binary(std::string_view raw) {
    std::string s = to_lower_copy(trim(raw));
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == ',')) s.pop_back();
    if (s == "yes") return std::string("yes");
    if (s == "no") return std::string("no");
    return std::nullopt;
}

std::optional<std::string> canonical_freeform(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool in_space = true;  // swallow leading whitespace
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(lower(c));
            in_space = false;
        }
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '.' || out.back() == '!' ||
                            out.back() == '?' || out.back() == ',' || out.back() == ';' ||
                            out.back() == ':')) {
        out.pop_back();
    }
    if (out.empty()) return std::nullopt;
    return out;
}

// ----------------------------------------------------------------------------
// Token scanning over completion text. Byte-oriented; multi-byte UTF-8
// sequences are opaque non-token bytes, so arbitrary input is safe.
// ----------------------------------------------------------------------------

// Numeric literal tokens: optional sign when not preceded by an alphanumeric
// byte, digits with optional 3-digit comma groups, optional fraction, or a
// bare ".5" style fraction.
std::vector<std::string> numeric_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        char c = text[i];
        bool starts_number = is_digit(c);
        bool starts_fraction = c == '.' && i + 1 < n && is_digit(text[i + 1]) &&
                               (i == 0 || !is_ascii_alnum(text[i - 1]));
        if (!starts_number && !starts_fraction) {
            ++i;
            continue;
        }
        size_t start = i;
        std::string int_part, frac_part;
        if (starts_number) {
            size_t group = 0;
            std::vector<size_t> groups;
            while (i < n) {
                if (is_digit(text[i])) {
                    int_part.push_back(text[i]);
                    ++group;
                    ++i;
                } else if (text[i] == ',' && i + 3 < n && is_digit(text[i + 1]) &&
                           is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
                           (i + 4 >= n || !is_digit(text[i + 4]))) {
                    // comma only joins the token for an exact 3-digit group
                    groups.push_back(group);
                    group = 0;
                    ++i;
                } else {
                    break;
                }
            }
            bool grouping_ok = true;
            if (!groups.empty()) {
                groups.push_back(group);
                for (size_t g = 1; g < groups.size(); ++g)
                    if (groups[g] != 3) grouping_ok = false;
                if (groups.front() == 0 || groups.front() > 3) grouping_ok = false;
            }
            if (!grouping_ok) {
                // re-scan without comma joining: consume plain digits only
                i = start;
                int_part.clear();
                while (i < n && is_digit(text[i])) int_part.push_back(text[i++]);
            }
        }
        if (i < n && text[i] == '.' && i + 1 < n && is_digit(text[i + 1])) {
            ++i;
            while (i < n && is_digit(text[i])) frac_part.push_back(text[i++]);
        }
        bool negative = false;
        if (start > 0 && (text[start - 1] == '-' || text[start - 1] == '+')) {
            char before = start >= 2 ? text[start - 2] : ' ';
            if (!is_ascii_alnum(before) && before != '.') negative = text[start - 1] == '-';
        }
        std::string tok = int_part;
        if (!frac_part.empty()) tok += "." + frac_part;
        if (negative) tok.insert(tok.begin(), '-');
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

// Standalone option letters. Uppercase A..H counts anywhere a word boundary
// holds; lowercase a..h only when it touches bracketing or sentence
// punctuation (or ends the text), so prose articles like "a" do not read as
// options.
std::vector<char> letter_tokens(std::string_view text) {
    std::vector<char> tokens;
    const size_t n = text.size();
    for (size_t i = 0; i < n; ++i) {
        char c = text[i];
        bool upper = c >= 'A' && c <= 'H';
        bool lower_case = c >= 'a' && c <= 'h';
        if (!upper && !lower_case) continue;
        char prev = i > 0 ? text[i - 1] : ' ';
        char next = i + 1 < n ? text[i + 1] : ' ';
        if (is_ascii_alnum(prev) || is_ascii_alnum(next)) continue;
        auto is_punct_anchor = [](char p) {
            return p == '(' || p == ')' || p == '[' || p == ']' || p == '.' ||
                   p == ':' || p == ',' || p == '"' || p == '\'';
        };
        if (lower_case && !(is_punct_anchor(prev) || is_punct_anchor(next) || i + 1 == n))
            continue;
        tokens.push_back(static_cast<char>(lower(c) - 'a' + 'A'));
    }
    return tokens;
}

std::vector<std::string> binary_tokens(std::string_view text) {
    std::string low = to_lower_copy(text);
    std::vector<std::pair<size_t, std::string>> ordered;
    for (auto word : {std::string_view("yes"), std::string_view("no")}) {
        size_t pos = 0;
        while ((pos = low.find(word, pos)) != std::string::npos) {
            char prev = pos > 0 ? low[pos - 1] : ' ';
            char next = pos + word.size() < low.size() ? low[pos + word.size()] : ' ';
            if (!is_ascii_alnum(prev) && !is_ascii_alnum(next))
                ordered.emplace_back(pos, std::string(word));
            pos += word.size();
        }
    }
    std::sort(ordered.begin(), ordered.end());
    std::vector<std::string> tokens;
    tokens.reserve(ordered.size());
    for (auto& [pos, w] : ordered) tokens.push_back(w);
    return tokens;
}

// Position one past the end of the last occurrence of any cue phrase,
// matched case-insensitively. npos when none match.
size_t last_cue_end(std::string_view text, const std::vector<std::string>& cues) {
    std::string low = to_lower_copy(text);
    size_t best = std::string::npos;
    for (const auto& cue : cues) {
        std::string c = to_lower_copy(cue);
        if (c.empty()) continue;
        size_t pos = low.rfind(c);
        if (pos == std::string::npos) continue;
        size_t end = pos + c.size();
        if (best == std::string::npos || end > best) best = end;
    }
    return best;
}

std::string_view strip_lead_punct(std::string_view s) {
    size_t i = 0;
    while (i < s.size() && (s[i] == ':' || s[i] == ',' || s[i] == ';' ||
                            std::isspace(static_cast<unsigned char>(s[i]))))
        ++i;
    return s.substr(i);
}

std::string_view last_nonempty_line(std::string_view text) {
    size_t end = text.size();
    while (end > 0) {
        size_t nl = text.rfind('\n', end - 1);
        size_t begin = nl == std::string_view::npos ? 0 : nl + 1;
        std::string_view line = trim(text.substr(begin, end - begin));
        if (!line.empty()) return line;
        if (nl == std::string_view::npos) break;
        end = nl;
    }
    return {};
}

Extraction make_answer(TaskKind kind, std::string_view raw, std::optional<int> option_count) {
    auto canon = canonicalize(kind, raw);
    if (!canon) return {ExtractStatus::NoAnswerFound, std::nullopt};
    if (kind == TaskKind::MultipleChoice) {
        int index = canon->value[0] - 'A';
        if (index >= *option_count) return {ExtractStatus::OptionOutOfRange, std::nullopt};
    }
    return {ExtractStatus::Ok, std::move(canon)};
}

}  // namespace

std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::Numeric: return "numeric";
        case TaskKind::MultipleChoice: return "multiple_choice";
        case TaskKind::Binary: return "binary";
        case TaskKind::FreeForm: return "free_form";
    }
    return "unknown";
}

std::optional<TaskKind> task_kind_from_string(std::string_view name) {
    if (name == "numeric") return TaskKind::Numeric;
    if (name == "multiple_choice") return TaskKind::MultipleChoice;
    if (name == "binary") return TaskKind::Binary;
    if (name == "free_form") return TaskKind::FreeForm;
    return std::nullopt;
}

std::string_view to_string(ExtractStatus status) {
    switch (status) {
        case ExtractStatus::Ok: return "ok";
        case ExtractStatus::NoAnswerFound: return "no_answer_found";
        case ExtractStatus::OptionOutOfRange: return "option_out_of_range";
    }
    return "unknown";
}

std::optional<CanonicalAnswer> canonicalize(TaskKind kind, std::string_view raw) {
    std::optional<std::string> value;
    switch (kind) {
        case TaskKind::Numeric: value = canonical_numeric(raw); break;
        case TaskKind::MultipleChoice: value = canonical_choice(raw); break;
        case TaskKind::Binary: value = canonical_binary(raw); break;
        case TaskKind::FreeForm: value = canonical_freeform(raw); break;
    }
    if (!value) return std::nullopt;
    return CanonicalAnswer{kind, std::move(*value)};
}

bool numeric_within_tolerance(std::string_view a, std::string_view b) {
    auto da = parse_decimal(a);
    auto db = parse_decimal(b);
    if (!da || !db) return false;
    int scale = std::max(da->scale, db->scale);
    std::string ma = shl10(da->digits, scale - da->scale);
    std::string mb = shl10(db->digits, scale - db->scale);
    std::string diff = da->negative == db->negative
                           ? (cmp_mag(ma, mb) >= 0 ? sub_mag(ma, mb) : sub_mag(mb, ma))
                           : add_mag(ma, mb);
    if (diff == "0") return true;
    const std::string& larger = cmp_mag(ma, mb) >= 0 ? ma : mb;
    // relative: |a-b| < 1e-6 * max(|a|,|b|)   <=>  diff * 10^6 < larger
    if (cmp_mag(shl10(diff, 6), larger) < 0) return true;
    // absolute: |a-b| < 1e-9                  <=>  diff * 10^9 < 10^scale
    return cmp_mag(shl10(diff, 9), shl10("1", scale)) < 0;
}

bool canonical_equal(const CanonicalAnswer& a, const CanonicalAnswer& b) {
    if (a.kind != b.kind) {
        throw KindMismatch("canonical_equal: kind mismatch (" + std::string(to_string(a.kind)) +
                           " vs " + std::string(to_string(b.kind)) + ")");
    }
    if (a.value == b.value) return true;
    if (a.kind != TaskKind::Numeric) return false;
    return numeric_within_tolerance(a.value, b.value);
}

const ExtractionRule& default_rule(TaskKind kind) {
    static const ExtractionRule numeric{
        TaskKind::Numeric, {"answer is", "answer:"}, FallbackPolicy::LastMatch};
    static const ExtractionRule choice{
        TaskKind::MultipleChoice, {"answer is", "answer:"}, FallbackPolicy::LastMatch};
    static const ExtractionRule binary{
        TaskKind::Binary, {"answer is", "answer:"}, FallbackPolicy::LastMatch};
    static const ExtractionRule freeform{
        TaskKind::FreeForm, {"answer is", "answer:"}, FallbackPolicy::LastMatch};
    switch (kind) {
        case TaskKind::Numeric: return numeric;
        case TaskKind::MultipleChoice: return choice;
        case TaskKind::Binary: return binary;
        case TaskKind::FreeForm: return freeform;
    }
    return freeform;
}

Extraction extract(std::string_view text, TaskKind kind, std::optional<int> option_count) {
    return extract_with_rule(text, default_rule(kind), option_count);
}

Extraction extract_with_rule(std::string_view text, const ExtractionRule& rule,
                             std::optional<int> option_count) {
    if (text.empty()) throw std::invalid_argument("extract: empty completion text");
    if ((rule.kind == TaskKind::MultipleChoice) != option_count.has_value()) {
        throw std::invalid_argument("extract: option count required iff kind is multiple_choice");
    }
    if (option_count && (*option_count < 2 || *option_count > 8)) {
        throw std::invalid_argument("extract: option count must be in 2..8");
    }

    size_t cue_end = last_cue_end(text, rule.cues);
    const bool cue_found = cue_end != std::string::npos;
    std::string_view region = cue_found ? strip_lead_punct(text.substr(cue_end)) : std::string_view{};

    if (rule.kind == TaskKind::FreeForm) {
        std::string_view candidate =
            cue_found && !trim(region).empty() ? region : last_nonempty_line(text);
        if (!cue_found && rule.fallback == FallbackPolicy::Fail)
            return {ExtractStatus::NoAnswerFound, std::nullopt};
        return make_answer(rule.kind, candidate, option_count);
    }

    auto pick = [&](std::string_view scope) -> Extraction {
        switch (rule.kind) {
            case TaskKind::Numeric: {
                auto toks = numeric_tokens(scope);
                if (toks.empty()) return {ExtractStatus::NoAnswerFound, std::nullopt};
                return make_answer(rule.kind, toks.back(), option_count);
            }
            case TaskKind::MultipleChoice: {
                auto toks = letter_tokens(scope);
                if (toks.empty()) return {ExtractStatus::NoAnswerFound, std::nullopt};
                return make_answer(rule.kind, std::string(1, toks.back()), option_count);
            }
            case TaskKind::Binary: {
                auto toks = binary_tokens(scope);
                if (toks.empty()) return {ExtractStatus::NoAnswerFound, std::nullopt};
                return make_answer(rule.kind, toks.back(), option_count);
            }
            default: return {ExtractStatus::NoAnswerFound, std::nullopt};
        }
    };

    if (cue_found) {
        Extraction found = pick(region);
        if (found.status != ExtractStatus::NoAnswerFound) return found;
    } else if (rule.fallback == FallbackPolicy::Fail) {
        return {ExtractStatus::NoAnswerFound, std::nullopt};
    }
    return pick(text);
}

}  // namespace nashcot
