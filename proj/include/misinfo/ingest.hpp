#pragma once

#include <map>
#include <string>
#include <vector>

#include "misinfo/grader.hpp"
#include "misinfo/item.hpp"

namespace misinfo {

enum class Source { MathQA, MATH, GSM8K, MetaMath };

inline const char* source_name(Source s) {
    switch (s) {
        case Source::MathQA: return "mathqa";
        case Source::MATH: return "math";
        case Source::GSM8K: return "gsm8k";
        case Source::MetaMath: return "metamath";
    }
    return "?";
}

inline Source source_from_name(const std::string& name) {
    if (name == "mathqa") return Source::MathQA;
    if (name == "math") return Source::MATH;
    if (name == "gsm8k") return Source::GSM8K;
    if (name == "metamath") return Source::MetaMath;
    raise(Errc::BadFormat, "unknown source: " + name);
}

struct RawRecord {
    Source source = Source::GSM8K;
    std::map<std::string, std::string> fields;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline const std::string& require_field(const RawRecord& rec, const std::string& name) {
    auto it = rec.fields.find(name);
    if (it == rec.fields.end())
        raise(Errc::MissingColumn, std::string(source_name(rec.source)) +
                                       " record is missing column '" + name + "'");
    return it->second;
}

// Last \boxed{...} content, brace-aware; `rationale` gets every \boxed{X}
// replaced by X.
inline std::string extract_boxed(const std::string& solution, std::string& rationale) {
    std::string answer;
    std::string out;
    std::size_t pos = 0;
    bool found = false;
    while (true) {
        const auto at = solution.find("\\boxed{", pos);
        if (at == std::string::npos) {
            out += solution.substr(pos);
            break;
        }
        out += solution.substr(pos, at - pos);
        std::size_t i = at + 7;
        int depth = 1;
        std::string inner;
        while (i < solution.size() && depth > 0) {
            if (solution[i] == '{') ++depth;
            if (solution[i] == '}') --depth;
            if (depth > 0) inner += solution[i];
            ++i;
        }
        if (depth != 0) raise(Errc::UnbalancedBoxed, "unterminated \\boxed{ in solution");
        out += inner;
        answer = inner;
        found = true;
        pos = i;
    }
    if (!found) raise(Errc::MissingAnswer, "no \\boxed{...} in solution");
    rationale = out;
    return trim(answer);
}

inline std::string strip_operation_tags(const std::string& text,
                                        std::vector<std::string>* operations) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("<<", pos);
        if (open == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        const auto close = text.find(">>", open + 2);
        if (close == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, open - pos);
        if (operations) operations->push_back(text.substr(open + 2, close - open - 2));
        pos = close + 2;
    }
    return out;
}

// MathQA options look like "a ) 38 , b ) 27.675 , c ) none of these".
inline std::map<std::string, std::string> parse_options(const std::string& options) {
    std::map<std::string, std::string> out;
    std::vector<std::pair<char, std::size_t>> markers;
    for (std::size_t i = 0; i < options.size(); ++i) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(options[i])));
        if (c < 'a' || c > 'e') continue;
        if (i > 0 && std::isalnum(static_cast<unsigned char>(options[i - 1]))) continue;
        std::size_t j = i + 1;
        while (j < options.size() && options[j] == ' ') ++j;
        if (j < options.size() && options[j] == ')') markers.push_back({c, i});
    }
    for (std::size_t m = 0; m < markers.size(); ++m) {
        const std::size_t start = options.find(')', markers[m].second) + 1;
        const std::size_t end =
            m + 1 < markers.size() ? markers[m + 1].second : options.size();
        std::string text = trim(options.substr(start, end - start));
        while (!text.empty() && (text.back() == ',' || text.back() == ' ')) text.pop_back();
        out[std::string(1, markers[m].first)] = text;
    }
    return out;
}

}  // namespace detail

struct IngestResult {
    std::string question;
    std::string gold_answer;
    std::string rationale;
    std::vector<std::string> operations;
};

// Maps one raw dataset record to (question, answer, rationale) under the
// per-source column conventions.
inline IngestResult ingest_record(const RawRecord& rec) {
    IngestResult out;
    switch (rec.source) {
        case Source::MathQA: {
            out.question = detail::require_field(rec, "Problem");
            const std::string& label = detail::require_field(rec, "correct");
            const std::string& options = detail::require_field(rec, "options");
            auto parsed = detail::parse_options(options);
            const std::string key = detail::trim(label);
            auto it = parsed.find(detail::lowercase(key));
            if (it == parsed.end())
                raise(Errc::MissingAnswer, "correct label '" + label + "' not among options");
            out.gold_answer = it->second;
            const auto numbers = extract_numbers(normalize(out.gold_answer));
            if (numbers.size() != 1)
                raise(Errc::AmbiguousAnswer,
                      "option text '" + out.gold_answer + "' is not a single number");
            if (auto r = rec.fields.find("Rationale"); r != rec.fields.end())
                out.rationale = r->second;
            return out;
        }
        case Source::MATH: {
            out.question = detail::require_field(rec, "problem");
            const std::string& solution = detail::require_field(rec, "solution");
            out.gold_answer = detail::extract_boxed(solution, out.rationale);
            return out;
        }
        case Source::GSM8K: {
            out.question = detail::require_field(rec, "question");
            const std::string& answer = detail::require_field(rec, "answer");
            const auto at = answer.find("\n####");
            if (at == std::string::npos)
                raise(Errc::MissingAnswer, "no '\\n####' delimiter in answer");
            out.gold_answer = detail::trim(answer.substr(at + 5));
            out.rationale = detail::strip_operation_tags(answer.substr(0, at), &out.operations);
            return out;
        }
        case Source::MetaMath: {
            out.question = detail::require_field(rec, "query");
            const std::string& response = detail::require_field(rec, "response");
            std::string type;
            if (auto t = rec.fields.find("type"); t != rec.fields.end())
                type = detail::lowercase(t->second);
            const bool math_style = type.find("math") != std::string::npos;
            const bool gsm_style = type.find("gsm") != std::string::npos;
            if (math_style || (!gsm_style && response.find("\\boxed{") != std::string::npos)) {
                out.gold_answer = detail::extract_boxed(response, out.rationale);
                return out;
            }
            const auto at = response.find("The answer is:");
            if (at == std::string::npos)
                raise(Errc::MissingAnswer, "no 'The answer is:' delimiter in response");
            out.gold_answer = detail::trim(response.substr(at + 14));
            out.rationale = detail::strip_operation_tags(response.substr(0, at), &out.operations);
            return out;
        }
    }
    raise(Errc::BadFormat, "unreachable source");
}

// Step count of a reference rationale: numbered lines when present, sentences
// otherwise.
inline int count_rationale_steps(const std::string& rationale) {
    int numbered = 0;
    std::size_t pos = 0;
    while (pos <= rationale.size()) {
        std::size_t eol = rationale.find('\n', pos);
        if (eol == std::string::npos) eol = rationale.size();
        std::size_t i = pos;
        while (i < eol && (rationale[i] == ' ' || rationale[i] == '\t')) ++i;
        std::size_t d = i;
        while (d < eol && std::isdigit(static_cast<unsigned char>(rationale[d]))) ++d;
        if (d > i && d < eol && (rationale[d] == '.' || rationale[d] == ')')) ++numbered;
        if (eol == rationale.size()) break;
        pos = eol + 1;
    }
    if (numbered > 0) return numbered;

    int sentences = 0;
    bool content = false;
    for (std::size_t i = 0; i < rationale.size(); ++i) {
        const char c = rationale[i];
        if (c == '.' || c == '!' || c == '?') {
            const bool boundary = i + 1 >= rationale.size() ||
                                  std::isspace(static_cast<unsigned char>(rationale[i + 1]));
            if (content && boundary) {
                ++sentences;
                content = false;
            }
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            content = true;
        }
    }
    if (content) ++sentences;  // trailing sentence without punctuation
    return sentences;
}

struct DropLog {
    std::string id;
    std::string reason;
};

struct PrefilterResult {
    std::vector<TestItem> kept;
    std::vector<DropLog> dropped;
};

// Removes items whose reference rationale has fewer than `min_steps` steps.
inline PrefilterResult prefilter(const std::vector<TestItem>& items, int min_steps = 5) {
    PrefilterResult out;
    for (const auto& item : items) {
        if (detail::trim(item.rationale).empty()) {
            out.dropped.push_back({item.id, "no_rationale"});
            continue;
        }
        const int steps = count_rationale_steps(item.rationale);
        if (steps < min_steps) {
            out.dropped.push_back(
                {item.id, "fewer_than_" + std::to_string(min_steps) + "_steps (" +
                              std::to_string(steps) + ")"});
            continue;
        }
        out.kept.push_back(item);
    }
    return out;
}

struct IngestBatch {
    std::vector<TestItem> items;
    std::vector<DropLog> dropped;
};

inline IngestBatch ingest_stream(const std::vector<RawRecord>& records) {
    IngestBatch out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RawRecord& rec = records[i];
        std::string id = std::string(source_name(rec.source)) + "-" + std::to_string(i);
        if (auto it = rec.fields.find("id"); it != rec.fields.end() && !it->second.empty())
            id = it->second;
        try {
            IngestResult r = ingest_record(rec);
            TestItem item;
            item.id = id;
            item.source_dataset = source_name(rec.source);
            item.question = r.question;
            item.gold_answer = r.gold_answer;
            item.rationale = r.rationale;
            item.operations = r.operations;
            out.items.push_back(std::move(item));
        } catch (const Error& e) {
            out.dropped.push_back({id, errc_name(e.code())});
        }
    }
    return out;
}

}  // namespace misinfo
