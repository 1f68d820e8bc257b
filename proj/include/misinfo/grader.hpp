#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "misinfo/decimal.hpp"
#include "misinfo/error.hpp"

namespace misinfo {

struct GradeResult {
    bool correct = false;
    std::optional<double> claim_value;
    std::optional<double> gold_value;
    std::string normalized_claim;
};

inline constexpr const char* kAnswerDelimiter = "The answer is";

namespace detail {

inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
inline bool is_word(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Numeral starting at i: digits with optional single decimal point.
// Returns length, 0 if none.
inline std::size_t numeral_len(const std::string& s, std::size_t i) {
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i) return 0;
    if (j < s.size() && s[j] == '.' && j + 1 < s.size() && is_digit(s[j + 1])) {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
    }
    return j - i;
}

// A '-' attaches to the numeral only when directly adjacent to its first digit
// and not glued to a word character on its left.
inline bool sign_attaches(const std::string& s, std::size_t digit_pos) {
    if (digit_pos == 0 || s[digit_pos - 1] != '-') return false;
    if (digit_pos >= 2 && (is_word(s[digit_pos - 2]) || s[digit_pos - 2] == '.')) return false;
    return true;
}

inline std::string strip_thousand_separators(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_digit(s[i])) {
            std::size_t j = i;
            while (j < s.size() && is_digit(s[j])) ++j;
            std::string run = s.substr(i, j - i);
            if (j - i <= 3 && (i == 0 || !is_digit(s[i - 1]))) {
                std::size_t k = j;
                while (k + 3 < s.size() && s[k] == ',' && is_digit(s[k + 1]) &&
                       is_digit(s[k + 2]) && is_digit(s[k + 3]) &&
                       (k + 4 >= s.size() || !is_digit(s[k + 4]))) {
                    run += s.substr(k + 1, 3);
                    k += 4;
                }
                out += run;
                i = k;
                continue;
            }
            out += run;
            i = j;
            continue;
        }
        out += s[i];
        ++i;
    }
    return out;
}

struct NumTok {
    double value;
    std::size_t begin, end;  // incl. attached sign
};

inline std::vector<NumTok> scan_numbers(const std::string& s) {
    std::vector<NumTok> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        const std::size_t len = numeral_len(s, i);
        std::size_t b = i;
        std::string tok = s.substr(i, len);
        if (sign_attaches(s, i)) {
            b = i - 1;
            tok = "-" + tok;
        }
        out.push_back({std::strtod(tok.c_str(), nullptr), b, i + len});
        i += len;
    }
    return out;
}

inline std::string replace_fractions(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    auto numeral_at = [&](std::size_t p, double& v, std::size_t& len, bool& neg) {
        neg = false;
        std::size_t q = p;
        if (q < s.size() && s[q] == '-') {
            neg = true;
            ++q;
        }
        const std::size_t l = numeral_len(s, q);
        if (l == 0) return false;
        v = std::strtod(s.substr(q, l).c_str(), nullptr);
        if (neg) v = -v;
        len = (q - p) + l;
        return true;
    };

    while (i < s.size()) {
        // \frac{a}{b}
        if (s.compare(i, 6, "\\frac{") == 0) {
            std::size_t p = i + 6;
            double a = 0, b = 0;
            std::size_t la = 0, lb = 0;
            bool na = false, nb = false;
            if (numeral_at(p, a, la, na) && p + la < s.size() && s.compare(p + la, 2, "}{") == 0) {
                std::size_t q = p + la + 2;
                if (numeral_at(q, b, lb, nb) && q + lb < s.size() && s[q + lb] == '}' && b != 0) {
                    out += format_decimal(round_sig(a / b));
                    i = q + lb + 1;
                    continue;
                }
            }
        }
        // a/b with optional spaces around the slash
        if (is_digit(s[i]) || (s[i] == '-' && sign_attaches(s, i + 1) && i + 1 < s.size() &&
                               is_digit(s[i + 1]))) {
            double a = 0;
            std::size_t la = 0;
            bool na = false;
            if (numeral_at(i, a, la, na)) {
                std::size_t p = i + la;
                std::size_t spaces = 0;
                while (p + spaces < s.size() && s[p + spaces] == ' ') ++spaces;
                if (p + spaces < s.size() && s[p + spaces] == '/') {
                    std::size_t q = p + spaces + 1;
                    while (q < s.size() && s[q] == ' ') ++q;
                    double b = 0;
                    std::size_t lb = 0;
                    bool nb = false;
                    if (numeral_len(s, q) > 0 && numeral_at(q, b, lb, nb) && b != 0) {
                        out += format_decimal(round_sig(a / b));
                        i = q + lb;
                        continue;
                    }
                }
                out += s.substr(i, la);
                i += la;
                continue;
            }
        }
        out += s[i];
        ++i;
    }
    return out;
}

inline std::string replace_percentages(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_digit(s[i]) || (s[i] == '-' && i + 1 < s.size() && is_digit(s[i + 1]) &&
                               sign_attaches(s, i + 1))) {
            const std::size_t b = i;
            std::size_t p = s[i] == '-' ? i + 1 : i;
            const std::size_t len = numeral_len(s, p);
            std::size_t q = p + len;
            std::size_t pct = 0;
            if (q < s.size() && s[q] == '%') pct = 1;
            if (q + 1 < s.size() && s[q] == '\\' && s[q + 1] == '%') pct = 2;
            if (len > 0 && pct > 0) {
                const double v = std::strtod(s.substr(b, q - b).c_str(), nullptr);
                out += format_decimal(round_sig(v / 100.0));
                i = q + pct;
                continue;
            }
            out += s.substr(b, q - b);
            i = q;
            continue;
        }
        out += s[i];
        ++i;
    }
    return out;
}

inline std::string collapse_whitespace(const std::string& s) {
    std::string out;
    bool in_space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        out += c;
    }
    return out;
}

}  // namespace detail

// Standardizes an answer string: thousand separators removed, fractions and
// percentages replaced by their decimal value, whitespace runs collapsed.
// Anything that does not parse passes through untouched. Replacement runs to
// a fixpoint so chained forms ("1/2/3", "50%%") cannot survive one call.
inline std::string normalize(const std::string& text) {
    std::string s = detail::strip_thousand_separators(text);
    for (int i = 0; i < 10; ++i) {
        std::string next = detail::replace_percentages(detail::replace_fractions(s));
        if (next == s) break;
        s = std::move(next);
    }
    return detail::collapse_whitespace(s);
}

// All maximal numeric tokens, in order. Expects normalized text.
inline std::vector<double> extract_numbers(const std::string& text) {
    std::vector<double> out;
    for (const auto& t : detail::scan_numbers(text)) out.push_back(t.value);
    return out;
}

// First number after the last occurrence of the delimiter; the last number in
// the text when the delimiter is absent.
inline double extract_final_answer(const std::string& text,
                                   const std::string& delimiter = kAnswerDelimiter) {
    const auto toks = detail::scan_numbers(text);
    const std::size_t at = text.rfind(delimiter);
    if (at != std::string::npos) {
        for (const auto& t : toks) {
            if (t.begin >= at + delimiter.size()) return t.value;
        }
        raise(Errc::NoNumberFound, "no number after delimiter in: " + text);
    }
    if (toks.empty()) raise(Errc::NoNumberFound, "no number in: " + text);
    return toks.back().value;
}

inline bool values_match(double claim, double gold) {
    return std::fabs(claim - gold) <= std::max(1e-6, 1e-4 * std::fabs(gold));
}

// Normalizes both sides, pulls the final answer out of the claim and the
// designated number out of the gold text, and compares within tolerance.
// Extraction failure downgrades to incorrect rather than erroring.
inline GradeResult grade(const std::string& claim, const std::string& gold) {
    GradeResult res;
    res.normalized_claim = normalize(claim);
    const std::string norm_gold = normalize(gold);
    try {
        res.claim_value = extract_final_answer(res.normalized_claim);
    } catch (const Error&) {
    }
    try {
        res.gold_value = extract_final_answer(norm_gold);
    } catch (const Error&) {
    }
    if (res.claim_value && res.gold_value)
        res.correct = values_match(*res.claim_value, *res.gold_value);
    return res;
}

}  // namespace misinfo
