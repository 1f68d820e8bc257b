#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "misinfo/decimal.hpp"
#include "misinfo/error.hpp"

namespace misinfo {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

inline const char* op_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "\\times";
        case BinaryOp::Div: return "/";
        case BinaryOp::Pow: return "^";
    }
    return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One node of the supported LaTeX subset. Spans are byte offsets into the
// segment source the node was parsed from ([begin, end)); synthesized nodes
// carry begin == end == 0.
struct Expr {
    enum class Kind { Number, Symbol, Binary, Group, Opaque };

    Kind kind = Kind::Opaque;

    // Number
    double value = 0.0;
    bool is_integer = true;
    std::string raw;  // literal source for Number/Opaque

    // Symbol
    std::string name;

    // Binary
    BinaryOp op = BinaryOp::Add;
    ExprPtr left, right;
    bool frac_form = false;          // written as \frac{..}{..}
    std::size_t op_begin = 0, op_end = 0;  // infix operator token span

    // Group
    ExprPtr inner;

    std::size_t begin = 0, end = 0;
};

inline ExprPtr make_number(double value, bool is_integer) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Number;
    e->value = value;
    e->is_integer = is_integer;
    e->raw = is_integer ? std::to_string(static_cast<long long>(value)) : format_decimal(value);
    return e;
}

inline ExprPtr make_number_raw(double value, bool is_integer, std::string raw) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Number;
    e->value = value;
    e->is_integer = is_integer;
    e->raw = std::move(raw);
    return e;
}

inline ExprPtr make_symbol(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Symbol;
    e->name = std::move(name);
    return e;
}

inline ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Binary;
    e->op = op;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

inline ExprPtr make_group(ExprPtr inner) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Group;
    e->inner = std::move(inner);
    return e;
}

inline ExprPtr make_opaque(std::string raw) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Opaque;
    e->raw = std::move(raw);
    return e;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Number:
            return a.is_integer == b.is_integer && nearly_equal(a.value, b.value, 1e-12);
        case Expr::Kind::Symbol:
            return a.name == b.name;
        case Expr::Kind::Binary:
            return a.op == b.op && structurally_equal(*a.left, *b.left) &&
                   structurally_equal(*a.right, *b.right);
        case Expr::Kind::Group:
            return structurally_equal(*a.inner, *b.inner);
        case Expr::Kind::Opaque:
            return a.raw == b.raw;
    }
    return false;
}

inline bool contains_subtree(const Expr& haystack, const Expr& needle) {
    if (structurally_equal(haystack, needle)) return true;
    switch (haystack.kind) {
        case Expr::Kind::Binary:
            return contains_subtree(*haystack.left, needle) ||
                   contains_subtree(*haystack.right, needle);
        case Expr::Kind::Group:
            return contains_subtree(*haystack.inner, needle);
        default:
            return false;
    }
}

inline bool contains_opaque(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Opaque: return true;
        case Expr::Kind::Binary: return contains_opaque(*e.left) || contains_opaque(*e.right);
        case Expr::Kind::Group: return contains_opaque(*e.inner);
        default: return false;
    }
}

using Bindings = std::map<std::string, double>;

inline double evaluate(const Expr& e, const Bindings& bindings = {}) {
    switch (e.kind) {
        case Expr::Kind::Number:
            return e.value;
        case Expr::Kind::Symbol: {
            auto it = bindings.find(e.name);
            if (it == bindings.end()) raise(Errc::UnboundSymbol, e.name);
            return it->second;
        }
        case Expr::Kind::Group:
            return evaluate(*e.inner, bindings);
        case Expr::Kind::Opaque:
            raise(Errc::OpaquePresent, "cannot evaluate: " + e.raw);
        case Expr::Kind::Binary: {
            const double l = evaluate(*e.left, bindings);
            const double r = evaluate(*e.right, bindings);
            switch (e.op) {
                case BinaryOp::Add: return round_sig(l + r);
                case BinaryOp::Sub: return round_sig(l - r);
                case BinaryOp::Mul: return round_sig(l * r);
                case BinaryOp::Div:
                    if (r == 0.0) raise(Errc::DivisionByZero, "division by zero");
                    return round_sig(l / r);
                case BinaryOp::Pow: return round_sig(std::pow(l, r));
            }
        }
    }
    raise(Errc::OpaquePresent, "unreachable");
}

inline bool is_evaluable(const Expr& e) {
    try {
        evaluate(e);
        return true;
    } catch (const Error&) {
        return false;
    }
}

namespace detail {

inline int precedence(const Expr& e) {
    if (e.kind != Expr::Kind::Binary) return 4;
    switch (e.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 3;
    }
    return 4;
}

inline bool renders_as_frac(const Expr& e) {
    return e.kind == Expr::Kind::Binary && e.op == BinaryOp::Div &&
           e.left->kind == Expr::Kind::Number && e.right->kind == Expr::Kind::Number;
}

// \frac output is self-delimiting, so it binds like an atom.
inline int effective_precedence(const Expr& e) {
    return renders_as_frac(e) ? 4 : precedence(e);
}

}  // namespace detail

// Canonical rendering: \times for Mul, \frac{a}{b} when both Div operands are
// numbers, "/" otherwise. Braces (transparent grouping) are inserted exactly
// where re-parsing would otherwise change the tree shape.
inline std::string render(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Number: return e.raw;
        case Expr::Kind::Symbol:
            if (e.name.size() == 1 && std::isalpha(static_cast<unsigned char>(e.name[0])))
                return e.name;
            return "\\text{" + e.name + "}";
        case Expr::Kind::Group: return "(" + render(*e.inner) + ")";
        case Expr::Kind::Opaque: return e.raw;
        case Expr::Kind::Binary: break;
    }

    if (detail::renders_as_frac(e))
        return "\\frac{" + render(*e.left) + "}{" + render(*e.right) + "}";

    const int prec = detail::precedence(e);
    const bool right_assoc = e.op == BinaryOp::Pow;

    auto wrap = [&](const Expr& child, bool right_side) {
        const int cp = detail::effective_precedence(child);
        bool need = cp < prec;
        if (cp == prec) need = right_assoc ? !right_side : right_side;
        const std::string s = render(child);
        return need ? "{" + s + "}" : s;
    };

    const std::string l = wrap(*e.left, false);
    const std::string r = wrap(*e.right, true);
    if (e.op == BinaryOp::Pow) return l + "^" + r;
    return l + " " + op_symbol(e.op) + " " + r;
}

// ---------------------------------------------------------------------------
// Lexer / parser for the contents of one $...$ segment
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Type {
        Number, Symbol, Plus, Minus, Times, Slash, Caret,
        LParen, RParen, LBrace, RBrace, Frac, Equals, Unsupported,
    };
    Type type;
    std::size_t begin, end;
    double value = 0.0;
    bool is_integer = true;
    std::string text;
};

struct ParseFail {};

inline bool starts_with_at(const std::string& s, std::size_t i, const char* pat) {
    const std::size_t n = std::char_traits<char>::length(pat);
    return s.compare(i, n, pat) == 0;
}

// Numeral with optional thousand separators ("5,600") and decimal part.
// Returns consumed length, or 0 if no numeral starts at i.
inline std::size_t lex_numeral(const std::string& s, std::size_t i, Token& out) {
    std::size_t j = i;
    auto is_digit = [&](std::size_t k) {
        return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]));
    };
    std::size_t int_digits = 0;
    while (is_digit(j)) {
        ++j;
        ++int_digits;
    }
    bool any = int_digits > 0;
    if (any && int_digits <= 3) {
        // comma groups of exactly three digits
        while (j < s.size() && s[j] == ',' && is_digit(j + 1) && is_digit(j + 2) &&
               is_digit(j + 3) && !is_digit(j + 4)) {
            j += 4;
        }
    }
    if (j < s.size() && s[j] == '.' && is_digit(j + 1)) {
        ++j;
        while (is_digit(j)) ++j;
        out.is_integer = false;
    } else if (!any) {
        return 0;
    } else {
        out.is_integer = true;
    }
    if (j == i) return 0;
    out.text = s.substr(i, j - i);
    std::string plain = out.text;
    plain.erase(std::remove(plain.begin(), plain.end(), ','), plain.end());
    out.is_integer = plain.find('.') == std::string::npos;
    out.value = std::strtod(plain.c_str(), nullptr);
    return j - i;
}

inline std::vector<Token> lex_segment(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto push = [&](Token::Type t, std::size_t b, std::size_t e, std::string text = {}) {
        Token tok;
        tok.type = t;
        tok.begin = b;
        tok.end = e;
        tok.text = std::move(text);
        out.push_back(std::move(tok));
    };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token num;
        if (std::size_t len = lex_numeral(s, i, num)) {
            num.type = Token::Type::Number;
            num.begin = i;
            num.end = i + len;
            out.push_back(std::move(num));
            i += len;
            continue;
        }
        if (c == '\\') {
            std::size_t j = i + 1;
            while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
            const std::string cmd = s.substr(i + 1, j - i - 1);
            if (cmd == "times" || cmd == "cdot") {
                push(Token::Type::Times, i, j);
            } else if (cmd == "div") {
                push(Token::Type::Slash, i, j);
            } else if (cmd == "frac") {
                push(Token::Type::Frac, i, j);
            } else if (cmd == "text" && j < s.size() && s[j] == '{') {
                std::size_t k = j + 1;
                int depth = 1;
                while (k < s.size() && depth > 0) {
                    if (s[k] == '{') ++depth;
                    if (s[k] == '}') --depth;
                    ++k;
                }
                if (depth != 0) {
                    push(Token::Type::Unsupported, i, s.size(), s.substr(i));
                    i = s.size();
                    continue;
                }
                Token tok;
                tok.type = Token::Type::Symbol;
                tok.begin = i;
                tok.end = k;
                tok.text = s.substr(j + 1, k - j - 2);
                out.push_back(std::move(tok));
                i = k;
                continue;
            } else {
                push(Token::Type::Unsupported, i, j == i + 1 ? i + 1 : j, s.substr(i, (j == i + 1 ? 1 : j - i)));
                i = (j == i + 1) ? i + 1 : j;
                continue;
            }
            i = j;
            continue;
        }
        if (starts_with_at(s, i, "\xc3\x97")) {  // ×
            push(Token::Type::Times, i, i + 2);
            i += 2;
            continue;
        }
        if (starts_with_at(s, i, "\xe2\x88\x92")) {  // − (U+2212)
            push(Token::Type::Minus, i, i + 3);
            i += 3;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            push(Token::Type::Symbol, i, i + 1, std::string(1, c));
            ++i;
            continue;
        }
        switch (c) {
            case '+': push(Token::Type::Plus, i, i + 1); break;
            case '-': push(Token::Type::Minus, i, i + 1); break;
            case '/': push(Token::Type::Slash, i, i + 1); break;
            case '^': push(Token::Type::Caret, i, i + 1); break;
            case '(': push(Token::Type::LParen, i, i + 1); break;
            case ')': push(Token::Type::RParen, i, i + 1); break;
            case '{': push(Token::Type::LBrace, i, i + 1); break;
            case '}': push(Token::Type::RBrace, i, i + 1); break;
            case '=': push(Token::Type::Equals, i, i + 1); break;
            default: push(Token::Type::Unsupported, i, i + 1, std::string(1, c)); break;
        }
        ++i;
    }
    return out;
}

class SegmentParser {
public:
    SegmentParser(const std::vector<Token>& toks, std::size_t begin, std::size_t end)
        : toks_(toks), pos_(begin), end_(end) {}

    ExprPtr parse_all() {
        ExprPtr e = additive();
        if (pos_ != end_) throw ParseFail{};
        return e;
    }

private:
    const std::vector<Token>& toks_;
    std::size_t pos_, end_;

    bool at_end() const { return pos_ >= end_; }
    const Token& peek() const {
        if (at_end()) throw ParseFail{};
        return toks_[pos_];
    }
    const Token& take() {
        if (at_end()) throw ParseFail{};
        return toks_[pos_++];
    }
    bool next_is(Token::Type t) const { return !at_end() && toks_[pos_].type == t; }

    ExprPtr additive() {
        ExprPtr e = multiplicative();
        while (next_is(Token::Type::Plus) || next_is(Token::Type::Minus)) {
            const Token& op = take();
            ExprPtr r = multiplicative();
            auto b = std::make_shared<Expr>();
            b->kind = Expr::Kind::Binary;
            b->op = op.type == Token::Type::Plus ? BinaryOp::Add : BinaryOp::Sub;
            b->left = e;
            b->right = r;
            b->op_begin = op.begin;
            b->op_end = op.end;
            b->begin = e->begin;
            b->end = r->end;
            e = b;
        }
        return e;
    }

    ExprPtr multiplicative() {
        ExprPtr e = power();
        while (next_is(Token::Type::Times) || next_is(Token::Type::Slash)) {
            const Token& op = take();
            ExprPtr r = power();
            auto b = std::make_shared<Expr>();
            b->kind = Expr::Kind::Binary;
            b->op = op.type == Token::Type::Times ? BinaryOp::Mul : BinaryOp::Div;
            b->left = e;
            b->right = r;
            b->op_begin = op.begin;
            b->op_end = op.end;
            b->begin = e->begin;
            b->end = r->end;
            e = b;
        }
        return e;
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (next_is(Token::Type::Caret)) {
            const Token& op = take();
            ExprPtr exp = power();  // right associative
            auto b = std::make_shared<Expr>();
            b->kind = Expr::Kind::Binary;
            b->op = BinaryOp::Pow;
            b->left = base;
            b->right = exp;
            b->op_begin = op.begin;
            b->op_end = op.end;
            b->begin = base->begin;
            b->end = exp->end;
            return b;
        }
        return base;
    }

    ExprPtr primary() {
        const Token& t = peek();
        switch (t.type) {
            case Token::Type::Number: {
                take();
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Number;
                e->value = t.value;
                e->is_integer = t.is_integer;
                e->raw = t.text;
                e->begin = t.begin;
                e->end = t.end;
                return e;
            }
            case Token::Type::Minus: {
                take();
                if (!next_is(Token::Type::Number)) throw ParseFail{};
                const Token& n = take();
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Number;
                e->value = -n.value;
                e->is_integer = n.is_integer;
                e->raw = "-" + n.text;
                e->begin = t.begin;
                e->end = n.end;
                return e;
            }
            case Token::Type::Symbol: {
                take();
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Symbol;
                e->name = t.text;
                e->begin = t.begin;
                e->end = t.end;
                return e;
            }
            case Token::Type::LParen: {
                take();
                ExprPtr inner = additive();
                if (!next_is(Token::Type::RParen)) throw ParseFail{};
                const Token& close = take();
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Group;
                e->inner = inner;
                e->begin = t.begin;
                e->end = close.end;
                return e;
            }
            case Token::Type::LBrace: {  // transparent grouping
                take();
                ExprPtr inner = additive();
                if (!next_is(Token::Type::RBrace)) throw ParseFail{};
                const Token& close = take();
                auto copy = std::make_shared<Expr>(*inner);
                copy->begin = t.begin;
                copy->end = close.end;
                return copy;
            }
            case Token::Type::Frac: {
                take();
                std::size_t num_close = 0, den_close = 0;
                ExprPtr num = braced(num_close);
                ExprPtr den = braced(den_close);
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Binary;
                e->op = BinaryOp::Div;
                e->frac_form = true;
                e->left = num;
                e->right = den;
                e->begin = t.begin;
                e->end = den_close;
                return e;
            }
            default:
                throw ParseFail{};
        }
    }

    // {expr} argument of \frac; inner span excludes the braces.
    ExprPtr braced(std::size_t& close_end) {
        if (!next_is(Token::Type::LBrace)) throw ParseFail{};
        take();
        ExprPtr inner = additive();
        if (!next_is(Token::Type::RBrace)) throw ParseFail{};
        close_end = take().end;
        return inner;
    }
};

}  // namespace detail

// Parsed contents of one $...$ region. `expr` is the whole expression, or the
// left-hand side when a top-level equality is present. Anything after a second
// top-level '=' is kept verbatim in `opaque_tail`.
struct Segment {
    std::size_t begin = 0, end = 0;  // span of the contents within Equation::raw
    ExprPtr expr;
    ExprPtr rhs;
    std::string opaque_tail;

    bool has_relation() const { return rhs != nullptr; }
};

struct Equation {
    std::string raw;
    std::vector<Segment> segments;

    const Segment* relation() const {
        for (const auto& s : segments)
            if (s.has_relation()) return &s;
        return nullptr;
    }

    std::string segment_text(std::size_t i) const {
        const Segment& s = segments.at(i);
        return raw.substr(s.begin, s.end - s.begin);
    }
};

namespace detail {

inline Segment parse_segment_content(const std::string& src) {
    Segment seg;
    const std::vector<Token> toks = lex_segment(src);

    // top-level '=' positions
    std::vector<std::size_t> eq_idx;
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto t = toks[i].type;
        if (t == Token::Type::LParen || t == Token::Type::LBrace) ++depth;
        if (t == Token::Type::RParen || t == Token::Type::RBrace) --depth;
        if (t == Token::Type::Equals && depth == 0) eq_idx.push_back(i);
    }

    auto parse_range = [&](std::size_t b, std::size_t e, std::size_t src_b,
                           std::size_t src_e) -> ExprPtr {
        if (b >= e) {
            auto o = make_opaque(src.substr(src_b, src_e - src_b));
            auto m = std::make_shared<Expr>(*o);
            m->begin = src_b;
            m->end = src_e;
            return m;
        }
        try {
            return SegmentParser(toks, b, e).parse_all();
        } catch (const ParseFail&) {
            std::string slice = src.substr(toks[b].begin, toks[e - 1].end - toks[b].begin);
            auto m = std::make_shared<Expr>();
            m->kind = Expr::Kind::Opaque;
            m->raw = std::move(slice);
            m->begin = toks[b].begin;
            m->end = toks[e - 1].end;
            return m;
        }
    };

    if (eq_idx.empty()) {
        seg.expr = parse_range(0, toks.size(), 0, src.size());
        return seg;
    }

    const std::size_t eq0 = eq_idx[0];
    const std::size_t lhs_src_end = toks[eq0].begin;
    seg.expr = parse_range(0, eq0, 0, lhs_src_end);

    const std::size_t rhs_end_tok = eq_idx.size() > 1 ? eq_idx[1] : toks.size();
    seg.rhs = parse_range(eq0 + 1, rhs_end_tok, toks[eq0].end,
                          rhs_end_tok < toks.size() ? toks[rhs_end_tok].begin : src.size());
    if (eq_idx.size() > 1) {
        seg.opaque_tail = src.substr(toks[eq_idx[1]].begin);
    }
    return seg;
}

}  // namespace detail

// Splits a sentence into $...$ math segments and parses each with the
// supported grammar; unsupported constructs degrade to Opaque nodes.
inline Equation parse_equation(const std::string& text) {
    Equation eq;
    eq.raw = text;

    std::vector<std::size_t> dollars;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '$') continue;
        std::size_t backslashes = 0;
        for (std::size_t j = i; j > 0 && text[j - 1] == '\\'; --j) ++backslashes;
        if (backslashes % 2 == 0) dollars.push_back(i);
    }
    if (dollars.size() % 2 != 0)
        raise(Errc::UnbalancedDollar, "odd number of unescaped '$' in: " + text);

    for (std::size_t k = 0; k + 1 < dollars.size(); k += 2) {
        const std::size_t b = dollars[k] + 1;
        const std::size_t e = dollars[k + 1];
        const std::string inner = text.substr(b, e - b);
        if (inner.find_first_not_of(" \t\r\n") == std::string::npos)
            raise(Errc::EmptySegment, "empty $...$ segment in: " + text);
        Segment seg = detail::parse_segment_content(inner);
        seg.begin = b;
        seg.end = e;
        eq.segments.push_back(std::move(seg));
    }
    return eq;
}

}  // namespace misinfo
