#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "misinfo/expr.hpp"
#include "misinfo/rng.hpp"

namespace misinfo {

enum class PerturbKind { ValueMod, OperatorAlt, OperandSwap };

inline const char* perturb_kind_name(PerturbKind k) {
    switch (k) {
        case PerturbKind::ValueMod: return "value";
        case PerturbKind::OperatorAlt: return "op";
        case PerturbKind::OperandSwap: return "swap";
    }
    return "?";
}

struct ValueModDetail {
    double old_value = 0.0, new_value = 0.0;
    std::string old_raw, new_raw;
    bool digit_edit = false;
};

struct OperatorAltDetail {
    BinaryOp from = BinaryOp::Add, to = BinaryOp::Add;
    std::string left, right;
};

struct OperandSwapDetail {
    std::string a, b;
};

struct PerturbationRecord {
    PerturbKind kind = PerturbKind::ValueMod;
    Equation original;
    Equation perturbed;
    std::vector<std::string> edit_lines;
    std::uint64_t seed = 0;
    std::variant<ValueModDetail, OperatorAltDetail, OperandSwapDetail> detail;
    std::size_t mutated_segment = 0;
    int mutated_side = 0;  // 0 = expr/lhs, 1 = rhs
};

namespace detail {

struct NodeSite {
    std::size_t segment = 0;
    int side = 0;
    const Expr* node = nullptr;
    const Expr* parent = nullptr;  // Binary or Group parent, null at side root
    bool right_child = false;
};

template <typename Pred>
inline void collect_in_tree(const Expr& e, const Expr* parent, bool right_child,
                            std::size_t seg, int side, const Pred& pred,
                            std::vector<NodeSite>& out) {
    if (pred(e)) out.push_back({seg, side, &e, parent, right_child});
    if (e.kind == Expr::Kind::Binary) {
        collect_in_tree(*e.left, &e, false, seg, side, pred, out);
        collect_in_tree(*e.right, &e, true, seg, side, pred, out);
    } else if (e.kind == Expr::Kind::Group) {
        collect_in_tree(*e.inner, &e, false, seg, side, pred, out);
    }
}

template <typename Pred>
inline std::vector<NodeSite> collect_sites(const Equation& eq, const Pred& pred) {
    std::vector<NodeSite> out;
    for (std::size_t i = 0; i < eq.segments.size(); ++i) {
        const Segment& s = eq.segments[i];
        collect_in_tree(*s.expr, nullptr, false, i, 0, pred, out);
        if (s.rhs) collect_in_tree(*s.rhs, nullptr, false, i, 1, pred, out);
    }
    return out;
}

// Splice `replacement` over the node's source span and re-parse.
inline Equation splice(const Equation& eq, const NodeSite& site, const std::string& replacement) {
    const Segment& seg = eq.segments[site.segment];
    const std::size_t b = seg.begin + site.node->begin;
    const std::size_t e = seg.begin + site.node->end;
    return parse_equation(eq.raw.substr(0, b) + replacement + eq.raw.substr(e));
}

// Whether a spliced subtree of the given precedence must be brace-wrapped to
// keep its shape under the parent context.
inline bool needs_brace(const NodeSite& site, const Expr& replacement_shape) {
    const Expr* p = site.parent;
    if (!p) return false;
    if (p->kind == Expr::Kind::Group) return false;
    if (p->kind != Expr::Kind::Binary) return false;
    if (p->frac_form) return false;  // \frac arguments are already braced
    const int cp = effective_precedence(replacement_shape);
    const int pp = precedence(*p);
    if (cp < pp) return true;
    if (cp == pp) return p->op == BinaryOp::Pow ? !site.right_child : site.right_child;
    return false;
}

inline bool numeral_valid(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = 0;
    std::size_t int_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++i;
        ++int_digits;
    }
    if (int_digits == 0) return false;
    if (s[0] == '0' && int_digits > 1) return false;  // leading zero
    if (i == s.size()) return true;
    if (s[i] != '.') return false;
    ++i;
    if (i == s.size()) return false;
    while (i < s.size()) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        ++i;
    }
    return true;
}

}  // namespace detail

inline bool eligible_for(const Equation& eq, PerturbKind kind) {
    switch (kind) {
        case PerturbKind::ValueMod:
            return !detail::collect_sites(eq, [](const Expr& e) {
                        return e.kind == Expr::Kind::Number;
                    }).empty();
        case PerturbKind::OperatorAlt:
            return !detail::collect_sites(eq, [](const Expr& e) {
                        return e.kind == Expr::Kind::Binary && e.op != BinaryOp::Pow;
                    }).empty();
        case PerturbKind::OperandSwap:
            return !detail::collect_sites(eq, [](const Expr& e) {
                        return e.kind == Expr::Kind::Binary &&
                               render(*e.left) != render(*e.right);
                    }).empty();
    }
    return false;
}

// Mutates one number: 20% digit insertion/deletion, 80% scaling by a factor in
// [0.9, 1.1] \ {1.0}; integers stay integers and decimals keep their written
// number of places.
inline PerturbationRecord perturb_value(const Equation& eq, Rng& rng) {
    auto sites = detail::collect_sites(
        eq, [](const Expr& e) { return e.kind == Expr::Kind::Number; });
    if (sites.empty()) raise(Errc::NoNumbers, "equation has no number node: " + eq.raw);
    const detail::NodeSite site = sites[rng.uniform_index(sites.size())];
    const Expr& node = *site.node;

    const bool negative = !node.raw.empty() && node.raw[0] == '-';
    std::string digits = node.raw.substr(negative ? 1 : 0);
    digits.erase(std::remove(digits.begin(), digits.end(), ','), digits.end());
    const double old_value = node.value;

    ValueModDetail det;
    det.old_value = old_value;
    det.old_raw = node.raw;

    bool take_digit_branch = rng.bernoulli(0.2);
    std::string new_digits;

    if (!take_digit_branch) {
        det.digit_edit = false;
        bool done = false;
        for (int attempt = 0; attempt < 64 && !done; ++attempt) {
            double factor = rng.uniform_real(0.9, 1.1);
            while (factor == 1.0) factor = rng.uniform_real(0.9, 1.1);
            if (node.is_integer) {
                const long long v = std::llround(old_value * factor);
                if (static_cast<double>(v) == old_value) continue;
                new_digits = std::to_string(std::llabs(v));
                det.new_value = static_cast<double>(v);
            } else {
                const int places = decimal_places_of(digits);
                const double v = round_places(old_value * factor, places);
                if (v == old_value) continue;
                new_digits = format_places(std::fabs(v), places);
                det.new_value = v;
            }
            done = true;
        }
        if (!done) take_digit_branch = true;  // e.g. value 0: scaling cannot move it
    }

    if (take_digit_branch) {
        det.digit_edit = true;
        std::size_t digit_count = 0;
        for (char c : digits)
            if (std::isdigit(static_cast<unsigned char>(c))) ++digit_count;

        const bool try_delete = digit_count >= 2 && rng.bernoulli(0.5);
        bool done = false;
        if (try_delete) {
            std::vector<std::string> candidates;
            for (std::size_t p = 0; p < digits.size(); ++p) {
                if (!std::isdigit(static_cast<unsigned char>(digits[p]))) continue;
                std::string cand = digits;
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(p));
                if (!detail::numeral_valid(cand)) continue;
                if (std::strtod(cand.c_str(), nullptr) == std::fabs(old_value)) continue;
                candidates.push_back(std::move(cand));
            }
            if (!candidates.empty()) {
                new_digits = candidates[rng.uniform_index(candidates.size())];
                done = true;
            }
        }
        for (int attempt = 0; attempt < 200 && !done; ++attempt) {
            const std::size_t pos = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(digits.size())));
            const char d = static_cast<char>('0' + rng.uniform_int(0, 9));
            std::string cand = digits;
            cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(pos), d);
            if (!detail::numeral_valid(cand)) continue;
            if (std::strtod(cand.c_str(), nullptr) == std::fabs(old_value)) continue;
            new_digits = cand;
            done = true;
        }
        if (!done) raise(Errc::NoNumbers, "could not produce a digit edit for: " + node.raw);
        const double mag = std::strtod(new_digits.c_str(), nullptr);
        det.new_value = negative ? -mag : mag;
    }

    det.new_raw = (negative ? "-" : "") + new_digits;

    PerturbationRecord rec;
    rec.kind = PerturbKind::ValueMod;
    rec.original = eq;
    rec.perturbed = detail::splice(eq, site, det.new_raw);
    rec.edit_lines = {"change the value " + det.old_raw + " to " + det.new_raw};
    rec.detail = det;
    rec.mutated_segment = site.segment;
    rec.mutated_side = site.side;
    return rec;
}

// Replaces one binary operator (+, -, \times, /) with a different one drawn
// uniformly from the same set.
inline PerturbationRecord perturb_operator(const Equation& eq, Rng& rng) {
    auto sites = detail::collect_sites(eq, [](const Expr& e) {
        return e.kind == Expr::Kind::Binary && e.op != BinaryOp::Pow;
    });
    if (sites.empty()) raise(Errc::NoBinaryOps, "no alterable binary operator in: " + eq.raw);
    const detail::NodeSite site = sites[rng.uniform_index(sites.size())];
    const Expr& node = *site.node;

    static const BinaryOp kOps[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div};
    std::vector<BinaryOp> others;
    for (BinaryOp o : kOps)
        if (o != node.op) others.push_back(o);
    const BinaryOp to = others[rng.uniform_index(others.size())];

    OperatorAltDetail det;
    det.from = node.op;
    det.to = to;
    det.left = render(*node.left);
    det.right = render(*node.right);

    PerturbationRecord rec;
    rec.kind = PerturbKind::OperatorAlt;
    rec.original = eq;

    const bool same_level = (node.op == BinaryOp::Add || node.op == BinaryOp::Sub) ==
                            (to == BinaryOp::Add || to == BinaryOp::Sub);
    if (!node.frac_form && same_level && to != BinaryOp::Div) {
        // swap just the operator token, keeping operand text untouched
        const Segment& seg = eq.segments[site.segment];
        const std::size_t b = seg.begin + node.op_begin;
        const std::size_t e = seg.begin + node.op_end;
        rec.perturbed = parse_equation(eq.raw.substr(0, b) + op_symbol(to) + eq.raw.substr(e));
    } else {
        std::string repl;
        auto shape = make_binary(to, node.left, node.right);
        if (to == BinaryOp::Div) {
            repl = "\\frac{" + render(*node.left) + "}{" + render(*node.right) + "}";
        } else {
            repl = render(*shape);
            if (detail::needs_brace(site, *shape)) repl = "{" + repl + "}";
        }
        rec.perturbed = detail::splice(eq, site, repl);
    }

    rec.edit_lines = {"change the operator from " + std::string(op_symbol(det.from)) + " to " +
                      op_symbol(det.to) + " between " + det.left + " and " + det.right};
    rec.detail = det;
    rec.mutated_segment = site.segment;
    rec.mutated_side = site.side;
    return rec;
}

// Swaps the two operands of one binary node whose operands differ.
inline PerturbationRecord perturb_operands(const Equation& eq, Rng& rng) {
    auto sites = detail::collect_sites(eq, [](const Expr& e) {
        return e.kind == Expr::Kind::Binary && render(*e.left) != render(*e.right);
    });
    if (sites.empty())
        raise(Errc::NoSwappableNode, "no binary node with distinct operands in: " + eq.raw);
    const detail::NodeSite site = sites[rng.uniform_index(sites.size())];
    const Expr& node = *site.node;
    const Segment& seg = eq.segments[site.segment];

    // reorder the source slices so operator text and spacing survive
    const std::string& raw = eq.raw;
    const std::size_t nb = seg.begin + node.begin, ne = seg.begin + node.end;
    const std::size_t lb = seg.begin + node.left->begin, le = seg.begin + node.left->end;
    const std::size_t rb = seg.begin + node.right->begin, re = seg.begin + node.right->end;
    const std::string swapped = raw.substr(nb, lb - nb) + raw.substr(rb, re - rb) +
                                raw.substr(le, rb - le) + raw.substr(lb, le - lb) +
                                raw.substr(re, ne - re);

    OperandSwapDetail det;
    det.a = render(*node.left);
    det.b = render(*node.right);

    PerturbationRecord rec;
    rec.kind = PerturbKind::OperandSwap;
    rec.original = eq;
    rec.perturbed = parse_equation(raw.substr(0, nb) + swapped + raw.substr(ne));
    rec.edit_lines = {"swap the operands " + det.a + " and " + det.b};
    rec.detail = det;
    rec.mutated_segment = site.segment;
    rec.mutated_side = site.side;
    return rec;
}

namespace detail {

// The perturbation must change the value of whatever it touched, whenever that
// can be checked numerically.
inline bool guard_ok(const PerturbationRecord& rec) {
    if (rec.mutated_segment >= rec.original.segments.size() ||
        rec.mutated_segment >= rec.perturbed.segments.size())
        return true;
    const Segment& os = rec.original.segments[rec.mutated_segment];
    const Segment& ps = rec.perturbed.segments[rec.mutated_segment];
    const Expr* oe = rec.mutated_side == 1 ? os.rhs.get() : os.expr.get();
    const Expr* pe = rec.mutated_side == 1 ? ps.rhs.get() : ps.expr.get();
    if (!oe || !pe) return true;
    try {
        const double ov = evaluate(*oe);
        const double pv = evaluate(*pe);
        return !nearly_equal(ov, pv, 1e-12);
    } catch (const Error&) {
        return true;  // symbols or opaque parts: nothing to compare
    }
}

}  // namespace detail

// Applies one perturbation of a kind drawn uniformly from `allowed`, falling
// back in the fixed order value -> op -> swap when the drawn kind has no
// eligible site, and resampling up to 20 times until the semantic guard holds.
inline PerturbationRecord perturb(const Equation& eq, const std::vector<PerturbKind>& allowed,
                                  std::uint64_t seed) {
    if (allowed.empty()) raise(Errc::NoEligibleKind, "no perturbation kinds allowed");
    Rng rng(seed);

    static const PerturbKind kOrder[] = {PerturbKind::ValueMod, PerturbKind::OperatorAlt,
                                         PerturbKind::OperandSwap};
    std::vector<PerturbKind> choices;
    for (PerturbKind k : kOrder)
        if (std::find(allowed.begin(), allowed.end(), k) != allowed.end()) choices.push_back(k);
    if (choices.empty()) raise(Errc::NoEligibleKind, "no recognized kinds allowed");

    bool any_eligible = false;
    for (PerturbKind k : choices) any_eligible = any_eligible || eligible_for(eq, k);
    if (!any_eligible) raise(Errc::NoEligibleKind, "no eligible perturbation for: " + eq.raw);

    // Each resample re-draws the kind: a draw whose every outcome is value
    // preserving (e.g. swapping the operands of a product) must not starve the
    // guard when another kind can produce a genuine error.
    for (int attempt = 0; attempt < 20; ++attempt) {
        PerturbKind kind = choices[rng.uniform_index(choices.size())];
        if (!eligible_for(eq, kind)) {
            for (PerturbKind k : choices) {
                if (eligible_for(eq, k)) {
                    kind = k;
                    break;
                }
            }
        }
        PerturbationRecord rec;
        switch (kind) {
            case PerturbKind::ValueMod: rec = perturb_value(eq, rng); break;
            case PerturbKind::OperatorAlt: rec = perturb_operator(eq, rng); break;
            case PerturbKind::OperandSwap: rec = perturb_operands(eq, rng); break;
        }
        if (detail::guard_ok(rec)) {
            rec.seed = seed;
            return rec;
        }
    }
    raise(Errc::GuardExhausted, "semantic guard failed after 20 resamples for: " + eq.raw);
}

// Same-kind multi-edit: applies `edits` perturbations in sequence and collects
// every edit line into one record.
inline PerturbationRecord perturb_multi(const Equation& eq,
                                        const std::vector<PerturbKind>& allowed, int edits,
                                        std::uint64_t seed) {
    PerturbationRecord rec = perturb(eq, allowed, seed);
    for (int i = 1; i < edits; ++i) {
        try {
            PerturbationRecord next =
                perturb(rec.perturbed, {rec.kind}, derive_seed(seed, static_cast<std::uint64_t>(i)));
            rec.perturbed = next.perturbed;
            rec.edit_lines.insert(rec.edit_lines.end(), next.edit_lines.begin(),
                                  next.edit_lines.end());
        } catch (const Error&) {
            break;  // fewer eligible sites than requested edits
        }
    }
    return rec;
}

// Reproduces the edit-instruction prompt for the record's kind; the user text
// is the original sentence the edits apply to.
inline std::pair<std::string, std::string> emit_edit_prompt(const PerturbationRecord& rec) {
    std::string header = "You are given a sentence that may contain some LaTeX expressions. ";
    switch (rec.kind) {
        case PerturbKind::ValueMod:
            header += "You are required to ONLY change the values with minimal text changes as follows:";
            break;
        case PerturbKind::OperatorAlt:
            header += "You are required to ONLY change the operators with minimal text changes as follows:";
            break;
        case PerturbKind::OperandSwap:
            header += "You are required to ONLY swap the operands with minimal text changes as follows:";
            break;
    }
    std::string system = header;
    for (const auto& line : rec.edit_lines) system += "\n\n" + line;
    system += "\n\nReturn the new sentence only.";
    return {system, rec.original.raw};
}

}  // namespace misinfo
