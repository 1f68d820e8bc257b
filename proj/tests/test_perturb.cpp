#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "misinfo/perturb.hpp"

using namespace misinfo;

namespace {

const std::vector<PerturbKind> kAllKinds = {PerturbKind::ValueMod, PerturbKind::OperatorAlt,
                                            PerturbKind::OperandSwap};

bool differs_only_in_segment(const PerturbationRecord& rec) {
    const Segment& seg = rec.original.segments[rec.mutated_segment];
    const std::string& o = rec.original.raw;
    const std::string& p = rec.perturbed.raw;
    const std::size_t suffix_len = o.size() - seg.end;
    if (p.size() < seg.begin + suffix_len) return false;
    return o.compare(0, seg.begin, p, 0, seg.begin) == 0 &&
           o.compare(seg.end, suffix_len, p, p.size() - suffix_len, suffix_len) == 0;
}

}  // namespace

TEST_CASE("value modification: +-10% branch stays in range and preserves type") {
    Equation eq = parse_equation("She bought $100$ apples.");
    int scale_draws = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        PerturbationRecord rec = perturb_value(eq, rng);
        const auto& det = std::get<ValueModDetail>(rec.detail);
        CHECK(det.old_value == 100);
        CHECK(det.new_value != 100);
        if (det.digit_edit) continue;
        ++scale_draws;
        CHECK(det.new_value >= 90);
        CHECK(det.new_value <= 110);
        CHECK(det.new_value == std::floor(det.new_value));  // integer stays integer
    }
    CHECK(scale_draws > 200);
}

TEST_CASE("value modification: digit insertion on a one-digit number") {
    Equation eq = parse_equation("$7 + 1$");
    int digit_draws = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        PerturbationRecord rec = perturb_value(eq, rng);
        const auto& det = std::get<ValueModDetail>(rec.detail);
        if (det.old_raw != "7" || !det.digit_edit) continue;
        ++digit_draws;
        CHECK(det.new_raw.size() == 2);
        CHECK(det.new_raw.find('7') != std::string::npos);
        CHECK(det.new_raw[0] != '0');
    }
    CHECK(digit_draws > 20);
}

TEST_CASE("value modification: decimal keeps its written places and range") {
    Equation eq = parse_equation("Price is $3.50$ per unit.");
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(seed);
        PerturbationRecord rec = perturb_value(eq, rng);
        const auto& det = std::get<ValueModDetail>(rec.detail);
        if (det.digit_edit) continue;
        CHECK(det.new_value >= 3.15);
        CHECK(det.new_value <= 3.85);
        CHECK(det.new_value != 3.50);
        CHECK(decimal_places_of(det.new_raw) == 2);
    }
}

TEST_CASE("value modification requires a number") {
    Equation eq = parse_equation("$x + y$");
    Rng rng(1);
    try {
        perturb_value(eq, rng);
        FAIL("expected NoNumbers");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoNumbers);
    }
}

TEST_CASE("operator alteration maps into the documented codomain") {
    Equation eq = parse_equation("$a + b$");
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        PerturbationRecord rec = perturb_operator(eq, rng);
        seen.insert(rec.perturbed.raw);
    }
    const std::set<std::string> expected = {"$a - b$", "$a \\times b$", "$\\frac{a}{b}$"};
    CHECK(seen == expected);
}

TEST_CASE("operator alteration on a two-operator expression") {
    Equation eq = parse_equation("$2 \\times 3 + 1$");
    // enumerate both nodes x 3 replacements: the output must be one of the 6
    const std::set<std::string> expected = {
        "$2 + 3 + 1$",          "$2 - 3 + 1$",          "$\\frac{2}{3} + 1$",
        "$2 \\times 3 - 1$",    "$2 \\times 3 \\times 1$", "$\\frac{2 \\times 3}{1}$",
    };
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        seen.insert(perturb_operator(eq, rng).perturbed.raw);
    }
    for (const auto& s : seen) CHECK(expected.count(s) == 1);
    CHECK(seen.size() == 6);
}

TEST_CASE("operator alteration ignores exponentiation") {
    Equation eq = parse_equation("$x^2$");
    Rng rng(3);
    try {
        perturb_operator(eq, rng);
        FAIL("expected NoBinaryOps");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoBinaryOps);
    }
}

TEST_CASE("operand swap") {
    Rng rng(11);
    CHECK(perturb_operands(parse_equation("$a - b$"), rng).perturbed.raw == "$b - a$");
    CHECK(perturb_operands(parse_equation("$\\frac{4}{7}$"), rng).perturbed.raw ==
          "$\\frac{7}{4}$");
    try {
        perturb_operands(parse_equation("$x + x$"), rng);
        FAIL("expected NoSwappableNode");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoSwappableNode);
    }
}

TEST_CASE("perturb: ineligible kind set raises") {
    try {
        perturb(parse_equation("$x = y$"), {PerturbKind::ValueMod}, 42);
        FAIL("expected NoEligibleKind");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoEligibleKind);
    }
}

TEST_CASE("perturb: semantic guard forces a different value") {
    Equation eq = parse_equation("$t = 6 \\times 7$");
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        PerturbationRecord rec = perturb(eq, kAllKinds, seed);
        const Segment* rel = rec.perturbed.relation();
        REQUIRE(rel != nullptr);
        const double v = evaluate(*rel->rhs);
        CHECK(v != doctest::Approx(42).epsilon(1e-12));
    }
}

TEST_CASE("perturb is deterministic in the seed") {
    Equation eq = parse_equation("Then $y = 12 + 30$ follows.");
    for (std::uint64_t seed : {1ULL, 77ULL, 999ULL}) {
        PerturbationRecord a = perturb(eq, kAllKinds, seed);
        PerturbationRecord b = perturb(eq, kAllKinds, seed);
        CHECK(a.kind == b.kind);
        CHECK(a.perturbed.raw == b.perturbed.raw);
        CHECK(a.edit_lines == b.edit_lines);
        CHECK(a.seed == seed);
    }
}

TEST_CASE("perturb falls back over kinds in fixed order") {
    // no numbers: a draw of ValueMod must fall back to an eligible kind
    Equation eq = parse_equation("$a + b$");
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        PerturbationRecord rec = perturb(eq, kAllKinds, seed);
        CHECK(rec.kind != PerturbKind::ValueMod);
    }
}

TEST_CASE("type preservation over many draws") {
    Equation ints = parse_equation("$y = 128 + 37$");
    Equation decs = parse_equation("$y = 12.25 + 3.7$");
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng r1(seed), r2(seed);
        const auto& a = std::get<ValueModDetail>(perturb_value(ints, r1).detail);
        CHECK(a.new_value == std::floor(a.new_value));
        CHECK(a.new_raw.find('.') == std::string::npos);
        const auto& b = std::get<ValueModDetail>(perturb_value(decs, r2).detail);
        CHECK(b.new_raw.find('.') != std::string::npos);
    }
}

TEST_CASE("digit/scale branch split is close to 20/80") {
    Equation eq = parse_equation("$y = 128 + 37$");
    int digit = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        if (std::get<ValueModDetail>(perturb_value(eq, rng).detail).digit_edit) ++digit;
    }
    const double freq = static_cast<double>(digit) / n;
    CHECK(freq >= 0.18);
    CHECK(freq <= 0.22);
}

TEST_CASE("kind frequencies are uniform over a large corpus (chi-square)") {
    // an equation where every kind is eligible and can satisfy the guard
    Equation eq = parse_equation("$y = 30 - 12$");
    std::map<PerturbKind, int> counts;
    const int n = 3000;
    for (int i = 0; i < n; ++i) counts[perturb(eq, kAllKinds, derive_seed(0xC4154, i)).kind]++;
    const double expected = n / 3.0;
    double chi2 = 0.0;
    for (const auto& [kind, count] : counts)
        chi2 += (count - expected) * (count - expected) / expected;
    // 2 degrees of freedom: p = exp(-chi2 / 2)
    const double p = std::exp(-chi2 / 2.0);
    CHECK(counts.size() == 3);
    CHECK(p > 0.01);
}

TEST_CASE("edits stay within the mutated segment") {
    const std::string sentence = "First $a = 3 + 4$ and later $b = 5 \\times 6$ holds.";
    Equation eq = parse_equation(sentence);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        PerturbationRecord rec = perturb(eq, kAllKinds, seed);
        CHECK(rec.perturbed.raw != rec.original.raw);
        CHECK(differs_only_in_segment(rec));
    }
}

TEST_CASE("edit prompts reproduce the instruction templates") {
    Equation eq = parse_equation("$t = 100 - 25$");

    Rng r1(5);
    PerturbationRecord vm = perturb_value(eq, r1);
    auto [vsys, vuser] = emit_edit_prompt(vm);
    const auto& det = std::get<ValueModDetail>(vm.detail);
    CHECK(vsys.find("You are required to ONLY change the values with minimal text changes as "
                    "follows:") != std::string::npos);
    CHECK(vsys.find("change the value " + det.old_raw + " to " + det.new_raw) !=
          std::string::npos);
    CHECK(vsys.rfind("Return the new sentence only.") == vsys.size() -
          std::string("Return the new sentence only.").size());
    CHECK(vuser == "$t = 100 - 25$");

    Rng r2(6);
    PerturbationRecord oa = perturb_operator(parse_equation("$a + b$"), r2);
    auto [osys, ouser] = emit_edit_prompt(oa);
    const auto& od = std::get<OperatorAltDetail>(oa.detail);
    CHECK(osys.find("You are required to ONLY change the operators with minimal text changes as "
                    "follows:") != std::string::npos);
    CHECK(osys.find("change the operator from + to " + std::string(op_symbol(od.to)) +
                    " between a and b") != std::string::npos);

    Rng r3(7);
    PerturbationRecord sw = perturb_operands(parse_equation("$\\frac{4}{7}$"), r3);
    auto [ssys, suser] = emit_edit_prompt(sw);
    CHECK(ssys.find("You are required to ONLY swap the operands with minimal text changes as "
                    "follows:") != std::string::npos);
    CHECK(ssys.find("swap the operands 4 and 7") != std::string::npos);
}

TEST_CASE("multi-edit mode collects one line per edit of the same kind") {
    Equation eq = parse_equation("$y = 10 + 20 + 30$");
    PerturbationRecord rec = perturb_multi(eq, {PerturbKind::ValueMod}, 2, 9);
    CHECK(rec.edit_lines.size() == 2);
    for (const auto& line : rec.edit_lines) CHECK(line.rfind("change the value ", 0) == 0);
}
