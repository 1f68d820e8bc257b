#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "grader_fixture.hpp"
#include "misinfo/grader.hpp"
#include "misinfo/rng.hpp"

using namespace misinfo;

TEST_CASE("normalize: documented conversions") {
    CHECK(normalize("50.03%") == "0.5003");
    CHECK(normalize("5,600") == "5600");
    CHECK(normalize("\\frac{4}{7}") == "0.571428571429");
    CHECK(normalize("4/7") == "0.571428571429");
    CHECK(normalize("a   b\t c") == "a b c");
    CHECK(normalize("nothing numeric") == "nothing numeric");
}

TEST_CASE("normalize is idempotent") {
    const char* samples[] = {
        "50.03%", "5,600", "\\frac{4}{7}", "1/2/3",  "50%%",      "x = 4/7 or 57%",
        "",       "  a  ", "-3.5 then 7", "3/0 odd", "1,234,567",
    };
    for (const char* s : samples) {
        const std::string once = normalize(s);
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("extract_numbers token boundaries") {
    CHECK(extract_numbers(normalize("costs -3.5 then 7")) == std::vector<double>{-3.5, 7});
    CHECK(extract_numbers("") == std::vector<double>{});
    CHECK(extract_numbers(normalize("x2 plus 10")) == std::vector<double>{2, 10});
    CHECK(extract_numbers("5-3") == std::vector<double>{5, 3});
    CHECK(extract_numbers("(-8)") == std::vector<double>{-8});
}

TEST_CASE("extract_final_answer: delimiter and fallback") {
    CHECK(extract_final_answer("...\n12. The answer is 42.") == 42);
    CHECK(extract_final_answer("values 3 and 9 appear") == 9);
    CHECK(extract_final_answer("The answer is 5. The answer is 6.") == 6);
    try {
        extract_final_answer("The answer is unknown.");
        FAIL("expected NoNumberFound");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoNumberFound);
    }
    try {
        extract_final_answer("no digits at all");
        FAIL("expected NoNumberFound");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoNumberFound);
    }
}

TEST_CASE("grade: documented examples") {
    CHECK(grade("The answer is \\frac{4}{7}", "4/7").correct);
    CHECK(grade("The answer is 0.5003", "50.03%").correct);
    CHECK_FALSE(grade("The answer is 41", "42").correct);
    GradeResult r = grade("The answer is gibberish", "42");
    CHECK_FALSE(r.correct);
    CHECK_FALSE(r.claim_value.has_value());
    CHECK(r.gold_value.has_value());
}

TEST_CASE("grade symmetry on pure numeric strings") {
    Rng rng(33);
    for (int i = 0; i < 300; ++i) {
        const double a = static_cast<double>(rng.uniform_int(-10000, 10000)) / 8.0;
        const double b = rng.bernoulli(0.5)
                             ? a
                             : static_cast<double>(rng.uniform_int(-10000, 10000)) / 8.0;
        const std::string sa = format_decimal(a), sb = format_decimal(b);
        CHECK(grade(sa, sb).correct == grade("The answer is " + sb, sa).correct);
    }
}

TEST_CASE("grading fixture: 200 hand-built cases") {
    int failures = 0;
    for (const auto& c : kGraderFixture) {
        const GradeResult r = grade(c.claim, c.gold);
        if (r.correct != c.correct) {
            ++failures;
            MESSAGE("claim=\"", c.claim, "\" gold=\"", c.gold, "\" expected=", c.correct,
                    " got=", r.correct);
        }
    }
    CHECK(failures == 0);
    CHECK(kGraderFixture.size() == 200);
}
