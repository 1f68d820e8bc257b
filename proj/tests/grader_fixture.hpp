#pragma once

#include <array>

// Hand-built grading contract: (claim, gold, expected-correct) triples derived
// on paper from the normalization and comparison rules, written down before
// the grader existed. Covers fractions (both spellings), percentages, thousand
// separators, delimiter vs last-number extraction, negatives, tolerance edges,
// and extraction failures.
struct GraderCase {
    const char* claim;
    const char* gold;
    bool correct;
};

inline constexpr std::array<GraderCase, 200> kGraderFixture = {{
    // --- delimiter extraction, plain integers ---
    {"The answer is 42.", "42", true},
    {"The answer is 42", "42", true},
    {"1. First 5\n2. Then 9\n3. The answer is 14.", "14", true},
    {"The answer is 41.", "42", false},
    {"Step 12 gives 7. The answer is 7.", "7", true},
    {"The answer is 100.", "100", true},
    {"The answer is 0.", "0", true},
    {"The answer is 12.", "21", false},
    {"The answer is 5. The answer is 6.", "6", true},
    {"The answer is 5. The answer is 6.", "5", false},
    {"I think 3. The answer is 8.", "3", false},
    {"I think 3. The answer is 8.", "8", true},
    {"The answer is 250.", "250", true},
    {"The answer is 250.", "205", false},
    {"Adding 10 and 15. The answer is 25.", "25", true},
    {"The answer is 999.", "999", true},
    {"The answer is 1000.", "999", false},
    {"The answer is 18", "18", true},
    {"The answer is 0", "1", false},
    {"After step 11 the final value is 60. The answer is 60.", "60", true},
    // --- last-number fallback (no delimiter) ---
    {"values 3 and 9 appear", "9", true},
    {"values 3 and 9 appear", "3", false},
    {"7", "7", true},
    {"7 apples", "7", true},
    {"we get 12 then halve to 6", "6", true},
    {"we get 12 then halve to 6", "12", false},
    {"no numbers here", "5", false},
    {"", "5", false},
    {"the total is 88 dollars", "88", true},
    {"the final result equals 3.5", "3.5", true},
    {"outputs were 1, 2, 3, 4", "4", true},
    {"outputs were 1, 2, 3, 4", "1", false},
    {"roughly 19 or 20", "20", true},
    {"roughly 19 or 20", "19", false},
    {"computed 45 wait no 54", "54", true},
    {"half of 14", "14", true},
    {"the answer is probably 31", "31", true},
    {"Answer: 77.", "77", true},
    {"it costs 5 dollars then 60 cents", "60", true},
    {"x2 plus 10", "10", true},
    // --- fractions written with a slash ---
    {"The answer is 1/2.", "0.5", true},
    {"The answer is 1/2.", "0.51", false},
    {"The answer is 3/4.", "0.75", true},
    {"The answer is 4/7.", "0.571428571429", true},
    {"The answer is 4/7.", "0.571", false},
    {"The answer is 7/8.", "0.875", true},
    {"The answer is 9/5.", "1.8", true},
    {"The answer is 22/7.", "3.14285714286", true},
    {"The answer is 22/7.", "3.1416", false},
    {"The answer is 1/3.", "0.333333333333", true},
    {"The answer is 2/3.", "0.666666666667", true},
    {"The answer is 5/6.", "0.833333333333", true},
    {"The answer is 1 / 2.", "0.5", true},
    {"The answer is 10/4.", "2.5", true},
    {"The answer is 10/5.", "2", true},
    {"The answer is 8/2.", "4", true},
    {"The answer is 8/2.", "3", false},
    {"The answer is 100/3.", "33.3333333333", true},
    {"The answer is 1/7.", "0.142857142857", true},
    {"The answer is 3/0.", "3", true},  // zero denominator passes through
    // --- fractions written with \frac ---
    {"The answer is \\frac{4}{7}", "4/7", true},
    {"The answer is \\frac{1}{2}", "0.5", true},
    {"The answer is \\frac{3}{4}", "0.75", true},
    {"The answer is \\frac{3}{4}", "0.7", false},
    {"The answer is $\\frac{7}{8}$", "0.875", true},
    {"The answer is \\frac{22}{7}", "22/7", true},
    {"The answer is \\frac{-1}{2}", "-0.5", true},
    {"The answer is \\frac{5}{6}", "5/6", true},
    {"The answer is \\frac{9}{5}", "1.8", true},
    {"The answer is \\frac{10}{4}", "2.5", true},
    {"The answer is \\frac{1}{3}", "0.333333333333", true},
    {"The answer is \\frac{2}{3}", "2/3", true},
    {"The answer is \\frac{8}{2}", "4", true},
    {"The answer is \\frac{4}{0}", "4", true},  // zero denominator passes through
    {"The answer is \\frac{48}{2}", "24", true},
    // --- percentages ---
    {"The answer is 50.03%", "0.5003", true},
    {"The answer is 0.5003", "50.03%", true},
    {"The answer is 50%", "0.5", true},
    {"The answer is 12.5%", "0.125", true},
    {"The answer is 100%", "1", true},
    {"The answer is 0.5%", "0.005", true},
    {"The answer is 25%", "0.25", true},
    {"The answer is 25%", "0.26", false},
    {"The answer is 75\\%", "0.75", true},
    {"The answer is -20%", "-0.2", true},
    {"The answer is 66.67%", "2/3", true},
    {"The answer is 66%", "2/3", false},
    {"The answer is 150%", "1.5", true},
    {"The answer is 5%", "0.05", true},
    {"The answer is 5%", "5", false},
    {"The answer is 33.33%", "0.3333", true},
    {"The answer is 0%", "0", true},
    {"The answer is 12%", "0.12", true},
    {"The answer is 200%", "2", true},
    {"The answer is 99%", "0.99", true},
    // --- thousand separators ---
    {"The answer is 5,600.", "5600", true},
    {"The answer is 5600.", "5,600", true},
    {"The answer is 1,234,567.", "1234567", true},
    {"The answer is 12,345.", "12345", true},
    {"The answer is 12,345.", "12,345", true},
    {"The answer is 1,000.", "1000", true},
    {"The answer is 1,000.", "100", false},
    {"The answer is 999,999.", "999999", true},
    {"The answer is 10,00.", "1000", false},  // not a separator pattern
    {"The answer is 2,500.75", "2500.75", true},
    {"The answer is 3,000,000.", "3000000", true},
    {"The answer is 42,5", "425", false},  // not a separator pattern
    {"The answer is 6,250", "6250", true},
    {"The answer is 6,250", "6,250", true},
    {"The answer is 81,216", "81216", true},
    // --- negatives ---
    {"The answer is -42.", "-42", true},
    {"The answer is -42.", "42", false},
    {"costs -3.5 then 7", "7", true},
    {"costs -3.5 then 7", "-3.5", false},
    {"the delta is -3.5", "-3.5", true},
    {"The answer is -0.125", "-1/8", true},
    {"The answer is 5-3", "5", true},  // '-' after a digit does not attach
    {"balance went to -250", "-250", true},
    {"balance went to -250", "250", false},
    {"The answer is -7/2", "-3.5", true},
    {"The answer is -50%", "-0.5", true},
    {"(-8)", "-8", true},
    {"list: 4, -9", "-9", true},
    {"list: 4, -9", "9", false},
    {"The answer is -1,250", "-1250", true},
    // --- tolerance: |claim - gold| <= max(1e-6, 1e-4 * |gold|) ---
    {"The answer is 10000.5", "10000", true},
    {"The answer is 10001.5", "10000", false},
    {"The answer is 0.0000005", "0", true},
    {"The answer is 0.1", "0", false},
    {"The answer is 3.14159265359", "3.14159265358", true},
    {"The answer is 2.5001", "2.5", true},
    {"The answer is 2.51", "2.5", false},
    {"The answer is 1000000.05", "1000000", true},
    {"The answer is 123.4567", "123.45", true},
    {"The answer is 123.4567", "120", false},
    // --- realistic chain-of-thought claims ---
    {"1. Half of 48 is $\\frac{48}{2} = 24$.\n2. Total is $48 + 24 = 72$.\n3. The answer is 72.",
     "72", true},
    {"1. Half of 48 is $\\frac{48}{2} = 24$.\n2. Total is $48 + 24 = 72$.\n3. The answer is 72.",
     "24", false},
    {"1. We compute 5 times 9 = 45.\n2. The answer is 45.", "45", true},
    {"The answer is    42.", "42", true},
    {"The answer is\n42.", "42", true},
    {"The answer is 42 apples.", "42", true},
    {"The answer is approximately 42.", "42", true},
    {"Thus 84/2 = 42. The answer is 42.", "42", true},
    {"Thus 84/2 = 42.", "42", true},
    {"The answer is x.", "5", false},
    {"The answer is unknown.", "42", false},
    {"The answer is 42. Hope this helps!", "42", true},
    {"The answer is 21 + 21.", "42", false},  // first number after delimiter is 21
    {"The answer is 0.50", "1/2", true},
    {"Combined: 30 + 12 gives 42, and the answer is 42", "42", true},
    // --- gold-side normalization and failure modes ---
    {"The answer is 0.571428571429", "4/7", true},
    {"The answer is 0.57", "4/7", false},
    {"The answer is 2", "two", false},
    {"The answer is 7", "b", false},
    {"The answer is 7", "", false},
    {"The answer is 12", "12.0", true},
    {"The answer is 12.0", "12", true},
    {"The answer is 3600", "3,600", true},
    {"The answer is 1/2", "50%", true},
    {"The answer is 1/2", "51%", false},
    {"The answer is 25%", "1/4", true},
    {"The answer is \\frac{3}{8}", "37.5%", true},
    {"The answer is \\frac{3}{8}", "0.4", false},
    {"The answer is 150", "1.5", false},
    {"The answer is 1e5", "1", true},  // 'e' splits the token
    // --- symmetric plain-number checks ---
    {"3.25", "3.25", true},
    {"3.25", "3.26", false},
    {"17", "17", true},
    {"17", "-17", false},
    {"-17", "-17", true},
    {"0.001", "0.001", true},
    {"0.001", "0.002", false},
    {"540", "540", true},
    {"540", "54", false},
    // --- more fraction/percent/separator interplay ---
    {"The answer is 1/4", "0.25", true},
    {"The answer is 1/4", "25%", true},
    {"The answer is 3/5", "0.6", true},
    {"The answer is 3/5", "60%", true},
    {"The answer is 7/10", "0.7", true},
    {"The answer is 7/10", "0.71", false},
    {"The answer is 11/8", "1.375", true},
    {"The answer is 13/4", "3.25", true},
    {"The answer is 2/5", "40%", true},
    {"The answer is 62.5%", "5/8", true},
    {"The answer is 87.5%", "7/8", true},
    {"The answer is 20%", "0.2", true},
    {"The answer is 20%", "0.22", false},
    {"The answer is 1,500", "1500", true},
    {"The answer is 1,500", "1,500", true},
    {"The answer is 24,000", "24000", true},
    {"The answer is 24,000", "2400", false},
    {"The answer is 640,000", "640000", true},
    // --- delimiter restated, distractor-heavy texts ---
    {"The answer is 9. Actually wait. The answer is 11.", "11", true},
    {"The answer is 9. Actually wait. The answer is 11.", "9", false},
    {"First guess 1, second guess 2. The answer is 3.", "3", true},
    {"Using 12 and 4: 12 - 4 = 8. The answer is 8.", "8", true},
    {"Using 12 and 4: 12 - 4 = 8.", "8", true},
    {"Steps give 16, 32, 64. The answer is 64.", "64", true},
    {"Steps give 16, 32, 64.", "64", true},
    {"Steps give 16, 32, 64.", "16", false},
}};
