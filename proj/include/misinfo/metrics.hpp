#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "misinfo/error.hpp"
#include "misinfo/rng.hpp"

namespace misinfo {

// Per-question sampling outcome: correctness bit per sample under the
// baseline (original) and the condition, plus the one identification run that
// decides knowledgeable-subset membership. The experiment pipeline always
// stores five samples per side; the math below works for any equal length.
struct SampleSet {
    std::string question_id;
    std::vector<std::uint8_t> baseline_bits;
    std::vector<std::uint8_t> condition_bits;
    bool identification_bit = false;
};

struct KAccReport {
    double estimate = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    std::optional<double> relative_decrease;  // vs. the named baseline, in percent
    std::string baseline_name;
    int n_questions = 0;
};

inline std::vector<SampleSet> knowledgeable_subset(const std::vector<SampleSet>& items) {
    std::vector<SampleSet> out;
    for (const auto& s : items)
        if (s.identification_bit) out.push_back(s);
    return out;
}

// Pooled pair ratio: sample k of the baseline pairs with sample k of the
// condition; the estimate is #(both correct) / #(baseline correct) summed over
// every question.
inline double kacc_condition(const std::vector<SampleSet>& subset) {
    long long num = 0, den = 0;
    for (const auto& s : subset) {
        if (s.baseline_bits.size() != s.condition_bits.size())
            raise(Errc::LengthMismatch, "baseline/condition sample counts differ for question " +
                                            s.question_id);
        for (std::size_t k = 0; k < s.baseline_bits.size(); ++k) {
            if (!s.baseline_bits[k]) continue;
            ++den;
            if (s.condition_bits[k]) ++num;
        }
    }
    if (den == 0) raise(Errc::NoCorrectBaselinePairs, "no baseline-correct pairs to condition on");
    return static_cast<double>(num) / static_cast<double>(den);
}

// Original-setting K-Acc: pairs each question's samples against a seeded
// permutation of themselves, measuring knowledge consistency.
inline double kacc_original(const std::vector<SampleSet>& subset, std::uint64_t seed) {
    std::vector<SampleSet> permuted = subset;
    for (std::size_t i = 0; i < permuted.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        auto perm = rng.permutation(permuted[i].baseline_bits.size());
        permuted[i].condition_bits.resize(permuted[i].baseline_bits.size());
        for (std::size_t k = 0; k < perm.size(); ++k)
            permuted[i].condition_bits[k] = permuted[i].baseline_bits[perm[k]];
    }
    return kacc_condition(permuted);
}

namespace detail {

inline double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

// Percentile bootstrap over whole questions. Replicate seeds are derived from
// the master seed by counter, so sharding the replicates cannot change the
// result.
inline std::pair<double, double> bootstrap_ci(const std::vector<SampleSet>& subset, int n = 1000,
                                              double level = 0.95, std::uint64_t seed = 0) {
    if (subset.empty()) raise(Errc::NoCorrectBaselinePairs, "empty subset");
    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        long long num = 0, den = 0;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            const SampleSet& s = subset[rng.uniform_index(subset.size())];
            for (std::size_t k = 0; k < s.baseline_bits.size(); ++k) {
                if (!s.baseline_bits[k]) continue;
                ++den;
                if (s.condition_bits[k]) ++num;
            }
        }
        if (den == 0) continue;  // a resample with nothing to condition on carries no estimate
        estimates.push_back(static_cast<double>(num) / static_cast<double>(den));
    }
    if (estimates.empty())
        raise(Errc::NoCorrectBaselinePairs, "every bootstrap replicate had a zero denominator");
    std::sort(estimates.begin(), estimates.end());
    const double alpha = (1.0 - level) / 2.0;
    return {detail::percentile(estimates, alpha), detail::percentile(estimates, 1.0 - alpha)};
}

// (baseline - condition) / baseline * 100, the "down arrow" number.
inline double relative_decrease(double baseline_pct, double condition_pct) {
    if (baseline_pct <= 0.0) raise(Errc::ZeroBaseline, "baseline must be positive");
    return (baseline_pct - condition_pct) / baseline_pct * 100.0;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Questions sorted by per-question baseline accuracy (ties broken by id) and
// split into k contiguous bins; remainders go to the earliest bins, and the
// last bin holds the easiest questions.
inline std::map<std::string, int> difficulty_bins(const std::vector<SampleSet>& items, int k = 5) {
    if (static_cast<int>(items.size()) < k)
        raise(Errc::TooFewItems, "need at least " + std::to_string(k) + " questions");
    struct Entry {
        double acc;
        std::string id;
    };
    std::vector<Entry> order;
    order.reserve(items.size());
    for (const auto& s : items) {
        double acc = 0.0;
        if (!s.baseline_bits.empty()) {
            int c = 0;
            for (auto b : s.baseline_bits) c += b ? 1 : 0;
            acc = static_cast<double>(c) / static_cast<double>(s.baseline_bits.size());
        }
        order.push_back({acc, s.question_id});
    }
    std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
        if (a.acc != b.acc) return a.acc < b.acc;
        return a.id < b.id;
    });
    const int n = static_cast<int>(order.size());
    const int base = n / k, rem = n % k;
    std::map<std::string, int> bins;
    int pos = 0;
    for (int b = 0; b < k; ++b) {
        const int size = base + (b < rem ? 1 : 0);
        for (int i = 0; i < size; ++i) bins[order[static_cast<std::size_t>(pos++)].id] = b + 1;
    }
    return bins;
}

namespace detail {

// Regularized incomplete beta I_x(a, b) by continued fraction (Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value of a t statistic with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return detail::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
};

// Sample Pearson correlation with the usual t-based two-sided p-value.
inline PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        raise(Errc::DegenerateInput, "need two equal-length vectors of at least 3 points");
    const std::size_t n = x.size();
    long double mx = 0.0L, my = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<long double>(n);
    my /= static_cast<long double>(n);
    long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0L || syy == 0.0L)
        raise(Errc::DegenerateInput, "zero variance input");
    PearsonResult res;
    res.r = static_cast<double>(sxy / std::sqrt(sxx * syy));
    if (res.r > 1.0) res.r = 1.0;
    if (res.r < -1.0) res.r = -1.0;
    const double df = static_cast<double>(n - 2);
    const double denom = 1.0 - res.r * res.r;
    if (denom <= 0.0) {
        res.p = 0.0;
        return res;
    }
    const double t = res.r * std::sqrt(df / denom);
    res.p = student_t_two_sided(t, df);
    return res;
}

}  // namespace misinfo
