#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "misinfo/grader.hpp"
#include "misinfo/item.hpp"
#include "misinfo/prompts.hpp"

namespace misinfo {

enum class Correction { Corr, NCorr };
enum class Factuality { FCorr, NFCorr };

// One response's step-level behavior under misinformation.
struct BehaviorLabel {
    bool following = false;
    Correction correction = Correction::NCorr;
    std::optional<Factuality> factuality;  // present exactly when correction == Corr
    std::vector<int> positions;            // 1-based step indices of corrections
    std::vector<double> position_percents; // positions[j] / N * 100
};

class Verifier {
public:
    virtual ~Verifier() = default;
    virtual bool follows_misinformation(const TestItem& item, const CoT& response) = 0;
    virtual bool corrects_misinformation(const TestItem& item, const CoT& response) = 0;
    virtual bool correction_is_factual(const TestItem& item, const CoT& response) = 0;
    virtual std::vector<int> correction_positions(const TestItem& item, const CoT& response) = 0;
};

namespace detail {

inline bool step_claims_correction(const std::string& step_text) {
    const std::string t = lowercase(step_text);
    return t.find("equation") != std::string::npos && t.find("not correct") != std::string::npos;
}

// Does `needle` (a parsed segment) appear in the step's math, either as a whole
// relation or as a subtree of any side?
inline bool segment_appears_in(const Equation& step_eq, const Segment& needle) {
    for (const auto& seg : step_eq.segments) {
        if (needle.has_relation() && seg.has_relation() &&
            structurally_equal(*seg.expr, *needle.expr) &&
            structurally_equal(*seg.rhs, *needle.rhs))
            return true;
        const Expr& target = needle.has_relation() ? *needle.rhs : *needle.expr;
        if (target.kind == Expr::Kind::Opaque) continue;
        if (contains_subtree(*seg.expr, target)) return true;
        if (seg.rhs && contains_subtree(*seg.rhs, target)) return true;
    }
    return false;
}

// Structural or numeric match between a claimed correction and the truth.
inline bool corrects_to_truth(const Equation& step_eq, const Segment& truth) {
    for (const auto& seg : step_eq.segments) {
        if (truth.has_relation() && seg.has_relation()) {
            if (!structurally_equal(*seg.expr, *truth.expr)) continue;
            if (structurally_equal(*seg.rhs, *truth.rhs)) return true;
            try {
                if (nearly_equal(evaluate(*seg.rhs), evaluate(*truth.rhs), 1e-9)) return true;
            } catch (const Error&) {
            }
        } else if (!truth.has_relation() && !seg.has_relation()) {
            if (structurally_equal(*seg.expr, *truth.expr)) return true;
            try {
                if (nearly_equal(evaluate(*seg.expr), evaluate(*truth.expr), 1e-9)) return true;
            } catch (const Error&) {
            }
        }
    }
    return false;
}

}  // namespace detail

// Offline verifier. Following is detected by AST containment of the perturbed
// equation; corrections by the canonical template phrases plus an equation
// match against the truth.
class HeuristicVerifier : public Verifier {
public:
    bool follows_misinformation(const TestItem& item, const CoT& response) override {
        if (!item.misinfo) return false;
        const PerturbationRecord& rec = *item.misinfo;
        if (rec.mutated_segment >= rec.perturbed.segments.size()) return false;
        const Segment& wrong = rec.perturbed.segments[rec.mutated_segment];
        for (const auto& step : response.steps) {
            if (detail::step_claims_correction(step.text)) continue;  // corrections cite, not follow
            try {
                if (detail::segment_appears_in(parse_equation(step.text), wrong)) return true;
            } catch (const Error&) {
            }
        }
        return false;
    }

    bool corrects_misinformation(const TestItem& item, const CoT& response) override {
        (void)item;
        for (const auto& step : response.steps)
            if (detail::step_claims_correction(step.text)) return true;
        return false;
    }

    bool correction_is_factual(const TestItem& item, const CoT& response) override {
        if (!item.misinfo) return false;
        const PerturbationRecord& rec = *item.misinfo;
        if (rec.mutated_segment >= rec.original.segments.size()) return false;
        const Segment& truth = rec.original.segments[rec.mutated_segment];
        for (const auto& step : response.steps) {
            if (!detail::step_claims_correction(step.text)) continue;
            try {
                if (detail::corrects_to_truth(parse_equation(step.text), truth)) return true;
            } catch (const Error&) {
            }
        }
        return false;
    }

    std::vector<int> correction_positions(const TestItem& item, const CoT& response) override {
        (void)item;
        std::vector<int> out;
        for (const auto& step : response.steps)
            if (detail::step_claims_correction(step.text)) out.push_back(step.index);
        return out;
    }
};

// Model-backed verifier: builds the verifier prompts, asks the supplied
// completion function, and accepts a fenced or bare JSON object. Any other
// shape counts as a retry; three failures raise VerifierFailure.
class LlmVerifier : public Verifier {
public:
    using AskFn = std::function<std::string(const std::vector<ChatMessage>&)>;

    explicit LlmVerifier(AskFn ask, int max_attempts = 3)
        : ask_(std::move(ask)), max_attempts_(max_attempts) {}

    bool follows_misinformation(const TestItem& item, const CoT& response) override {
        return ask_label(prompts::VerifierKind::Following, item, response);
    }
    bool corrects_misinformation(const TestItem& item, const CoT& response) override {
        return ask_label(prompts::VerifierKind::Existence, item, response);
    }
    bool correction_is_factual(const TestItem& item, const CoT& response) override {
        return ask_label(prompts::VerifierKind::Factuality, item, response);
    }
    std::vector<int> correction_positions(const TestItem& item, const CoT& response) override {
        const auto msgs = prompts::build_verifier_prompt(prompts::VerifierKind::Position, item,
                                                         response);
        for (int attempt = 0; attempt < max_attempts_; ++attempt) {
            auto parsed = try_parse(ask_(msgs));
            if (!parsed || !parsed->contains("positions") || !(*parsed)["positions"].is_array())
                continue;
            std::vector<int> out;
            bool ok = true;
            for (const auto& v : (*parsed)["positions"]) {
                if (!v.is_number_integer()) {
                    ok = false;
                    break;
                }
                out.push_back(v.get<int>());
            }
            if (ok) return out;
        }
        raise(Errc::VerifierFailure, "position verifier returned malformed output");
    }

private:
    AskFn ask_;
    int max_attempts_;

    static std::optional<nlohmann::json> try_parse(const std::string& text) {
        const auto open = text.find('{');
        const auto close = text.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close < open)
            return std::nullopt;
        const auto parsed =
            nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
        return parsed;
    }

    bool ask_label(prompts::VerifierKind kind, const TestItem& item, const CoT& response) {
        const auto msgs = prompts::build_verifier_prompt(kind, item, response);
        for (int attempt = 0; attempt < max_attempts_; ++attempt) {
            auto parsed = try_parse(ask_(msgs));
            if (!parsed || !parsed->contains("label") || !(*parsed)["label"].is_string()) continue;
            const std::string label = detail::lowercase((*parsed)["label"].get<std::string>());
            if (label == "yes") return true;
            if (label == "no") return false;
        }
        raise(Errc::VerifierFailure,
              std::string(prompts::verifier_kind_name(kind)) + " verifier returned malformed output");
    }
};

inline BehaviorLabel classify(const CoT& response, const TestItem& item, Verifier& verifier) {
    BehaviorLabel label;
    label.following = verifier.follows_misinformation(item, response);
    const bool corr = verifier.corrects_misinformation(item, response);
    label.correction = corr ? Correction::Corr : Correction::NCorr;
    if (corr) {
        label.factuality = verifier.correction_is_factual(item, response) ? Factuality::FCorr
                                                                          : Factuality::NFCorr;
        label.positions = verifier.correction_positions(item, response);
        if (label.positions.empty())
            raise(Errc::VerifierFailure,
                  "verifier labeled a correction but returned no positions");
        const double n = static_cast<double>(response.step_count());
        for (int p : label.positions)
            label.position_percents.push_back(static_cast<double>(p) / n * 100.0);
    }
    return label;
}

// Counts along correction -> factuality -> final answer, plus the parallel
// following -> final answer chain.
struct FlowAggregate {
    long long total = 0;
    long long corr = 0, ncorr = 0;
    long long fcorr = 0, nfcorr = 0;
    long long fcorr_correct = 0, fcorr_incorrect = 0;
    long long nfcorr_correct = 0, nfcorr_incorrect = 0;
    long long ncorr_correct = 0, ncorr_incorrect = 0;
    long long follow = 0, nofollow = 0;
    long long follow_correct = 0, follow_incorrect = 0;
    long long nofollow_correct = 0, nofollow_incorrect = 0;

    bool conserved() const {
        return corr + ncorr == total && fcorr + nfcorr == corr &&
               fcorr_correct + fcorr_incorrect == fcorr &&
               nfcorr_correct + nfcorr_incorrect == nfcorr &&
               ncorr_correct + ncorr_incorrect == ncorr && follow + nofollow == total &&
               follow_correct + follow_incorrect == follow &&
               nofollow_correct + nofollow_incorrect == nofollow;
    }
};

inline FlowAggregate aggregate_flows(const std::vector<BehaviorLabel>& labels,
                                     const std::vector<bool>& correctness) {
    if (labels.size() != correctness.size())
        raise(Errc::LengthMismatch, "labels and correctness lists differ in length");
    FlowAggregate f;
    f.total = static_cast<long long>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const BehaviorLabel& l = labels[i];
        const bool ok = correctness[i];
        if (l.correction == Correction::Corr) {
            ++f.corr;
            if (l.factuality == Factuality::FCorr) {
                ++f.fcorr;
                ++(ok ? f.fcorr_correct : f.fcorr_incorrect);
            } else {
                ++f.nfcorr;
                ++(ok ? f.nfcorr_correct : f.nfcorr_incorrect);
            }
        } else {
            ++f.ncorr;
            ++(ok ? f.ncorr_correct : f.ncorr_incorrect);
        }
        if (l.following) {
            ++f.follow;
            ++(ok ? f.follow_correct : f.follow_incorrect);
        } else {
            ++f.nofollow;
            ++(ok ? f.nofollow_correct : f.nofollow_incorrect);
        }
    }
    return f;
}

inline nlohmann::json to_sankey_json(const FlowAggregate& f) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, label] :
         std::vector<std::pair<const char*, const char*>>{{"corr", "Correction"},
                                                          {"ncorr", "No correction"},
                                                          {"fcorr", "Factual correction"},
                                                          {"nfcorr", "Non-factual correction"},
                                                          {"correct", "Correct answer"},
                                                          {"incorrect", "Incorrect answer"},
                                                          {"follow", "Follows misinformation"},
                                                          {"nofollow", "Does not follow"}}) {
        nodes.push_back({{"id", id}, {"label", label}});
    }
    nlohmann::json links = nlohmann::json::array();
    auto link = [&](const char* s, const char* t, long long v) {
        links.push_back({{"source", s}, {"target", t}, {"value", v}});
    };
    link("corr", "fcorr", f.fcorr);
    link("corr", "nfcorr", f.nfcorr);
    link("fcorr", "correct", f.fcorr_correct);
    link("fcorr", "incorrect", f.fcorr_incorrect);
    link("nfcorr", "correct", f.nfcorr_correct);
    link("nfcorr", "incorrect", f.nfcorr_incorrect);
    link("ncorr", "correct", f.ncorr_correct);
    link("ncorr", "incorrect", f.ncorr_incorrect);
    link("follow", "correct", f.follow_correct);
    link("follow", "incorrect", f.follow_incorrect);
    link("nofollow", "correct", f.nofollow_correct);
    link("nofollow", "incorrect", f.nofollow_incorrect);
    return {{"nodes", nodes}, {"links", links}};
}

// Fleiss' kappa over an items x categories count matrix.
inline double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
    if (ratings.empty()) raise(Errc::EmptyInput, "no rated items");
    const std::size_t categories = ratings.front().size();
    long long n = 0;
    for (int c : ratings.front()) n += c;
    if (n < 2) raise(Errc::RowSumMismatch, "need at least two annotators");

    const double big_n = static_cast<double>(ratings.size());
    std::vector<double> pj(categories, 0.0);
    double p_bar = 0.0;
    for (const auto& row : ratings) {
        if (row.size() != categories)
            raise(Errc::RowSumMismatch, "ragged rating matrix");
        long long sum = 0, sq = 0;
        for (std::size_t j = 0; j < categories; ++j) {
            sum += row[j];
            sq += static_cast<long long>(row[j]) * row[j];
            pj[j] += row[j];
        }
        if (sum != n) raise(Errc::RowSumMismatch, "annotator counts differ across items");
        p_bar += (static_cast<double>(sq) - static_cast<double>(n)) /
                 (static_cast<double>(n) * static_cast<double>(n - 1));
    }
    p_bar /= big_n;
    double pe = 0.0;
    for (double v : pj) {
        const double share = v / (big_n * static_cast<double>(n));
        pe += share * share;
    }
    if (pe >= 1.0) raise(Errc::PerfectExpectedAgreement, "expected agreement is 1, kappa undefined");
    return (p_bar - pe) / (1.0 - pe);
}

// Per-label F1 averaged with weights proportional to gold support.
inline double weighted_f1(const std::vector<std::string>& pred,
                          const std::vector<std::string>& gold) {
    if (pred.empty() || pred.size() != gold.size())
        raise(Errc::EmptyInput, "need equal-length nonempty label lists");
    std::map<std::string, long long> support, tp, fp, fn;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++support[gold[i]];
        if (pred[i] == gold[i]) {
            ++tp[gold[i]];
        } else {
            ++fp[pred[i]];
            ++fn[gold[i]];
        }
    }
    double score = 0.0;
    const double total = static_cast<double>(gold.size());
    for (const auto& [label, count] : support) {
        const double tpv = static_cast<double>(tp[label]);
        const double precision_den = tpv + static_cast<double>(fp[label]);
        const double recall_den = tpv + static_cast<double>(fn[label]);
        const double precision = precision_den > 0 ? tpv / precision_den : 0.0;
        const double recall = recall_den > 0 ? tpv / recall_den : 0.0;
        const double f1 = (precision + recall) > 0 ? 2 * precision * recall / (precision + recall)
                                                   : 0.0;
        score += f1 * (static_cast<double>(count) / total);
    }
    return score;
}

}  // namespace misinfo
