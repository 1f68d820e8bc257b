#pragma once

#include <optional>
#include <string>
#include <vector>

#include "misinfo/error.hpp"
#include "misinfo/expr.hpp"
#include "misinfo/perturb.hpp"

namespace misinfo {

enum class Setting { Original, Misinformed, InstCorr, InstFllw };

inline const char* setting_name(Setting s) {
    switch (s) {
        case Setting::Original: return "original";
        case Setting::Misinformed: return "misinformed";
        case Setting::InstCorr: return "inst-corr";
        case Setting::InstFllw: return "inst-fllw";
    }
    return "?";
}

inline Setting setting_from_name(const std::string& name) {
    if (name == "original") return Setting::Original;
    if (name == "misinformed") return Setting::Misinformed;
    if (name == "inst-corr") return Setting::InstCorr;
    if (name == "inst-fllw") return Setting::InstFllw;
    raise(Errc::BadFormat, "unknown setting: " + name);
}

struct SamplingConfig {
    double temperature = 0.7;
    double top_p = 0.7;
    int top_k = 50;
    int n_samples = 5;
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

// One test question with its ground truth, the equations a solver could use,
// and the injected misinformation.
struct TestItem {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string source_dataset;
    std::string rationale;
    std::vector<Equation> truthful_equations;
    std::optional<PerturbationRecord> misinfo;
    std::optional<PerturbationRecord> alt_misinfo;  // for non-factual corrections
    std::vector<std::string> operations;            // gsm8k <<...>> tags, metadata only
};

struct CoTStep {
    int index = 0;  // 1-based, consecutive
    std::string text;
};

// Numbered reasoning steps plus the final answer line.
struct CoT {
    std::vector<CoTStep> steps;
    std::string final_answer_text;
    bool missing_final_answer = false;
    bool renumbered = false;

    int step_count() const { return static_cast<int>(steps.size()); }
};

// The misinformed equation list: every truthful equation, with the perturbed
// one substituted in place.
inline std::vector<std::string> misinformed_equation_texts(const TestItem& item) {
    if (!item.misinfo) raise(Errc::MissingMisinfo, "item " + item.id + " has no misinformation");
    std::vector<std::string> out;
    bool replaced = false;
    for (const auto& eq : item.truthful_equations) {
        if (!replaced && eq.raw == item.misinfo->original.raw) {
            out.push_back(item.misinfo->perturbed.raw);
            replaced = true;
        } else {
            out.push_back(eq.raw);
        }
    }
    if (!replaced) out.push_back(item.misinfo->perturbed.raw);
    return out;
}

// 1-based position of the perturbed equation within the injected list.
inline std::size_t misinformed_equation_ordinal(const TestItem& item) {
    if (!item.misinfo) raise(Errc::MissingMisinfo, "item " + item.id + " has no misinformation");
    for (std::size_t i = 0; i < item.truthful_equations.size(); ++i)
        if (item.truthful_equations[i].raw == item.misinfo->original.raw) return i + 1;
    return item.truthful_equations.size() + 1;
}

inline std::string join_equations(const std::vector<std::string>& eqs) {
    std::string out;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        if (i) out += "; ";
        out += eqs[i];
    }
    return out;
}

inline std::vector<std::string> truthful_equation_texts(const TestItem& item) {
    std::vector<std::string> out;
    for (const auto& eq : item.truthful_equations) out.push_back(eq.raw);
    return out;
}

}  // namespace misinfo
