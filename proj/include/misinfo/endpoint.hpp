#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "misinfo/behavior.hpp"
#include "misinfo/grader.hpp"
#include "misinfo/item.hpp"
#include "misinfo/prompts.hpp"
#include "misinfo/rng.hpp"

namespace misinfo {

struct CompletionRequest {
    std::vector<ChatMessage> messages;  // system, user, and the forced prefix when present
    SamplingConfig sampling;
    const TestItem* item = nullptr;
    Setting setting = Setting::Original;
    std::string forced_prefix;
    std::uint64_t base_seed = 0;
    std::vector<int> sample_indices;  // which sample slots this call produces
    std::string model;
};

struct CompletionBatch {
    std::vector<std::string> texts;  // continuations, one per requested sample
    long long prompt_tokens = -1;
    long long completion_tokens = -1;
};

class Endpoint {
public:
    virtual ~Endpoint() = default;
    virtual std::string id() const = 0;
    virtual bool supports_assistant_prefix() const { return true; }
    virtual CompletionBatch complete(const CompletionRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock model
// ---------------------------------------------------------------------------

struct MockParams {
    double p_follow = 0.0;  // restates the perturbed equation in a step
    double p_corr = 0.0;    // emits a correction step
    double p_factual = 1.0; // the correction is factual
    double p_solve = 1.0;   // reaches the gold answer
};

namespace detail {

inline double gold_value_of(const TestItem& item) {
    try {
        return extract_final_answer(normalize(item.gold_answer));
    } catch (const Error&) {
        return 0.0;
    }
}

inline std::string wrong_answer_text(double gold) {
    return format_decimal(gold + std::max(1.0, std::fabs(gold) * 0.5));
}

// A second, distinct erroneous version of the item's perturbed equation, used
// when a non-factual correction needs something wrong to "correct" to.
inline Equation synthesize_alt_equation(const TestItem& item) {
    if (item.alt_misinfo) return item.alt_misinfo->perturbed;
    const PerturbationRecord& rec = *item.misinfo;
    for (std::uint64_t salt = 0; salt < 16; ++salt) {
        try {
            PerturbationRecord alt =
                perturb(rec.original, {PerturbKind::ValueMod, PerturbKind::OperatorAlt},
                        derive_seed(fnv1a64(item.id), 0xA17A + salt));
            if (alt.perturbed.raw != rec.perturbed.raw && alt.perturbed.raw != rec.original.raw)
                return alt.perturbed;
        } catch (const Error&) {
            break;
        }
    }
    return rec.perturbed;  // last resort: repeat the same wrong equation
}

// Does a forced assistant prefix factually correct the item's misinformation?
inline bool prefix_is_factual_correction(const TestItem& item, const std::string& prefix) {
    if (!item.misinfo) return false;
    const PerturbationRecord& rec = *item.misinfo;
    if (rec.mutated_segment >= rec.original.segments.size()) return false;
    if (!step_claims_correction(prefix)) return false;
    try {
        return corrects_to_truth(parse_equation(prefix),
                                 rec.original.segments[rec.mutated_segment]);
    } catch (const Error&) {
        return false;
    }
}

inline int count_numbered_lines(const std::string& text) {
    int count = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::size_t i = pos;
        while (i < eol && (text[i] == ' ' || text[i] == '\t')) ++i;
        std::size_t d = i;
        while (d < eol && std::isdigit(static_cast<unsigned char>(text[d]))) ++d;
        if (d > i && d < eol && text[d] == '.') ++count;
        if (eol == text.size()) break;
        pos = eol + 1;
    }
    return count;
}

}  // namespace detail

// Emits a numbered chain of thought with seed-determined behavior: an optional
// correction step, an optional step that restates the perturbed equation
// verbatim, filler work steps, and a final answer line. Following uncorrected
// misinformation degrades the solve rate by a fixed 0.2 multiplier. With a
// forced prefix, only the continuation (starting with a newline) is returned.
inline std::string mock_complete(const TestItem& item, Setting setting, const MockParams& params,
                                 Rng& rng, const std::string& forced_prefix = {}) {
    const double gold = detail::gold_value_of(item);
    const bool misinformed = setting != Setting::Original && item.misinfo.has_value();

    if (!forced_prefix.empty()) {
        const bool factual = misinformed
                                 ? detail::prefix_is_factual_correction(item, forced_prefix)
                                 : true;
        const double effective = factual ? params.p_solve : 0.2 * params.p_solve;
        const bool solved = rng.bernoulli(effective);
        const int k = detail::count_numbered_lines(forced_prefix);
        std::string out;
        out += "\n" + std::to_string(k + 1) + ". We continue from the steps above.";
        out += "\n" + std::to_string(k + 2) + ". Combining the intermediate results gives the final value.";
        out += "\n" + std::to_string(k + 3) + ". The answer is " +
               (solved ? format_decimal(gold) : detail::wrong_answer_text(gold)) + ".";
        return out;
    }

    bool corr = false, factual = false, follow = false;
    if (misinformed) {
        corr = rng.bernoulli(params.p_corr);
        factual = corr && rng.bernoulli(params.p_factual);
        follow = rng.bernoulli(params.p_follow);
    }
    const double effective =
        (follow && !(corr && factual)) ? 0.2 * params.p_solve : params.p_solve;
    const bool solved = rng.bernoulli(effective);

    std::vector<std::string> steps;
    if (corr) {
        if (factual) {
            steps.push_back(prompts::fcorr_step_text(item));
        } else {
            std::string s = prompts::fill_slot(prompts::kCorrectionStepTemplate, "ordinal",
                                          prompts::ordinal_word(misinformed_equation_ordinal(item)));
            steps.push_back(
                prompts::fill_slot(s, "equation", detail::synthesize_alt_equation(item).raw));
        }
    }
    if (follow)
        steps.push_back("Using the provided equation " + item.misinfo->perturbed.raw +
                        ", substitute the known values.");
    steps.push_back("We work through the remaining computation.");
    steps.push_back("Combining the intermediate results gives the final value.");
    steps.push_back("The answer is " +
                    (solved ? format_decimal(gold) : detail::wrong_answer_text(gold)) + ".");

    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) out += "\n";
        out += std::to_string(i + 1) + ". " + steps[i];
    }
    return out;
}

class MockEndpoint : public Endpoint {
public:
    explicit MockEndpoint(MockParams params) : params_(params) {}

    std::string id() const override { return "mock"; }

    CompletionBatch complete(const CompletionRequest& req) override {
        if (!req.item) raise(Errc::EndpointError, "mock endpoint needs the item context");
        CompletionBatch batch;
        for (int k : req.sample_indices) {
            Rng rng(derive_seed(req.base_seed, static_cast<std::uint64_t>(k)));
            batch.texts.push_back(
                mock_complete(*req.item, req.setting, params_, rng, req.forced_prefix));
        }
        return batch;
    }

private:
    MockParams params_;
};

// ---------------------------------------------------------------------------
// Chat-completion HTTP endpoint
// ---------------------------------------------------------------------------

class HttpEndpoint : public Endpoint {
public:
    HttpEndpoint(std::string base_url, std::string api_key, std::string model,
                 bool supports_prefix = true, int backoff_ms = 250)
        : api_key_(std::move(api_key)),
          model_(std::move(model)),
          supports_prefix_(supports_prefix),
          backoff_ms_(backoff_ms) {
        const auto scheme = base_url.find("://");
        const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
        const auto slash = base_url.find('/', host_start);
        if (slash == std::string::npos) {
            host_ = base_url;
        } else {
            host_ = base_url.substr(0, slash);
            path_prefix_ = base_url.substr(slash);
            while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        }
    }

    std::string id() const override { return host_ + path_prefix_ + "#" + model_; }
    bool supports_assistant_prefix() const override { return supports_prefix_; }

    CompletionBatch complete(const CompletionRequest& req) override {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : req.messages) messages.push_back({{"role", m.role},
                                                               {"content", m.content}});
        const nlohmann::json body = {
            {"model", req.model.empty() ? model_ : req.model},
            {"messages", messages},
            {"temperature", req.sampling.temperature},
            {"top_p", req.sampling.top_p},
            {"top_k", req.sampling.top_k},
            {"n", static_cast<int>(req.sample_indices.size())},
        };

        const std::string path =
            path_prefix_.ends_with("/chat/completions") ? path_prefix_
                                                        : path_prefix_ + "/chat/completions";
        std::string last_error;
        for (int attempt = 0; attempt < 3; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(backoff_ms_ << (attempt - 1)));
            httplib::Client cli(host_);
            cli.set_read_timeout(300, 0);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = cli.Post(path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "server status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                raise(Errc::EndpointError,
                      "status " + std::to_string(res->status) + ": " + res->body);
            return parse_response(res->body, req.sample_indices.size());
        }
        raise(Errc::EndpointError, "gave up after 3 attempts: " + last_error);
    }

private:
    std::string host_, path_prefix_, api_key_, model_;
    bool supports_prefix_;
    int backoff_ms_;

    static CompletionBatch parse_response(const std::string& body, std::size_t expected) {
        const auto parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array())
            raise(Errc::EndpointError, "malformed completion response");
        CompletionBatch batch;
        for (const auto& choice : parsed["choices"]) {
            if (!choice.contains("message") || !choice["message"].contains("content"))
                raise(Errc::EndpointError, "choice without message content");
            batch.texts.push_back(choice["message"]["content"].get<std::string>());
        }
        if (batch.texts.size() < expected)
            raise(Errc::EndpointError, "endpoint returned " + std::to_string(batch.texts.size()) +
                                           " choices, expected " + std::to_string(expected));
        if (parsed.contains("usage")) {
            batch.prompt_tokens = parsed["usage"].value("prompt_tokens", -1);
            batch.completion_tokens = parsed["usage"].value("completion_tokens", -1);
        }
        return batch;
    }
};

}  // namespace misinfo
