#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "misinfo/endpoint.hpp"
#include "misinfo/grader.hpp"
#include "misinfo/item.hpp"
#include "misinfo/prompts.hpp"

namespace misinfo {

// Splits a completion into numbered steps. Steps start at /^\s*\d+\./,
// continuation lines attach to the step above, and numbering is rewritten to
// a consecutive 1..N.
inline CoT parse_cot(const std::string& text) {
    CoT cot;
    std::vector<std::string> texts;
    std::vector<int> original_numbers;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);

        std::size_t i = 0;
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t d = i;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        const bool starts_step = d > i && d < line.size() && line[d] == '.';

        if (starts_step) {
            std::size_t body = d + 1;
            if (body < line.size() && line[body] == ' ') ++body;
            texts.push_back(line.substr(body));
            original_numbers.push_back(std::atoi(line.substr(i, d - i).c_str()));
        } else if (!texts.empty() && !line.empty()) {
            texts.back() += "\n" + line;
        }

        if (eol == text.size()) break;
        pos = eol + 1;
    }

    if (texts.empty()) raise(Errc::NoSteps, "no numbered steps in completion");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        cot.steps.push_back({static_cast<int>(i + 1), texts[i]});
        if (original_numbers[i] != static_cast<int>(i + 1)) cot.renumbered = true;
    }
    cot.final_answer_text = cot.steps.back().text;
    cot.missing_final_answer = cot.final_answer_text.find(kAnswerDelimiter) == std::string::npos;
    return cot;
}

enum class InjectBehavior { FCorr, NFCorr, NCorr };

inline const char* inject_behavior_name(InjectBehavior b) {
    switch (b) {
        case InjectBehavior::FCorr: return "fcorr";
        case InjectBehavior::NFCorr: return "nfcorr";
        case InjectBehavior::NCorr: return "ncorr";
    }
    return "?";
}

inline InjectBehavior inject_behavior_from_name(const std::string& name) {
    if (name == "fcorr") return InjectBehavior::FCorr;
    if (name == "nfcorr") return InjectBehavior::NFCorr;
    if (name == "ncorr") return InjectBehavior::NCorr;
    raise(Errc::BadFormat, "unknown behavior: " + name);
}

// Keeps steps 1..floor(N*p/100) of the misinformed reasoning verbatim and
// appends the behavior step as floor(N*p/100)+1. The result is the assistant
// prefix the model is forced to continue.
inline std::string inject_correction(const CoT& cot, InjectBehavior behavior,
                                     double position_percent, const TestItem& item) {
    if (position_percent < 0.0 || position_percent > 100.0)
        raise(Errc::PositionOutOfRange,
              "position " + std::to_string(position_percent) + " outside [0, 100]");
    const int n = cot.step_count();
    if (n == 0 && position_percent > 0.0)
        raise(Errc::NoSteps, "a positive position needs reasoning steps to truncate");

    const int keep = static_cast<int>(std::floor(n * position_percent / 100.0));

    std::string step_text;
    switch (behavior) {
        case InjectBehavior::FCorr: step_text = prompts::fcorr_step_text(item); break;
        case InjectBehavior::NFCorr: step_text = prompts::nfcorr_step_text(item); break;
        case InjectBehavior::NCorr: step_text = prompts::ncorr_step_text(); break;
    }

    std::string out;
    for (int i = 0; i < keep; ++i) {
        out += std::to_string(i + 1) + ". " + cot.steps[static_cast<std::size_t>(i)].text + "\n";
    }
    out += std::to_string(keep + 1) + ". " + step_text;
    return out;
}

struct Transcript {
    std::string item_id;
    int sample = 0;
    std::string setting;
    std::uint64_t request_hash = 0;
    std::string text;
    double latency_ms = 0.0;
    long long prompt_tokens = -1, completion_tokens = -1;
};

inline std::uint64_t request_hash(const std::string& system, const std::string& user,
                                  const std::string& prefix, Setting setting,
                                  const std::string& item_id, int sample,
                                  const SamplingConfig& sampling) {
    std::string key = system;
    key += '\x1f';
    key += user;
    key += '\x1f';
    key += prefix;
    key += '\x1f';
    key += setting_name(setting);
    key += '\x1f';
    key += item_id;
    key += '\x1f';
    key += std::to_string(sample);
    key += '\x1f';
    key += format_decimal(sampling.temperature) + "," + format_decimal(sampling.top_p) + "," +
           std::to_string(sampling.top_k);
    return fnv1a64(key);
}

struct RunOptions {
    std::uint64_t seed = 0;
    int concurrency = 8;
    // Per-(item, sample) forced assistant prefix; null means none.
    std::function<std::string(const TestItem&, int sample)> prefix_for;
    // Already-persisted transcripts; matching (item, sample, setting) are skipped.
    const std::vector<Transcript>* existing = nullptr;
    // Called under a lock as each transcript completes (append-only persistence).
    std::function<void(const Transcript&)> sink;
};

// Runs every (item, sample) pair against the endpoint with bounded
// parallelism. Results are keyed by (item id, sample index); completion order
// never changes the output order.
inline std::vector<Transcript> run_condition(const std::vector<TestItem>& items, Setting setting,
                                             Endpoint& endpoint, const SamplingConfig& sampling,
                                             const RunOptions& opts = {}) {
    struct Task {
        const TestItem* item = nullptr;
        std::size_t item_index = 0;
        std::vector<int> samples;
        std::string system, user, prefix;
        std::vector<std::size_t> result_slots;
    };

    auto already_done = [&](const std::string& id, int sample) {
        if (!opts.existing) return false;
        for (const auto& t : *opts.existing)
            if (t.item_id == id && t.sample == sample && t.setting == setting_name(setting))
                return true;
        return false;
    };

    std::vector<Task> tasks;
    std::size_t n_results = 0;
    bool any_prefix = false;
    for (std::size_t ii = 0; ii < items.size(); ++ii) {
        const TestItem& item = items[ii];
        auto [system, user] = prompts::build_prompt(item, setting);
        if (opts.prefix_for) {
            for (int k = 0; k < sampling.n_samples; ++k) {
                if (already_done(item.id, k)) continue;
                Task t;
                t.item = &item;
                t.item_index = ii;
                t.samples = {k};
                t.system = system;
                t.user = user;
                t.prefix = opts.prefix_for(item, k);
                any_prefix = any_prefix || !t.prefix.empty();
                t.result_slots = {n_results++};
                tasks.push_back(std::move(t));
            }
        } else {
            Task t;
            t.item = &item;
            t.item_index = ii;
            t.system = system;
            t.user = user;
            for (int k = 0; k < sampling.n_samples; ++k) {
                if (already_done(item.id, k)) continue;
                t.samples.push_back(k);
                t.result_slots.push_back(n_results++);
            }
            if (!t.samples.empty()) tasks.push_back(std::move(t));
        }
    }

    if (any_prefix && !endpoint.supports_assistant_prefix())
        raise(Errc::PrefixUnsupported,
              "endpoint " + endpoint.id() + " cannot continue a forced assistant prefix");

    std::vector<Transcript> results(n_results);
    std::atomic<std::size_t> next{0};
    std::mutex sink_mutex;
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t ti = next.fetch_add(1);
            if (ti >= tasks.size()) return;
            {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (first_error) return;
            }
            const Task& task = tasks[ti];
            try {
                CompletionRequest req;
                req.messages = {{"system", task.system}, {"user", task.user}};
                if (!task.prefix.empty()) req.messages.push_back({"assistant", task.prefix});
                req.sampling = sampling;
                req.sampling.n_samples = static_cast<int>(task.samples.size());
                req.item = task.item;
                req.setting = setting;
                req.forced_prefix = task.prefix;
                req.base_seed = derive_seed(opts.seed, task.item_index);
                req.sample_indices = task.samples;

                const auto start = std::chrono::steady_clock::now();
                CompletionBatch batch = endpoint.complete(req);
                const double ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();

                for (std::size_t j = 0; j < task.samples.size(); ++j) {
                    Transcript t;
                    t.item_id = task.item->id;
                    t.sample = task.samples[j];
                    t.setting = setting_name(setting);
                    t.request_hash = request_hash(task.system, task.user, task.prefix, setting,
                                                  task.item->id, task.samples[j], sampling);
                    t.text = task.prefix + batch.texts[j];
                    t.latency_ms = ms;
                    t.prompt_tokens = batch.prompt_tokens;
                    t.completion_tokens = batch.completion_tokens;
                    results[task.result_slots[j]] = t;
                    if (opts.sink) {
                        std::lock_guard<std::mutex> lk(sink_mutex);
                        opts.sink(results[task.result_slots[j]]);
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_workers =
        std::max(1, std::min<int>(opts.concurrency, static_cast<int>(tasks.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

// ---------------------------------------------------------------------------
// Fine-tuning data synthesis
// ---------------------------------------------------------------------------

struct FtRejection {
    std::string item_id;
    std::string reason;
};

struct FtSynthesis {
    std::vector<nlohmann::json> records;  // chat-format {messages: [...]}
    std::vector<FtRejection> rejections;
};

// Training parameters recorded alongside the dataset (the tuning job itself is
// out of scope here).
inline nlohmann::json ft_training_metadata() {
    return {{"n_epochs", 3}, {"batch_size", 2}, {"learning_rate_multiplier", 1.8}};
}

// Builds instruction-response pairs whose assistant message starts with a
// factual correction; the solver endpoint writes the remaining steps, and a
// record is kept only when the final step grades correct against gold.
inline FtSynthesis synth_ft_data(const std::vector<TestItem>& items, Endpoint& solver,
                                 std::uint64_t seed = 0) {
    if (!solver.supports_assistant_prefix())
        raise(Errc::PrefixUnsupported, "FT synthesis forces the first assistant step");
    FtSynthesis out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const TestItem& item = items[i];
        auto [system, user] = prompts::build_prompt(item, Setting::InstCorr);
        const std::string prefix = "1. " + prompts::fcorr_step_text(item);

        CompletionRequest req;
        req.messages = {{"system", system}, {"user", user}, {"assistant", prefix}};
        req.sampling.n_samples = 1;
        req.item = &item;
        req.setting = Setting::InstCorr;
        req.forced_prefix = prefix;
        req.base_seed = derive_seed(seed, i);
        req.sample_indices = {0};

        std::string full;
        try {
            full = prefix + solver.complete(req).texts.at(0);
        } catch (const Error& e) {
            raise(Errc::SolverError, std::string("solver failed on ") + item.id + ": " + e.what());
        }

        const GradeResult graded = grade(full, item.gold_answer);
        if (!graded.correct) {
            std::string reason = "final answer incorrect";
            if (graded.claim_value) reason += " (claimed " + format_decimal(*graded.claim_value) + ")";
            out.rejections.push_back({item.id, reason});
            continue;
        }
        out.records.push_back({{"messages",
                                {{{"role", "system"}, {"content", system}},
                                 {{"role", "user"}, {"content", user}},
                                 {{"role", "assistant"}, {"content", full}}}}});
    }
    return out;
}

}  // namespace misinfo
