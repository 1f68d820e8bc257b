// misinfo: command-line driver for the misinformation-propagation harness.
//
// Pipeline: ingest -> perturb -> run -> grade -> report, with inject (prefix
// preview), ftdata (fine-tuning corpus synthesis), and agreement (annotator
// statistics) on the side.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "misinfo/behavior.hpp"
#include "misinfo/endpoint.hpp"
#include "misinfo/harness.hpp"
#include "misinfo/ingest.hpp"
#include "misinfo/jsonl.hpp"
#include "misinfo/metrics.hpp"
#include "misinfo/prompts.hpp"

using namespace misinfo;

namespace {

// --- configuration plumbing: config file < flags < environment -------------

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::map<std::string, std::string> out;
    if (path.empty()) return out;
    std::ifstream in(path);
    if (!in) raise(Errc::BadFormat, "cannot read config file " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\"");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\"");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) out[key] = value;
    }
    return out;
}

struct Settings {
    std::map<std::string, std::string> config;

    std::string resolve(const std::string& key, const std::string& env_var,
                        const std::string& flag_value) const {
        if (!env_var.empty()) {
            if (const char* env = std::getenv(env_var.c_str()); env && *env) return env;
        }
        if (!flag_value.empty()) return flag_value;
        if (auto it = config.find(key); it != config.end()) return it->second;
        return {};
    }

    std::uint64_t resolve_seed(std::uint64_t flag_seed, bool flag_given) const {
        if (const char* env = std::getenv("HARNESS_SEED"); env && *env)
            return std::strtoull(env, nullptr, 10);
        if (flag_given) return flag_seed;
        if (auto it = config.find("seed"); it != config.end())
            return std::strtoull(it->second.c_str(), nullptr, 10);
        return 0;
    }
};

[[noreturn]] void die(Errc code, const std::string& message) {
    nlohmann::json err = {{"error", errc_name(code)}, {"message", message}};
    std::cerr << err.dump() << "\n";
    std::exit(1);
}

MockParams parse_mock_params(const std::string& spec) {
    MockParams p;
    std::stringstream ss(spec);
    std::string kv;
    while (std::getline(ss, kv, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const double value = std::strtod(kv.c_str() + eq + 1, nullptr);
        if (key == "p_follow") p.p_follow = value;
        else if (key == "p_corr") p.p_corr = value;
        else if (key == "p_factual") p.p_factual = value;
        else if (key == "p_solve") p.p_solve = value;
        else raise(Errc::BadFormat, "unknown mock parameter: " + key);
    }
    return p;
}

std::vector<TestItem> load_items(const std::string& path) {
    std::vector<TestItem> items;
    for (const auto& row : load_jsonl(path)) items.push_back(item_from_json(row));
    return items;
}

// Source-native inputs: JSONL, a JSON array, or headered CSV.
std::vector<nlohmann::json> load_raw_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::BadFormat, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string body = ss.str();
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};

    std::vector<nlohmann::json> rows;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        std::stringstream lines(body);
        std::string line;
        std::vector<std::string> header;
        while (std::getline(lines, line)) {
            while (!line.empty() && (line.back() == '\r')) line.pop_back();
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::string cell;
            bool quoted = false;
            for (char c : line) {
                if (c == '"') quoted = !quoted;
                else if (c == ',' && !quoted) {
                    cells.push_back(cell);
                    cell.clear();
                } else cell += c;
            }
            cells.push_back(cell);
            if (header.empty()) {
                header = cells;
                continue;
            }
            nlohmann::json row;
            for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
                row[header[i]] = cells[i];
            rows.push_back(std::move(row));
        }
        return rows;
    }
    if (body[first] == '[') {
        nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_array())
            raise(Errc::BadFormat, "expected a JSON array in " + path);
        for (const auto& row : parsed) rows.push_back(row);
        return rows;
    }
    return load_jsonl(path);
}

RawRecord to_raw_record(Source source, const nlohmann::json& row) {
    RawRecord rec;
    rec.source = source;
    for (const auto& [key, value] : row.items())
        rec.fields[key] = value.is_string() ? value.get<std::string>() : value.dump();
    return rec;
}

RunManifest make_manifest(const std::string& command, const Settings& settings,
                          std::uint64_t seed, const std::string& endpoint_id,
                          const std::string& setting, const std::string& input_path) {
    RunManifest m;
    m.command = command;
    std::string config_blob;
    for (const auto& [k, v] : settings.config) config_blob += k + "=" + v + "\n";
    m.config_hash = hex64(fnv1a64(config_blob));
    m.seed = seed;
    m.endpoint_id = endpoint_id;
    m.setting = setting;
    m.dataset_hash = hex64(file_hash(input_path));
    m.created_at = iso8601_now();
    return m;
}

// Graded rows grouped into per-question sample bit vectors.
struct GradedFile {
    std::map<std::string, std::vector<std::pair<int, bool>>> by_id;

    static GradedFile load(const std::string& path) {
        GradedFile g;
        for (const auto& row : load_jsonl(path)) {
            const std::string id = row.at("id").get<std::string>();
            const int sample = row.value("sample", 0);
            g.by_id[id].push_back({sample, row.at("correct").get<bool>()});
        }
        for (auto& [id, bits] : g.by_id) std::sort(bits.begin(), bits.end());
        return g;
    }

    std::vector<std::uint8_t> bits_for(const std::string& id) const {
        std::vector<std::uint8_t> out;
        if (auto it = by_id.find(id); it != by_id.end())
            for (const auto& [sample, ok] : it->second) out.push_back(ok ? 1 : 0);
        return out;
    }
};

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const Settings& settings, const std::string& source_name_str,
               const std::vector<std::string>& inputs, const std::string& output,
               int min_steps, bool no_prefilter, const std::string& mock_spec,
               const std::string& endpoint_url, bool solver_check, std::uint64_t seed) {
    const Source source = source_from_name(source_name_str);
    std::vector<RawRecord> records;
    for (const auto& path : inputs)
        for (const auto& row : load_raw_rows(path)) records.push_back(to_raw_record(source, row));

    IngestBatch batch = ingest_stream(records);
    if (!records.empty() && batch.items.empty()) {
        for (const auto& d : batch.dropped)
            if (d.reason == "MissingColumn")
                die(Errc::MissingColumn, "no record carried the required columns for source '" +
                                             source_name_str + "'");
    }

    std::vector<TestItem> items = batch.items;
    std::vector<DropLog> dropped = batch.dropped;
    if (!no_prefilter) {
        PrefilterResult pf = prefilter(items, min_steps);
        items = pf.kept;
        dropped.insert(dropped.end(), pf.dropped.begin(), pf.dropped.end());
    }

    if (solver_check) {
        if (mock_spec.empty() && endpoint_url.empty())
            die(Errc::BadFormat, "--solver-check needs --mock or --endpoint");
        std::unique_ptr<Endpoint> ep;
        if (!mock_spec.empty()) ep = std::make_unique<MockEndpoint>(parse_mock_params(mock_spec));
        else
            ep = std::make_unique<HttpEndpoint>(
                endpoint_url, settings.resolve("api_key", "HARNESS_API_KEY", ""), "solver");
        SamplingConfig one;
        one.n_samples = 1;
        RunOptions opts;
        opts.seed = seed;
        auto transcripts = run_condition(items, Setting::Original, *ep, one, opts);
        std::vector<TestItem> kept;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (grade(transcripts[i].text, items[i].gold_answer).correct) kept.push_back(items[i]);
            else dropped.push_back({items[i].id, "solver_check_failed"});
        }
        items = std::move(kept);
    }

    std::vector<nlohmann::json> rows;
    for (const auto& item : items) rows.push_back(item_to_json(item));
    write_jsonl(output, "items", rows);
    write_manifest(output, make_manifest("ingest", settings, seed, "", "",
                                         inputs.empty() ? "" : inputs.front()));

    if (records.empty()) std::cerr << "warning: no input records\n";
    std::cerr << "ingested " << items.size() << " items, dropped " << dropped.size() << "\n";
    for (const auto& d : dropped) std::cerr << "  drop " << d.id << ": " << d.reason << "\n";
    return 0;
}

int cmd_perturb(const Settings& settings, const std::string& items_path,
                const std::string& output, const std::string& kinds_csv, std::uint64_t seed,
                int edits, bool with_alt) {
    std::vector<PerturbKind> kinds;
    std::stringstream ss(kinds_csv);
    std::string k;
    while (std::getline(ss, k, ',')) {
        if (k == "value") kinds.push_back(PerturbKind::ValueMod);
        else if (k == "op") kinds.push_back(PerturbKind::OperatorAlt);
        else if (k == "swap") kinds.push_back(PerturbKind::OperandSwap);
        else die(Errc::BadFormat, "unknown kind: " + k + " (expected value,op,swap)");
    }

    std::vector<TestItem> items = load_items(items_path);
    std::vector<nlohmann::json> rows;
    std::map<std::string, int> kind_counts;
    int skipped = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        TestItem& item = items[i];
        if (item.truthful_equations.empty()) {
            ++skipped;
            std::cerr << "  skip " << item.id << ": no truthful equations\n";
            continue;
        }
        const std::uint64_t item_seed = derive_seed(seed, i);
        Rng picker(derive_seed(item_seed, 0xE9));
        try {
            const std::size_t which = picker.uniform_index(item.truthful_equations.size());
            PerturbationRecord rec =
                edits > 1 ? perturb_multi(item.truthful_equations[which], kinds, edits, item_seed)
                          : perturb(item.truthful_equations[which], kinds, item_seed);
            item.misinfo = rec;
            if (with_alt) {
                for (std::uint64_t salt = 1; salt <= 8; ++salt) {
                    PerturbationRecord alt = perturb(item.truthful_equations[which], kinds,
                                                     derive_seed(item_seed, salt));
                    if (alt.perturbed.raw != rec.perturbed.raw) {
                        item.alt_misinfo = alt;
                        break;
                    }
                }
            }
            ++kind_counts[perturb_kind_name(rec.kind)];
            rows.push_back(item_to_json(item));
        } catch (const Error& e) {
            ++skipped;
            std::cerr << "  skip " << item.id << ": " << e.what() << "\n";
        }
    }
    write_jsonl(output, "items", rows);
    write_manifest(output, make_manifest("perturb", settings, seed, "", "", items_path));
    std::cerr << "perturbed " << rows.size() << " items, skipped " << skipped << "; kinds:";
    for (const auto& [name, count] : kind_counts) std::cerr << " " << name << "=" << count;
    std::cerr << "\n";
    return 0;
}

int cmd_run(const Settings& settings, const std::string& items_path, const std::string& output,
            const std::string& setting_str, const std::string& mock_spec,
            const std::string& endpoint_flag, const std::string& model_flag,
            SamplingConfig sampling, const std::string& behavior_str, double position,
            const std::string& from_transcripts, bool classify_flag, int concurrency,
            std::uint64_t seed, bool no_prefix_support) {
    const Setting setting = setting_from_name(setting_str);
    std::vector<TestItem> items = load_items(items_path);

    const std::string endpoint_url = settings.resolve("endpoint", "HARNESS_ENDPOINT", endpoint_flag);
    const std::string api_key = settings.resolve("api_key", "HARNESS_API_KEY", "");
    const std::string model = settings.resolve("model", "", model_flag);

    std::unique_ptr<Endpoint> endpoint;
    if (!mock_spec.empty()) {
        endpoint = std::make_unique<MockEndpoint>(parse_mock_params(mock_spec));
    } else if (!endpoint_url.empty()) {
        endpoint = std::make_unique<HttpEndpoint>(endpoint_url, api_key, model,
                                                  !no_prefix_support);
    } else {
        die(Errc::BadFormat, "run needs --mock or an endpoint (--endpoint / HARNESS_ENDPOINT)");
    }

    RunOptions opts;
    opts.seed = seed;
    opts.concurrency = concurrency;

    // Controlled correction study: force the assistant prefix.
    std::map<std::pair<std::string, int>, std::string> prefixes;
    if (!behavior_str.empty()) {
        const InjectBehavior behavior = inject_behavior_from_name(behavior_str);
        std::map<std::pair<std::string, int>, CoT> prior;
        if (!from_transcripts.empty()) {
            for (const auto& row : load_jsonl(from_transcripts)) {
                Transcript t = transcript_from_json(row);
                try {
                    prior[{t.item_id, t.sample}] = parse_cot(t.text);
                } catch (const Error&) {
                }
            }
        }
        for (const auto& item : items) {
            for (int s = 0; s < sampling.n_samples; ++s) {
                CoT cot;
                if (position > 0) {
                    auto it = prior.find({item.id, s});
                    if (it == prior.end())
                        die(Errc::BadFormat, "position > 0 needs --from-transcripts covering " +
                                                 item.id + " sample " + std::to_string(s));
                    cot = it->second;
                }
                prefixes[{item.id, s}] = inject_correction(cot, behavior, position, item);
            }
        }
        opts.prefix_for = [&prefixes](const TestItem& item, int sample) {
            return prefixes.at({item.id, sample});
        };
    }

    // Resume support: reuse completed (item, sample) pairs from the output
    // file, but only when their request hashes still match the work this
    // invocation would do; any drift invalidates the whole cache.
    std::vector<Transcript> existing;
    {
        std::ifstream probe(output);
        if (probe.good()) {
            for (const auto& row : load_jsonl(output)) existing.push_back(transcript_from_json(row));
        }
    }
    if (!existing.empty()) {
        std::map<std::string, const TestItem*> by_id;
        for (const auto& item : items) by_id[item.id] = &item;
        bool stale = false;
        for (const auto& t : existing) {
            auto it = by_id.find(t.item_id);
            if (it == by_id.end() || t.setting != setting_str) {
                stale = true;
                break;
            }
            auto [system, user] = prompts::build_prompt(*it->second, setting);
            std::string prefix;
            if (!behavior_str.empty()) {
                auto p = prefixes.find({t.item_id, t.sample});
                if (p == prefixes.end()) {
                    stale = true;
                    break;
                }
                prefix = p->second;
            }
            if (t.request_hash != request_hash(system, user, prefix, setting, t.item_id, t.sample,
                                               sampling)) {
                stale = true;
                break;
            }
        }
        if (stale) {
            std::cerr << "warning: cached transcripts in " << output
                      << " no longer match this request; rerunning from scratch\n";
            existing.clear();
        }
    }
    if (!existing.empty()) opts.existing = &existing;

    const bool fresh = existing.empty();
    std::ofstream sink_stream(output, fresh ? std::ios::trunc : std::ios::app);
    if (!sink_stream) die(Errc::BadFormat, "cannot write " + output);
    if (fresh) sink_stream << jsonl_header("transcripts").dump() << "\n";
    opts.sink = [&sink_stream](const Transcript& t) {
        sink_stream << transcript_to_json(t).dump() << "\n";
        sink_stream.flush();
    };

    auto transcripts = run_condition(items, setting, *endpoint, sampling, opts);
    write_manifest(output, make_manifest("run", settings, seed, endpoint->id(), setting_str,
                                         items_path));
    std::cerr << "ran " << transcripts.size() << " completions (" << existing.size()
              << " resumed)\n";

    if (classify_flag) {
        HeuristicVerifier verifier;
        std::map<std::string, const TestItem*> by_id;
        for (const auto& item : items) by_id[item.id] = &item;
        std::vector<nlohmann::json> labels;
        auto classify_all = [&](const std::vector<Transcript>& list) {
            for (const auto& t : list) {
                auto it = by_id.find(t.item_id);
                if (it == by_id.end()) continue;
                try {
                    CoT cot = parse_cot(t.text);
                    labels.push_back(label_to_json(t.item_id, t.sample,
                                                   classify(cot, *it->second, verifier)));
                } catch (const Error&) {
                }
            }
        };
        classify_all(existing);
        classify_all(transcripts);
        const std::string labels_path = output + ".labels.jsonl";
        write_jsonl(labels_path, "labels", labels);
        std::cerr << "classified " << labels.size() << " transcripts -> " << labels_path << "\n";
    }
    return 0;
}

int cmd_grade(const std::string& transcripts_path, const std::string& items_path,
              const std::string& input_path, const std::string& output) {
    std::vector<nlohmann::json> rows;
    if (!input_path.empty()) {
        for (const auto& row : load_jsonl(input_path)) {
            const GradeResult r = grade(row.at("claim").get<std::string>(),
                                        row.at("gold").get<std::string>());
            nlohmann::json out = {{"id", row.at("id")}, {"correct", r.correct}};
            if (row.contains("sample")) out["sample"] = row["sample"];
            if (r.claim_value) out["claim_value"] = *r.claim_value;
            if (r.gold_value) out["gold_value"] = *r.gold_value;
            rows.push_back(std::move(out));
        }
    } else {
        if (transcripts_path.empty() || items_path.empty())
            die(Errc::BadFormat, "grade needs --input, or --transcripts with --items");
        std::map<std::string, std::string> gold;
        for (const auto& item : load_items(items_path)) gold[item.id] = item.gold_answer;
        for (const auto& row : load_jsonl(transcripts_path)) {
            Transcript t = transcript_from_json(row);
            auto it = gold.find(t.item_id);
            if (it == gold.end()) continue;
            const GradeResult r = grade(t.text, it->second);
            nlohmann::json out = {{"id", t.item_id}, {"sample", t.sample},
                                  {"correct", r.correct}};
            if (r.claim_value) out["claim_value"] = *r.claim_value;
            if (r.gold_value) out["gold_value"] = *r.gold_value;
            rows.push_back(std::move(out));
        }
    }
    write_jsonl(output, "graded", rows);
    std::cerr << "graded " << rows.size() << " rows\n";
    return 0;
}

int cmd_report(const Settings& settings, const std::string& baseline_path,
               const std::string& identification_path,
               const std::vector<std::string>& condition_specs,
               const std::vector<std::string>& label_specs, const std::string& output_prefix,
               int bootstrap_n, std::uint64_t seed) {
    if (baseline_path.empty()) die(Errc::MissingBaseline, "report needs --baseline");
    if (condition_specs.empty()) die(Errc::MissingBaseline, "report needs at least one --condition");

    const GradedFile baseline = GradedFile::load(baseline_path);
    std::map<std::string, bool> identification;
    if (!identification_path.empty()) {
        for (const auto& row : load_jsonl(identification_path))
            identification[row.at("id").get<std::string>()] = row.at("correct").get<bool>();
    } else {
        std::cerr << "warning: no --identification file; using baseline sample 0\n";
    }

    auto split_spec = [](const std::string& spec) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            raise(Errc::BadFormat, "expected NAME=FILE, got: " + spec);
        return std::pair<std::string, std::string>(spec.substr(0, eq), spec.substr(eq + 1));
    };

    nlohmann::json report;
    report["metadata"] = {{"aggregation", "pooled"},
                          {"bootstrap_n", bootstrap_n},
                          {"seed", seed},
                          {"tool_version", kToolVersion},
                          {"identification",
                           identification_path.empty() ? "baseline sample 0" : "separate run"}};

    std::ostringstream md, md_bins;
    md << "| Setting | K-Acc (%) | 95% CI | vs. original |\n";
    md << "|---|---|---|---|\n";

    // Assemble per-question sample sets against the first condition to define
    // the knowledgeable subset once; conditions swap in their own bits.
    auto build_sets = [&](const GradedFile& condition) {
        std::vector<SampleSet> sets;
        for (const auto& [id, base_bits] : baseline.by_id) {
            SampleSet s;
            s.question_id = id;
            s.baseline_bits = baseline.bits_for(id);
            s.condition_bits = condition.bits_for(id);
            if (s.condition_bits.empty()) continue;
            if (auto it = identification.find(id); it != identification.end())
                s.identification_bit = it->second;
            else
                s.identification_bit = !s.baseline_bits.empty() && s.baseline_bits[0];
            sets.push_back(std::move(s));
        }
        return sets;
    };

    double original_estimate = 0.0;
    bool original_done = false;
    std::map<std::string, GradedFile> conditions;
    for (const auto& spec : condition_specs) {
        auto [name, path] = split_spec(spec);
        conditions.emplace(name, GradedFile::load(path));
    }

    for (const auto& [name, condition] : conditions) {
        std::vector<SampleSet> sets = knowledgeable_subset(build_sets(condition));
        if (sets.empty()) die(Errc::MissingBaseline, "knowledgeable subset is empty");

        if (!original_done) {
            // original-setting K-Acc from permuted baseline samples
            std::vector<SampleSet> permuted = sets;
            for (std::size_t i = 0; i < permuted.size(); ++i) {
                Rng rng(derive_seed(seed, i));
                auto perm = rng.permutation(permuted[i].baseline_bits.size());
                permuted[i].condition_bits.resize(permuted[i].baseline_bits.size());
                for (std::size_t k = 0; k < perm.size(); ++k)
                    permuted[i].condition_bits[k] = permuted[i].baseline_bits[perm[k]];
            }
            original_estimate = kacc_condition(permuted);
            auto [olo, ohi] = bootstrap_ci(permuted, bootstrap_n, 0.95, derive_seed(seed, 0xB0));
            report["settings"]["original"] = {{"kacc", original_estimate},
                                              {"ci", {olo, ohi}},
                                              {"n_questions", permuted.size()}};
            md << "| original | " << format_pct(original_estimate) << " | [" << format_pct(olo)
               << ", " << format_pct(ohi) << "] | - |\n";
            original_done = true;
        }

        const double estimate = kacc_condition(sets);
        auto [lo, hi] = bootstrap_ci(sets, bootstrap_n, 0.95, derive_seed(seed, fnv1a64(name)));
        const double decrease =
            relative_decrease(original_estimate * 100.0, estimate * 100.0);
        report["settings"][name] = {{"kacc", estimate},
                                    {"ci", {lo, hi}},
                                    {"relative_decrease", round2(decrease)},
                                    {"n_questions", sets.size()}};
        md << "| " << name << " | " << format_pct(estimate) << " | [" << format_pct(lo) << ", "
           << format_pct(hi) << "] | " << (decrease >= 0 ? "\\-" : "+")
           << format_pct(std::fabs(decrease) / 100.0) << "% |\n";

        // difficulty gradation: five bins over baseline accuracy
        if (sets.size() >= 5) {
            auto bins = difficulty_bins(sets, 5);
            std::map<int, std::vector<SampleSet>> by_bin;
            for (const auto& s : sets) by_bin[bins.at(s.question_id)].push_back(s);
            std::vector<double> xs, ys;
            nlohmann::json bin_rows = nlohmann::json::array();
            for (auto& [bin, members] : by_bin) {
                try {
                    const double bin_est = kacc_condition(members);
                    long long num = 0, den = 0;
                    for (const auto& s : members)
                        for (auto b : s.baseline_bits) {
                            ++den;
                            num += b ? 1 : 0;
                        }
                    const double bin_base =
                        den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
                    if (bin_base > 0) {
                        const double rel = relative_decrease(bin_base * 100.0, bin_est * 100.0);
                        xs.push_back(bin);
                        ys.push_back(rel);
                        bin_rows.push_back({{"bin", bin},
                                            {"n", members.size()},
                                            {"baseline_acc", bin_base},
                                            {"kacc", bin_est},
                                            {"relative_decrease", round2(rel)}});
                    }
                } catch (const Error&) {
                }
            }
            report["difficulty"][name]["bins"] = bin_rows;
            md_bins << "\n### Difficulty gradation: " << name
                    << " (bin 5 = easiest)\n\n| Bin | n | Baseline acc (%) | K-Acc (%) | "
                       "Decrease |\n|---|---|---|---|---|\n";
            for (const auto& row : bin_rows) {
                md_bins << "| " << row["bin"] << " | " << row["n"] << " | "
                        << format_pct(row["baseline_acc"].get<double>()) << " | "
                        << format_pct(row["kacc"].get<double>()) << " | "
                        << row["relative_decrease"] << "% |\n";
            }
            if (xs.size() >= 3) {
                try {
                    const PearsonResult pr = pearson(xs, ys);
                    report["difficulty"][name]["pearson"] = {{"r", pr.r}, {"p", pr.p}};
                    md_bins << "\nPearson (bin vs. relative decrease): r = " << round2(pr.r)
                            << ", p = " << round2(pr.p) << "\n";
                } catch (const Error&) {
                }
            }
        }
    }

    // Sankey flows per labeled condition
    for (const auto& spec : label_specs) {
        auto [name, path] = split_spec(spec);
        auto cond_it = conditions.find(name);
        if (cond_it == conditions.end())
            die(Errc::BadFormat, "--labels " + name + " has no matching --condition");
        std::map<std::pair<std::string, int>, bool> correct_by_key;
        for (const auto& [id, bits] : cond_it->second.by_id)
            for (const auto& [sample, ok] : bits) correct_by_key[{id, sample}] = ok;
        std::vector<BehaviorLabel> labels;
        std::vector<bool> correctness;
        for (const auto& row : load_jsonl(path)) {
            const std::string id = row.at("item_id").get<std::string>();
            const int sample = row.value("sample", 0);
            auto it = correct_by_key.find({id, sample});
            if (it == correct_by_key.end()) continue;
            labels.push_back(label_from_json(row));
            correctness.push_back(it->second);
        }
        FlowAggregate flows = aggregate_flows(labels, correctness);
        const std::string sankey_path = output_prefix + "_sankey_" + name + ".json";
        std::ofstream out(sankey_path, std::ios::trunc);
        out << to_sankey_json(flows).dump(2) << "\n";
        report["flows"][name] = {{"total", flows.total},
                                 {"corr", flows.corr},
                                 {"fcorr", flows.fcorr},
                                 {"follow", flows.follow},
                                 {"conserved", flows.conserved()}};
    }

    std::ofstream md_out(output_prefix + ".md", std::ios::trunc);
    md_out << md.str() << md_bins.str();
    std::ofstream json_out(output_prefix + ".json", std::ios::trunc);
    json_out << report.dump(2) << "\n";
    write_manifest(output_prefix, make_manifest("report", settings, seed, "", "", baseline_path));
    std::cout << md.str() << md_bins.str();
    return 0;
}

int cmd_inject(const std::string& items_path, const std::string& behavior_str, double position,
               const std::string& from_transcripts, const std::string& output) {
    const InjectBehavior behavior = inject_behavior_from_name(behavior_str);
    std::vector<TestItem> items = load_items(items_path);
    std::map<std::pair<std::string, int>, CoT> prior;
    if (!from_transcripts.empty()) {
        for (const auto& row : load_jsonl(from_transcripts)) {
            Transcript t = transcript_from_json(row);
            try {
                prior[{t.item_id, t.sample}] = parse_cot(t.text);
            } catch (const Error&) {
            }
        }
    }
    std::vector<nlohmann::json> rows;
    for (const auto& item : items) {
        if (prior.empty()) {
            rows.push_back({{"item_id", item.id},
                            {"sample", -1},
                            {"prefix", inject_correction(CoT{}, behavior, position, item)}});
            continue;
        }
        for (const auto& [key, cot] : prior) {
            if (key.first != item.id) continue;
            rows.push_back({{"item_id", item.id},
                            {"sample", key.second},
                            {"prefix", inject_correction(cot, behavior, position, item)}});
        }
    }
    write_jsonl(output, "prefixes", rows);
    std::cerr << "wrote " << rows.size() << " prefixes\n";
    return 0;
}

int cmd_ftdata(const Settings& settings, const std::string& items_path,
               const std::string& mock_spec, const std::string& endpoint_flag,
               const std::string& model_flag, const std::string& output, std::uint64_t seed) {
    std::vector<TestItem> items = load_items(items_path);
    const std::string endpoint_url = settings.resolve("endpoint", "HARNESS_ENDPOINT", endpoint_flag);
    std::unique_ptr<Endpoint> solver;
    if (!mock_spec.empty()) solver = std::make_unique<MockEndpoint>(parse_mock_params(mock_spec));
    else if (!endpoint_url.empty())
        solver = std::make_unique<HttpEndpoint>(
            endpoint_url, settings.resolve("api_key", "HARNESS_API_KEY", ""),
            settings.resolve("model", "", model_flag));
    else die(Errc::BadFormat, "ftdata needs --mock or an endpoint");

    FtSynthesis synth = synth_ft_data(items, *solver, seed);

    write_jsonl(output, "ft-chat", synth.records);
    std::vector<nlohmann::json> rejected;
    for (const auto& r : synth.rejections)
        rejected.push_back({{"item_id", r.item_id}, {"reason", r.reason}});
    write_jsonl(output + ".rejected.jsonl", "ft-rejections", rejected);

    nlohmann::json meta = {{"records", synth.records.size()},
                           {"rejections", synth.rejections.size()},
                           {"training", ft_training_metadata()}};
    std::ofstream meta_out(output + ".meta.json", std::ios::trunc);
    meta_out << meta.dump(2) << "\n";
    write_manifest(output, make_manifest("ftdata", settings, seed, solver->id(), "inst-corr",
                                         items_path));

    std::cerr << "kept " << synth.records.size() << " records, rejected "
              << synth.rejections.size() << "\n";
    if (!items.empty() && synth.records.empty())
        die(Errc::AllRejected, "solver produced no verifiable records; see " + output +
                                   ".rejected.jsonl");
    return 0;
}

int cmd_agreement(const std::string& ratings_path, const std::string& f1_gold,
                  const std::string& output) {
    const std::vector<AnnotationRow> rows = load_annotations_csv(ratings_path);
    if (rows.empty()) die(Errc::EmptyInput, "no annotation rows in " + ratings_path);

    std::set<std::string> category_set, annotator_set;
    for (const auto& r : rows) {
        category_set.insert(r.label);
        annotator_set.insert(r.annotator_id);
    }
    std::vector<std::string> categories(category_set.begin(), category_set.end());
    std::map<std::string, std::size_t> cat_index;
    for (std::size_t i = 0; i < categories.size(); ++i) cat_index[categories[i]] = i;

    std::map<std::string, std::vector<int>> matrix;
    std::map<std::string, std::map<std::string, std::string>> by_item_annotator;
    for (const auto& r : rows) {
        auto& row = matrix[r.item_id];
        row.resize(categories.size(), 0);
        ++row[cat_index[r.label]];
        by_item_annotator[r.item_id][r.annotator_id] = r.label;
    }
    std::vector<std::vector<int>> ratings;
    for (const auto& [id, row] : matrix) {
        auto padded = row;
        padded.resize(categories.size(), 0);
        ratings.push_back(padded);
    }
    const double kappa = fleiss_kappa(ratings);

    nlohmann::json out = {{"fleiss_kappa", kappa},
                          {"n_items", ratings.size()},
                          {"n_annotators", annotator_set.size()},
                          {"categories", categories}};

    if (!f1_gold.empty()) {
        nlohmann::json f1s;
        for (const auto& annotator : annotator_set) {
            if (annotator == f1_gold) continue;
            std::vector<std::string> pred, gold;
            for (const auto& [item, labels] : by_item_annotator) {
                auto p = labels.find(annotator);
                auto g = labels.find(f1_gold);
                if (p == labels.end() || g == labels.end()) continue;
                pred.push_back(p->second);
                gold.push_back(g->second);
            }
            if (!pred.empty()) f1s[annotator] = weighted_f1(pred, gold);
        }
        out["weighted_f1_vs"] = {{"gold", f1_gold}, {"scores", f1s}};
    }

    if (!output.empty()) {
        std::ofstream f(output, std::ios::trunc);
        f << out.dump(2) << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Misinformation-propagation harness for math chain-of-thought evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "key=value config file");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (HARNESS_SEED overrides)");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "convert raw dataset records to items");
    std::string ingest_source, ingest_out = "items.jsonl", ingest_mock, ingest_endpoint;
    std::vector<std::string> ingest_inputs;
    int ingest_min_steps = 5;
    bool ingest_no_prefilter = false, ingest_solver_check = false;
    ingest_cmd->add_option("--source", ingest_source, "mathqa|math|gsm8k|metamath")->required();
    ingest_cmd->add_option("inputs", ingest_inputs, "input files (JSON/JSONL/CSV)")->required();
    ingest_cmd->add_option("-o,--output", ingest_out, "items JSONL output");
    ingest_cmd->add_option("--min-steps", ingest_min_steps, "prefilter threshold (default 5)");
    ingest_cmd->add_flag("--no-prefilter", ingest_no_prefilter, "keep thin rationales");
    ingest_cmd->add_flag("--solver-check", ingest_solver_check,
                         "keep only items a solver endpoint answers correctly");
    ingest_cmd->add_option("--mock", ingest_mock, "mock solver parameters");
    ingest_cmd->add_option("--endpoint", ingest_endpoint, "solver endpoint URL");

    // perturb
    auto* perturb_cmd = app.add_subcommand("perturb", "inject misinformation into items");
    std::string perturb_items, perturb_out = "perturbed.jsonl", perturb_kinds = "value,op,swap";
    int perturb_edits = 1;
    bool perturb_alt = false;
    perturb_cmd->add_option("items", perturb_items, "items JSONL")->required();
    perturb_cmd->add_option("-o,--output", perturb_out, "output JSONL");
    perturb_cmd->add_option("--kinds", perturb_kinds, "subset of value,op,swap");
    perturb_cmd->add_option("--edits", perturb_edits, "same-kind edits per item (default 1)");
    perturb_cmd->add_flag("--alt", perturb_alt, "also produce alternative erroneous equations");

    // run
    auto* run_cmd = app.add_subcommand("run", "collect model completions");
    std::string run_items, run_out = "transcripts.jsonl", run_setting = "misinformed";
    std::string run_mock, run_endpoint, run_model, run_behavior, run_from;
    SamplingConfig run_sampling;
    double run_position = 0.0;
    int run_concurrency = 8;
    bool run_classify = false, run_no_prefix = false;
    run_cmd->add_option("--items", run_items, "items JSONL")->required();
    run_cmd->add_option("-o,--output", run_out, "transcript JSONL (append/resume)");
    run_cmd->add_option("--setting", run_setting, "original|misinformed|inst-corr|inst-fllw");
    run_cmd->add_option("--mock", run_mock,
                        "mock parameters p_follow=..,p_corr=..,p_factual=..,p_solve=..");
    run_cmd->add_option("--endpoint", run_endpoint, "chat-completion endpoint base URL");
    run_cmd->add_option("--model", run_model, "model name for the endpoint");
    run_cmd->add_option("--samples", run_sampling.n_samples, "samples per item (default 5)");
    run_cmd->add_option("--temperature", run_sampling.temperature, "sampling temperature");
    run_cmd->add_option("--top-p", run_sampling.top_p, "nucleus sampling mass");
    run_cmd->add_option("--top-k", run_sampling.top_k, "top-k cutoff");
    run_cmd->add_option("--behavior", run_behavior, "forced prefix: fcorr|nfcorr|ncorr");
    run_cmd->add_option("--position", run_position, "correction position percent (0..100)");
    run_cmd->add_option("--from-transcripts", run_from, "prior misinformed transcripts");
    run_cmd->add_flag("--classify", run_classify, "label behaviors with the offline verifier");
    run_cmd->add_option("--concurrency", run_concurrency, "max in-flight requests (default 8)");
    run_cmd->add_flag("--no-prefix-support", run_no_prefix,
                      "declare that the endpoint cannot continue assistant prefixes");

    // grade
    auto* grade_cmd = app.add_subcommand("grade", "score final answers");
    std::string grade_transcripts, grade_items, grade_input, grade_out = "graded.jsonl";
    grade_cmd->add_option("--transcripts", grade_transcripts, "transcript JSONL");
    grade_cmd->add_option("--items", grade_items, "items JSONL with gold answers");
    grade_cmd->add_option("--input", grade_input, "direct JSONL {id, claim, gold}");
    grade_cmd->add_option("-o,--output", grade_out, "graded JSONL output");

    // report
    auto* report_cmd = app.add_subcommand("report", "K-Acc tables, bins, and Sankey flows");
    std::string report_baseline, report_ident, report_prefix = "report";
    std::vector<std::string> report_conditions, report_labels;
    int report_bootstrap = 1000;
    report_cmd->add_option("--baseline", report_baseline, "graded original-setting JSONL");
    report_cmd->add_option("--identification", report_ident, "graded identification run JSONL");
    report_cmd->add_option("--condition", report_conditions, "NAME=GRADED_JSONL (repeatable)");
    report_cmd->add_option("--labels", report_labels, "NAME=LABELS_JSONL for Sankey output");
    report_cmd->add_option("--bootstrap", report_bootstrap, "bootstrap replicates (default 1000)");
    report_cmd->add_option("-o,--output", report_prefix, "output prefix");

    // inject
    auto* inject_cmd = app.add_subcommand("inject", "preview forced correction prefixes");
    std::string inject_items, inject_behavior, inject_from, inject_out = "prefixes.jsonl";
    double inject_position = 0.0;
    inject_cmd->add_option("--items", inject_items, "items JSONL")->required();
    inject_cmd->add_option("--behavior", inject_behavior, "fcorr|nfcorr|ncorr")->required();
    inject_cmd->add_option("--position", inject_position, "position percent (0..100)");
    inject_cmd->add_option("--from-transcripts", inject_from, "prior transcripts to truncate");
    inject_cmd->add_option("-o,--output", inject_out, "prefix JSONL output");

    // ftdata
    auto* ft_cmd = app.add_subcommand("ftdata", "synthesize early-correction tuning data");
    std::string ft_items, ft_mock, ft_endpoint, ft_model, ft_out = "ftdata.jsonl";
    ft_cmd->add_option("--items", ft_items, "items JSONL")->required();
    ft_cmd->add_option("--mock", ft_mock, "mock solver parameters");
    ft_cmd->add_option("--endpoint", ft_endpoint, "solver endpoint base URL");
    ft_cmd->add_option("--model", ft_model, "solver model name");
    ft_cmd->add_option("-o,--output", ft_out, "chat-format JSONL output");

    // agreement
    auto* agree_cmd = app.add_subcommand("agreement", "annotator agreement statistics");
    std::string agree_ratings, agree_gold, agree_out;
    agree_cmd->add_option("--ratings", agree_ratings, "CSV item_id,annotator_id,label")
        ->required();
    agree_cmd->add_option("--f1-gold", agree_gold, "annotator id to treat as ground truth");
    agree_cmd->add_option("-o,--output", agree_out, "JSON output path");

    CLI11_PARSE(app, argc, argv);

    try {
        Settings settings;
        settings.config = load_config_file(config_path);
        const std::uint64_t master_seed = settings.resolve_seed(seed, seed_opt->count() > 0);

        if (*ingest_cmd)
            return cmd_ingest(settings, ingest_source, ingest_inputs, ingest_out,
                              ingest_min_steps, ingest_no_prefilter, ingest_mock, ingest_endpoint,
                              ingest_solver_check, master_seed);
        if (*perturb_cmd)
            return cmd_perturb(settings, perturb_items, perturb_out, perturb_kinds, master_seed,
                               perturb_edits, perturb_alt);
        if (*run_cmd)
            return cmd_run(settings, run_items, run_out, run_setting, run_mock, run_endpoint,
                           run_model, run_sampling, run_behavior, run_position, run_from,
                           run_classify, run_concurrency, master_seed, run_no_prefix);
        if (*grade_cmd) return cmd_grade(grade_transcripts, grade_items, grade_input, grade_out);
        if (*report_cmd)
            return cmd_report(settings, report_baseline, report_ident, report_conditions,
                              report_labels, report_prefix, report_bootstrap, master_seed);
        if (*inject_cmd)
            return cmd_inject(inject_items, inject_behavior, inject_position, inject_from,
                              inject_out);
        if (*ft_cmd)
            return cmd_ftdata(settings, ft_items, ft_mock, ft_endpoint, ft_model, ft_out,
                              master_seed);
        if (*agree_cmd) return cmd_agreement(agree_ratings, agree_gold, agree_out);
    } catch (const Error& e) {
        die(e.code(), e.what());
    } catch (const std::exception& e) {
        die(Errc::BadFormat, e.what());
    }
    return 0;
}
