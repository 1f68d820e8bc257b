#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "misinfo/behavior.hpp"
#include "misinfo/harness.hpp"
#include "misinfo/item.hpp"
#include "misinfo/metrics.hpp"

namespace misinfo {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSONL files with a {"schema": ..., "version": 1} header line
// ---------------------------------------------------------------------------

inline json jsonl_header(const std::string& schema) {
    return {{"schema", schema}, {"version", 1}};
}

inline void write_jsonl(const std::string& path, const std::string& schema,
                        const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::BadFormat, "cannot write " + path);
    out << jsonl_header(schema).dump() << "\n";
    for (const auto& row : rows) out << row.dump() << "\n";
}

// Reads every data row, skipping a leading header record when present.
inline std::vector<json> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::BadFormat, "cannot read " + path);
    std::vector<json> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded())
            raise(Errc::BadFormat, "bad JSON line in " + path + ": " + line.substr(0, 80));
        if (first && row.is_object() && row.contains("schema") && row.contains("version")) {
            first = false;
            continue;
        }
        first = false;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Record serialization
// ---------------------------------------------------------------------------

inline json perturbation_to_json(const PerturbationRecord& rec) {
    return {{"kind", perturb_kind_name(rec.kind)},
            {"original", rec.original.raw},
            {"perturbed", rec.perturbed.raw},
            {"edit_lines", rec.edit_lines},
            {"seed", rec.seed},
            {"mutated_segment", rec.mutated_segment},
            {"mutated_side", rec.mutated_side}};
}

inline PerturbationRecord perturbation_from_json(const json& j) {
    PerturbationRecord rec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "value") rec.kind = PerturbKind::ValueMod;
    else if (kind == "op") rec.kind = PerturbKind::OperatorAlt;
    else if (kind == "swap") rec.kind = PerturbKind::OperandSwap;
    else raise(Errc::BadFormat, "unknown perturbation kind: " + kind);
    rec.original = parse_equation(j.at("original").get<std::string>());
    rec.perturbed = parse_equation(j.at("perturbed").get<std::string>());
    rec.edit_lines = j.at("edit_lines").get<std::vector<std::string>>();
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.mutated_segment = j.value("mutated_segment", std::size_t{0});
    rec.mutated_side = j.value("mutated_side", 0);
    return rec;
}

inline json item_to_json(const TestItem& item) {
    json j = {{"id", item.id},
              {"source", item.source_dataset},
              {"question", item.question},
              {"gold_answer", item.gold_answer}};
    if (!item.rationale.empty()) j["rationale"] = item.rationale;
    if (!item.truthful_equations.empty()) {
        json eqs = json::array();
        for (const auto& eq : item.truthful_equations) eqs.push_back(eq.raw);
        j["truthful_equations"] = eqs;
    }
    if (item.misinfo) j["misinfo"] = perturbation_to_json(*item.misinfo);
    if (item.alt_misinfo) j["alt_misinfo"] = perturbation_to_json(*item.alt_misinfo);
    if (!item.operations.empty()) j["operations"] = item.operations;
    return j;
}

inline TestItem item_from_json(const json& j) {
    TestItem item;
    item.id = j.at("id").get<std::string>();
    item.source_dataset = j.value("source", "");
    item.question = j.at("question").get<std::string>();
    item.gold_answer = j.value("gold_answer", "");
    item.rationale = j.value("rationale", "");
    if (j.contains("truthful_equations"))
        for (const auto& raw : j["truthful_equations"])
            item.truthful_equations.push_back(parse_equation(raw.get<std::string>()));
    if (j.contains("misinfo")) item.misinfo = perturbation_from_json(j["misinfo"]);
    if (j.contains("alt_misinfo")) item.alt_misinfo = perturbation_from_json(j["alt_misinfo"]);
    if (j.contains("operations"))
        item.operations = j["operations"].get<std::vector<std::string>>();
    return item;
}

inline json transcript_to_json(const Transcript& t) {
    json j = {{"item_id", t.item_id},
              {"sample", t.sample},
              {"setting", t.setting},
              {"request_hash", t.request_hash},
              {"text", t.text}};
    if (t.latency_ms > 0) j["latency_ms"] = t.latency_ms;
    if (t.prompt_tokens >= 0) j["prompt_tokens"] = t.prompt_tokens;
    if (t.completion_tokens >= 0) j["completion_tokens"] = t.completion_tokens;
    return j;
}

inline Transcript transcript_from_json(const json& j) {
    Transcript t;
    t.item_id = j.at("item_id").get<std::string>();
    t.sample = j.at("sample").get<int>();
    t.setting = j.at("setting").get<std::string>();
    t.request_hash = j.value("request_hash", std::uint64_t{0});
    t.text = j.at("text").get<std::string>();
    t.latency_ms = j.value("latency_ms", 0.0);
    t.prompt_tokens = j.value("prompt_tokens", -1LL);
    t.completion_tokens = j.value("completion_tokens", -1LL);
    return t;
}

inline json label_to_json(const std::string& item_id, int sample, const BehaviorLabel& l) {
    json j = {{"item_id", item_id},
              {"sample", sample},
              {"following", l.following},
              {"correction", l.correction == Correction::Corr ? "corr" : "ncorr"},
              {"positions", l.positions},
              {"position_percents", l.position_percents}};
    if (l.factuality)
        j["factuality"] = *l.factuality == Factuality::FCorr ? "fcorr" : "nfcorr";
    return j;
}

inline BehaviorLabel label_from_json(const json& j) {
    BehaviorLabel l;
    l.following = j.at("following").get<bool>();
    l.correction =
        j.at("correction").get<std::string>() == "corr" ? Correction::Corr : Correction::NCorr;
    if (j.contains("factuality"))
        l.factuality = j["factuality"].get<std::string>() == "fcorr" ? Factuality::FCorr
                                                                     : Factuality::NFCorr;
    if (j.contains("positions")) l.positions = j["positions"].get<std::vector<int>>();
    if (j.contains("position_percents"))
        l.position_percents = j["position_percents"].get<std::vector<double>>();
    return l;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string endpoint_id;
    std::string setting;
    std::string dataset_hash;
    std::string tool_version = kToolVersion;
    std::string created_at;

    json to_json() const {
        return {{"command", command},
                {"config_hash", config_hash},
                {"seed", seed},
                {"endpoint_id", endpoint_id},
                {"setting", setting},
                {"dataset_hash", dataset_hash},
                {"tool_version", tool_version},
                {"created_at", created_at}};
    }
};

inline void write_manifest(const std::string& output_path, const RunManifest& manifest) {
    std::ofstream out(output_path + ".manifest.json", std::ios::trunc);
    if (out) out << manifest.to_json().dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Annotator CSV (item_id, annotator_id, label)
// ---------------------------------------------------------------------------

struct AnnotationRow {
    std::string item_id, annotator_id, label;
};

inline std::vector<AnnotationRow> load_annotations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::BadFormat, "cannot read " + path);
    std::vector<AnnotationRow> rows;
    std::string line;
    bool first = true;
    auto trim = [](const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (first && cells.size() >= 3 && cells[0] == "item_id") {
            first = false;
            continue;
        }
        first = false;
        if (cells.size() < 3)
            raise(Errc::BadFormat, "annotation row needs item_id,annotator_id,label: " + line);
        rows.push_back({cells[0], cells[1], cells[2]});
    }
    return rows;
}

}  // namespace misinfo
