#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "misinfo/jsonl.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int exit_code = 0;
    std::string stderr_text;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "misinfo_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliRun cli(const std::string& args) {
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = std::string(MISINFO_CLI_PATH) + " " + args + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliRun run;
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    run.stderr_text = ss.str();
    return run;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_items_fixture(const fs::path& path, int count) {
    std::ofstream out(path);
    out << json{{"schema", "items"}, {"version", 1}}.dump() << "\n";
    for (int i = 0; i < count; ++i) {
        misinfo::TestItem item = make_pens_item("q" + std::to_string(i));
        out << misinfo::item_to_json(item).dump() << "\n";
    }
}

}  // namespace

TEST_CASE("ingest: happy path, empty input, and missing columns") {
    const fs::path dir = work_dir();
    {
        std::ofstream raw(dir / "raw.jsonl");
        raw << json{{"question", "How many?"},
                    {"answer",
                     "Count once.\nCount twice.\nCount thrice.\nAdd them.\nVerify.\n#### 3"}}
                   .dump()
            << "\n";
        raw << json{{"question", "thin"}, {"answer", "short\n#### 1"}}.dump() << "\n";
    }
    CliRun ok = cli("ingest --source gsm8k " + (dir / "raw.jsonl").string() + " -o " +
                    (dir / "items.jsonl").string());
    CHECK(ok.exit_code == 0);
    auto rows = misinfo::load_jsonl((dir / "items.jsonl").string());
    CHECK(rows.size() == 1);  // the thin rationale is prefiltered
    CHECK(fs::exists(dir / "items.jsonl.manifest.json"));

    {
        std::ofstream raw(dir / "empty.jsonl");
    }
    CliRun empty = cli("ingest --source gsm8k " + (dir / "empty.jsonl").string() + " -o " +
                       (dir / "empty_items.jsonl").string());
    CHECK(empty.exit_code == 0);
    CHECK(empty.stderr_text.find("warning") != std::string::npos);

    {
        std::ofstream raw(dir / "badcols.jsonl");
        raw << json{{"prompt", "wrong column layout"}}.dump() << "\n";
    }
    CliRun bad = cli("ingest --source gsm8k " + (dir / "badcols.jsonl").string() + " -o " +
                     (dir / "bad_items.jsonl").string());
    CHECK(bad.exit_code != 0);
    const json err = json::parse(bad.stderr_text.substr(bad.stderr_text.find('{')));
    CHECK(err["error"] == "MissingColumn");
}

TEST_CASE("perturb: determinism and skip logging") {
    const fs::path dir = work_dir();
    {
        std::ofstream out(dir / "eq_items.jsonl");
        out << json{{"schema", "items"}, {"version", 1}}.dump() << "\n";
        for (int i = 0; i < 30; ++i) {
            out << json{{"id", "q" + std::to_string(i)},
                        {"source", "gsm8k"},
                        {"question", "Q?"},
                        {"gold_answer", "42"},
                        {"truthful_equations", {"$y = 12 + 30$"}}}
                       .dump()
                << "\n";
        }
        out << json{{"id", "bare"}, {"source", "gsm8k"}, {"question", "Q?"},
                    {"gold_answer", "1"}}
                   .dump()
            << "\n";
    }
    CliRun first = cli("--seed 7 perturb " + (dir / "eq_items.jsonl").string() + " -o " +
                       (dir / "p1.jsonl").string() + " --kinds value,op,swap");
    CliRun second = cli("--seed 7 perturb " + (dir / "eq_items.jsonl").string() + " -o " +
                        (dir / "p2.jsonl").string() + " --kinds value,op,swap");
    CHECK(first.exit_code == 0);
    CHECK(second.exit_code == 0);
    CHECK(read_file(dir / "p1.jsonl") == read_file(dir / "p2.jsonl"));
    CHECK(first.stderr_text.find("skip bare") != std::string::npos);
    CHECK(first.stderr_text.find("kinds:") != std::string::npos);

    auto rows = misinfo::load_jsonl((dir / "p1.jsonl").string());
    CHECK(rows.size() == 30);
    for (const auto& row : rows) {
        REQUIRE(row.contains("misinfo"));
        CHECK(row["misinfo"]["original"] == "$y = 12 + 30$");
        CHECK(row["misinfo"]["perturbed"] != "$y = 12 + 30$");
    }
}

TEST_CASE("run: mock pipeline, usage error, resume, forced prefix") {
    const fs::path dir = work_dir();
    write_items_fixture(dir / "run_items.jsonl", 4);

    CliRun no_ep = cli("run --items " + (dir / "run_items.jsonl").string() + " -o " +
                       (dir / "t.jsonl").string());
    CHECK(no_ep.exit_code != 0);
    const json err = json::parse(no_ep.stderr_text.substr(no_ep.stderr_text.find('{')));
    CHECK(err.contains("error"));

    CliRun ok = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                    " --setting misinformed --mock p_follow=0.5,p_solve=1 --classify -o " +
                    (dir / "t.jsonl").string());
    CHECK(ok.exit_code == 0);
    auto rows = misinfo::load_jsonl((dir / "t.jsonl").string());
    CHECK(rows.size() == 20);  // 4 items x 5 samples
    CHECK(fs::exists(dir / "t.jsonl.labels.jsonl"));

    // rerunning the completed stage is a no-op
    CliRun again = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                       " --setting misinformed --mock p_follow=0.5,p_solve=1 -o " +
                       (dir / "t.jsonl").string());
    CHECK(again.exit_code == 0);
    CHECK(again.stderr_text.find("ran 0 completions (20 resumed)") != std::string::npos);
    CHECK(misinfo::load_jsonl((dir / "t.jsonl").string()).size() == 20);

    // changed sampling invalidates the cached transcripts
    CliRun stale = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                       " --setting misinformed --mock p_follow=0.5,p_solve=1 --temperature 0.2 "
                       "-o " + (dir / "t.jsonl").string());
    CHECK(stale.exit_code == 0);
    CHECK(stale.stderr_text.find("rerunning from scratch") != std::string::npos);
    CHECK(stale.stderr_text.find("ran 20 completions (0 resumed)") != std::string::npos);

    // forced prefix at position 0
    CliRun forced = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                        " --setting misinformed --mock p_solve=1 --behavior ncorr --position 0 "
                        "-o " + (dir / "forced.jsonl").string());
    CHECK(forced.exit_code == 0);
    for (const auto& row : misinfo::load_jsonl((dir / "forced.jsonl").string())) {
        const std::string text = row["text"].get<std::string>();
        CHECK(text.rfind("1. All of the equations are correct.", 0) == 0);
    }

    // mid-reasoning factual correction: truncate prior transcripts at 50%
    CliRun mid = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                     " --setting misinformed --mock p_solve=1 --behavior fcorr --position 50 "
                     "--from-transcripts " + (dir / "forced.jsonl").string() + " -o " +
                     (dir / "mid.jsonl").string());
    CHECK(mid.exit_code == 0);
    for (const auto& row : misinfo::load_jsonl((dir / "mid.jsonl").string())) {
        const std::string text = row["text"].get<std::string>();
        CHECK(text.find("The first equation is not correct.") != std::string::npos);
    }

    // position > 0 without prior transcripts is an error
    CliRun no_prior = cli("--seed 3 run --items " + (dir / "run_items.jsonl").string() +
                          " --setting misinformed --mock p_solve=1 --behavior fcorr "
                          "--position 50 -o " + (dir / "np.jsonl").string());
    CHECK(no_prior.exit_code != 0);
}

TEST_CASE("grade and report wire together") {
    const fs::path dir = work_dir();
    write_items_fixture(dir / "g_items.jsonl", 6);

    CHECK(cli("--seed 5 run --items " + (dir / "g_items.jsonl").string() +
              " --setting original --mock p_solve=1 -o " + (dir / "g_base.jsonl").string())
              .exit_code == 0);
    CHECK(cli("--seed 5 run --items " + (dir / "g_items.jsonl").string() +
              " --setting misinformed --mock p_follow=1,p_solve=1 -o " +
              (dir / "g_mis.jsonl").string())
              .exit_code == 0);
    CHECK(cli("grade --transcripts " + (dir / "g_base.jsonl").string() + " --items " +
              (dir / "g_items.jsonl").string() + " -o " + (dir / "g_base_graded.jsonl").string())
              .exit_code == 0);
    CHECK(cli("grade --transcripts " + (dir / "g_mis.jsonl").string() + " --items " +
              (dir / "g_items.jsonl").string() + " -o " + (dir / "g_mis_graded.jsonl").string())
              .exit_code == 0);

    CliRun rep = cli("--seed 5 report --baseline " + (dir / "g_base_graded.jsonl").string() +
                     " --condition misinformed=" + (dir / "g_mis_graded.jsonl").string() +
                     " --bootstrap 200 -o " + (dir / "rep").string());
    CHECK(rep.exit_code == 0);
    const std::string md = read_file(dir / "rep.md");
    CHECK(md.find("| original | 100.00 |") != std::string::npos);
    CHECK(md.find("| misinformed |") != std::string::npos);
    const json report = json::parse(read_file(dir / "rep.json"));
    CHECK(report["settings"]["original"]["kacc"] == 1.0);
    CHECK(report["settings"]["misinformed"].contains("relative_decrease"));
    CHECK(report["metadata"]["aggregation"] == "pooled");

    // identical baseline and condition: decrease is 0.00
    CliRun same = cli("--seed 5 report --baseline " + (dir / "g_base_graded.jsonl").string() +
                      " --condition same=" + (dir / "g_base_graded.jsonl").string() +
                      " --bootstrap 100 -o " + (dir / "rep_same").string());
    CHECK(same.exit_code == 0);
    const json same_report = json::parse(read_file(dir / "rep_same.json"));
    CHECK(same_report["settings"]["same"]["relative_decrease"] == 0.0);

    CliRun missing = cli("report --condition x=" + (dir / "g_mis_graded.jsonl").string());
    CHECK(missing.exit_code != 0);
    CHECK(missing.stderr_text.find("MissingBaseline") != std::string::npos);
}

TEST_CASE("grade direct-input mode matches the documented schema") {
    const fs::path dir = work_dir();
    {
        std::ofstream in(dir / "claims.jsonl");
        in << json{{"id", "a"}, {"claim", "The answer is \\frac{4}{7}"}, {"gold", "4/7"}}.dump()
           << "\n";
        in << json{{"id", "b"}, {"claim", "The answer is 41"}, {"gold", "42"}}.dump() << "\n";
    }
    CHECK(cli("grade --input " + (dir / "claims.jsonl").string() + " -o " +
              (dir / "graded.jsonl").string())
              .exit_code == 0);
    auto rows = misinfo::load_jsonl((dir / "graded.jsonl").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["id"] == "a");
    CHECK(rows[0]["correct"] == true);
    CHECK(rows[1]["correct"] == false);
    CHECK(rows[0].contains("claim_value"));
    CHECK(rows[0].contains("gold_value"));
}

TEST_CASE("inject previews prefixes without an endpoint") {
    const fs::path dir = work_dir();
    write_items_fixture(dir / "i_items.jsonl", 2);
    CliRun run = cli("inject --items " + (dir / "i_items.jsonl").string() +
                     " --behavior fcorr --position 0 -o " + (dir / "prefixes.jsonl").string());
    CHECK(run.exit_code == 0);
    auto rows = misinfo::load_jsonl((dir / "prefixes.jsonl").string());
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows)
        CHECK(row["prefix"].get<std::string>().rfind("1. The first equation is not correct.",
                                                     0) == 0);
}

TEST_CASE("ftdata: compliant solver emits records, sabotaged one exits nonzero") {
    const fs::path dir = work_dir();
    write_items_fixture(dir / "f_items.jsonl", 3);

    CliRun good = cli("--seed 2 ftdata --items " + (dir / "f_items.jsonl").string() +
                      " --mock p_solve=1 -o " + (dir / "ft.jsonl").string());
    CHECK(good.exit_code == 0);
    auto records = misinfo::load_jsonl((dir / "ft.jsonl").string());
    CHECK(records.size() == 3);
    const json meta = json::parse(read_file(dir / "ft.jsonl.meta.json"));
    CHECK(meta["training"]["n_epochs"] == 3);
    CHECK(meta["training"]["batch_size"] == 2);
    CHECK(meta["training"]["learning_rate_multiplier"] == 1.8);

    CliRun bad = cli("--seed 2 ftdata --items " + (dir / "f_items.jsonl").string() +
                     " --mock p_solve=0 -o " + (dir / "ft_bad.jsonl").string());
    CHECK(bad.exit_code != 0);
    CHECK(bad.stderr_text.find("AllRejected") != std::string::npos);
    CHECK(misinfo::load_jsonl((dir / "ft_bad.jsonl").string()).empty());
    CHECK(misinfo::load_jsonl((dir / "ft_bad.jsonl.rejected.jsonl").string()).size() == 3);
}

TEST_CASE("agreement reads annotator CSV") {
    const fs::path dir = work_dir();
    {
        std::ofstream csv(dir / "ann.csv");
        csv << "item_id,annotator_id,label\n";
        csv << "q1,a,yes\nq1,b,yes\nq1,c,no\n";
        csv << "q2,a,no\nq2,b,yes\nq2,c,no\n";
    }
    CliRun run = cli("agreement --ratings " + (dir / "ann.csv").string() + " -o " +
                     (dir / "agree.json").string());
    CHECK(run.exit_code == 0);
    const json out = json::parse(read_file(dir / "agree.json"));
    CHECK(out["fleiss_kappa"].get<double>() == doctest::Approx(-1.0 / 3.0));
    CHECK(out["n_annotators"] == 3);
}

TEST_CASE("config file values are overridden by flags and environment") {
    const fs::path dir = work_dir();
    {
        std::ofstream cfg(dir / "conf.txt");
        cfg << "# config\nseed = 111\n";
    }
    write_items_fixture(dir / "c_items.jsonl", 1);

    // config seed applies
    CHECK(cli("--config " + (dir / "conf.txt").string() + " perturb " +
              (dir / "c_items.jsonl").string() + " -o " + (dir / "c1.jsonl").string())
              .exit_code == 0);
    // flag overrides config
    CHECK(cli("--config " + (dir / "conf.txt").string() + " --seed 222 perturb " +
              (dir / "c_items.jsonl").string() + " -o " + (dir / "c2.jsonl").string())
              .exit_code == 0);
    // environment overrides both
    CHECK(std::system((std::string("HARNESS_SEED=111 ") + MISINFO_CLI_PATH + " --seed 222 perturb " +
                       (dir / "c_items.jsonl").string() + " -o " + (dir / "c3.jsonl").string() +
                       " 2>/dev/null")
                          .c_str()) == 0);
    const std::string c1 = read_file(dir / "c1.jsonl");
    const std::string c2 = read_file(dir / "c2.jsonl");
    const std::string c3 = read_file(dir / "c3.jsonl");
    CHECK(c1 != c2);
    CHECK(c1 == c3);
}
