#include "cli.hpp"
#include "scop/csv.hpp"
#include "scop/experiment.hpp"
#include "scop/results_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <stdexcept>

using namespace scop;
using scop::testing::slurp;
using scop::testing::spit;
using scop::testing::TempDir;

namespace {

CsvTable parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in, "inline");
}

void expect_data_error(const std::string& text, std::size_t row, std::size_t column) {
    try {
        const CsvTable t = parse(text);
        to_dataset(t);
        FAIL() << "expected DataError for:\n" << text;
    } catch (const DataError& e) {
        EXPECT_EQ(e.row, row) << e.what();
        EXPECT_EQ(e.column, column) << e.what();
    }
}

ExperimentConfig small_config(std::size_t reps) {
    ExperimentConfig c;
    c.n_train = c.n_cal = c.m = 100;
    c.reps = reps;
    c.master_seed = 5;
    c.methods = {Method::SCOP, Method::SCOP_PLUS, Method::OCP, Method::ACP};
    return c;
}

std::vector<std::vector<std::string>> csv_block(const std::string& text, std::size_t block) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t current = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            ++current;
            continue;
        }
        if (current != block) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(cells);
    }
    return rows;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::vector<const char*> argv{"scop"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

} // namespace

TEST(Csv, LabeledTable) {
    const Dataset d = to_dataset(parse("y,x1\n1,2\n3,4\n5,6\n"));
    EXPECT_EQ(d.size(), 3u);
    EXPECT_EQ(d.dim(), 1u);
    ASSERT_TRUE(d.labeled());
    EXPECT_EQ((*d.y)(2), 5.0);
    EXPECT_EQ(d.x(1, 0), 4.0);
}

TEST(Csv, FeatureOnlyTableAndWhitespace) {
    const Dataset d = to_dataset(parse("x1,x2\r\n1.5,-2e-3\r\n 3 ,4\n"));
    EXPECT_FALSE(d.labeled());
    EXPECT_EQ(d.dim(), 2u);
    EXPECT_EQ(d.x(0, 1), -2e-3);
}

TEST(Csv, ErrorsCarryRowAndColumn) {
    expect_data_error("y,x1\n1,2\n1,abc\n", 3, 2);
    expect_data_error("y,x1,x2\n1,2,3\n4,5\n", 3, 0);
    expect_data_error("y,x1\n1,inf\n", 2, 2);
    expect_data_error("y,x1\nnan,1\n", 2, 1);
    expect_data_error("y,x1\n1,2x\n", 2, 2);
    expect_data_error("1,2\n3,4\n", 1, 1);
}

TEST(Csv, EmptyInputIsAnError) {
    EXPECT_THROW(parse(""), DataError);
}

TEST(Csv, ScoredUnits) {
    const auto units = to_scored_units(parse("y,mu_hat,t_score\n3,1,0.5\n-1,2,2\n"));
    ASSERT_EQ(units.size(), 2u);
    EXPECT_EQ(units[0].t_score, 0.5);
    EXPECT_EQ(*units[0].residual_score, 2.0);
    EXPECT_EQ(*units[1].residual_score, 3.0);

    const auto unlabeled = to_scored_units(parse("t_score,mu_hat\n1,2\n"));
    EXPECT_FALSE(unlabeled[0].response.has_value());
    EXPECT_EQ(unlabeled[0].mu_hat, 2.0);
    EXPECT_THROW(to_scored_units(parse("y,mu_hat\n1,2\n")), DataError);
}

TEST(Csv, DatasetRoundTripIsBitExact) {
    TempDir dir("csv");
    RandomStream rng(61);
    const Dataset d = generate(ScenarioKind::B, 50, rng);
    write_dataset(dir / "d.csv", d);
    const Dataset back = load_dataset(dir / "d.csv");
    EXPECT_EQ(back.x, d.x);
    EXPECT_EQ(*back.y, *d.y);

    Dataset features = d;
    features.y.reset();
    write_dataset(dir / "f.csv", features);
    EXPECT_FALSE(load_dataset(dir / "f.csv").labeled());
}

TEST(Csv, LoadExternalLayouts) {
    TempDir dir("ext");
    spit(dir / "pool.csv", "y,x1\n1,0\n2,1\n3,2\n4,3\n");
    spit(dir / "test.csv", "x1\n0.5\n");
    spit(dir / "test2.csv", "x1,x2\n0.5,1\n");
    ExternalPaths p;
    p.labeled = dir / "pool.csv";
    p.test = dir / "test.csv";
    EXPECT_TRUE(std::holds_alternative<ExternalPool>(load_external(p)));
    p.test = dir / "test2.csv";
    EXPECT_THROW(load_external(p), DataError);
    p.test = dir / "missing.csv";
    EXPECT_THROW(load_external(p), DataError);
    ExternalPaths incomplete;
    incomplete.test = dir / "test.csv";
    EXPECT_THROW(load_external(incomplete), std::invalid_argument);
}

TEST(Csv, RegeneratedDatasetReproducesResult) {
    TempDir dir("rt");
    ExperimentConfig c = small_config(1);
    c.scenario = ScenarioKind::B;
    c.rule = rules::TCons{-8.0};
    const RepData d = draw_rep_data(c, 0);
    write_dataset(dir / "train.csv", d.train);
    write_dataset(dir / "cal.csv", d.cal);
    write_dataset(dir / "test.csv", d.test);
    ExternalPaths p;
    p.train = dir / "train.csv";
    p.cal = dir / "cal.csv";
    p.test = dir / "test.csv";
    const auto from_files = run_external(c, load_external(p));
    const auto in_memory = run_external(c, ExternalSplit{d.train, d.cal, d.test});
    EXPECT_EQ(from_files.reps, in_memory.reps);
    EXPECT_EQ(results_json(from_files), results_json(in_memory));
}

TEST(Csv, PrecomputedReingestionReproducesCoverage) {
    TempDir dir("pre");
    for (const SelectionRule& rule : std::vector<SelectionRule>{rules::TCons{-1.0}, rules::TTop{20}, rules::TClu{}}) {
        ExperimentConfig c = small_config(1);
        c.rule = rule;
        const RepData d = draw_rep_data(c, 0);
        const ScoredSplit split = score_split(c, d.train, d.cal, d.test);
        write_scored_units(dir / "cal.csv", split.cal);
        write_scored_units(dir / "test.csv", split.test);
        ExternalPaths p;
        p.cal = dir / "cal.csv";
        p.test = dir / "test.csv";
        p.precomputed = true;
        const auto res = run_external(c, load_external(p));
        EXPECT_EQ(res.reps[0].methods, evaluate_split(c, split).methods) << to_string(rule);
    }
}

TEST(Results, CsvSchemaAndSummaryRecomputation) {
    ExperimentConfig c = small_config(12);
    c.rule = rules::TCons{-3.5};
    const auto res = run_experiment(c);
    std::ostringstream out;
    write_results_csv(out, res);
    const auto rows = csv_block(out.str(), 0);
    const auto summary = csv_block(out.str(), 1);
    ASSERT_EQ(rows.front(), (std::vector<std::string>{"rep", "method", "fcp", "avg_length", "n_selected", "infinite_flag"}));
    ASSERT_EQ(summary.front(),
              (std::vector<std::string>{"method", "fcr", "fcr_se", "mean_length", "infinite_reps", "mean_selected", "reps"}));
    ASSERT_EQ(rows.size(), 1 + 12 * c.methods.size());

    bool saw_empty = false;
    for (std::size_t k = 0; k < c.methods.size(); ++k) {
        double sum = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][1] != method_name(c.methods[k])) continue;
            sum += std::stod(rows[i][2]);
            if (rows[i][4] == "0") {
                EXPECT_EQ(rows[i][2], "0");
                EXPECT_EQ(rows[i][3], "");
                saw_empty = true;
            }
        }
        EXPECT_DOUBLE_EQ(std::stod(summary[k + 1][1]), sum / 12.0);
    }
    EXPECT_TRUE(saw_empty) << "the threshold should leave some repetitions with no selection";
}

TEST(Results, JsonRoundTrip) {
    ExperimentConfig c = small_config(6);
    c.rule = rules::TPos{-1.0, 0.2};
    c.acp_mode = AcpMode::SelectedSize;
    const auto res = run_experiment(c);
    const std::string text = results_json(res);
    const auto back = parse_results_json(text);
    EXPECT_EQ(back.reps, res.reps);
    EXPECT_EQ(back.summaries, res.summaries);
    EXPECT_EQ(back.failed_reps, res.failed_reps);
    EXPECT_EQ(back.selection_fdr, res.selection_fdr);
    EXPECT_EQ(back.config, res.config);
    EXPECT_EQ(results_json(back), text);
}

TEST(Results, JsonKeyOrderAndSpecialValues) {
    ExperimentConfig c = small_config(2);
    c.rule = rules::TCons{-100.0};
    const std::string text = results_json(run_experiment(c));
    const auto pos = [&](const char* key) { return text.find(std::string("\"") + key + "\""); };
    EXPECT_LT(pos("version"), pos("config"));
    EXPECT_LT(pos("config"), pos("failed_reps"));
    EXPECT_LT(pos("failed_reps"), pos("selection_fdr"));
    EXPECT_LT(pos("selection_fdr"), pos("summaries"));
    EXPECT_LT(pos("summaries"), pos("reps\": ["));
    EXPECT_NE(text.find(std::string("\"version\": \"") + std::string(version()) + "\""), std::string::npos);
    EXPECT_NE(text.find("\"master_seed\": 5"), std::string::npos);
    EXPECT_NE(text.find("\"avg_length\": null"), std::string::npos);
    EXPECT_EQ(text.find("threads"), std::string::npos);
}

TEST(Results, MalformedJsonIsADataError) {
    EXPECT_THROW(parse_results_json("{"), DataError);
    EXPECT_THROW(parse_results_json("{\"config\": {}}"), DataError);
}

TEST(Results, SweepOutputs) {
    ExperimentConfig c = small_config(2);
    c.rule = rules::TExch{50};
    const auto res = sweep(c, QGrid{{30.0, 70.0}});
    std::ostringstream out;
    write_sweep_csv(out, res);
    const auto rows = csv_block(out.str(), 0);
    EXPECT_EQ(rows.front().front(), "point");
    EXPECT_EQ(rows.back().front(), "1");
    const std::string j = sweep_json(res);
    EXPECT_NE(j.find("\"points\""), std::string::npos);
    EXPECT_NE(j.find("t-exch:70"), std::string::npos);
}

TEST(Results, UnwritablePathNamesThePath) {
    const auto res = run_experiment(small_config(1));
    try {
        write_results("/nonexistent-dir/x.json", res, Format::Json);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.json"), std::string::npos);
    }
}

TEST(ParseArgs, SimulateExample) {
    std::ostringstream help;
    const auto spec = cli::parse_args({"simulate", "--scenario", "A", "--n", "200", "--m", "200", "--alpha", "0.1",
                                       "--rule", "t-cons:-1", "--methods", "scop,ocp,acp", "--reps", "1000",
                                       "--seed", "7"},
                                      help);
    ASSERT_TRUE(spec.has_value());
    EXPECT_EQ(spec->mode, cli::Mode::Simulate);
    EXPECT_EQ(spec->config.scenario, ScenarioKind::A);
    EXPECT_EQ(spec->config.n_cal, 200u);
    EXPECT_EQ(spec->config.n_train, 200u);
    EXPECT_EQ(spec->config.rule, SelectionRule(rules::TCons{-1.0}));
    EXPECT_EQ(spec->config.methods, (std::vector<Method>{Method::SCOP, Method::OCP, Method::ACP}));
    EXPECT_EQ(spec->config.reps, 1000u);
    EXPECT_EQ(spec->config.master_seed, 7u);
    EXPECT_EQ(spec->config.acp_mode, AcpMode::Exact);
    EXPECT_EQ(spec->format, Format::Json);
}

TEST(ParseArgs, RuleGrammarAndFlags) {
    std::ostringstream help;
    const auto pos = cli::parse_args({"simulate", "--scenario", "B", "--rule", "t-pos:-1,0.2", "--acp-simple",
                                      "--n-train", "300", "--out", "r.csv"},
                                     help);
    EXPECT_EQ(pos->config.rule, SelectionRule(rules::TPos{-1.0, 0.2}));
    EXPECT_EQ(pos->config.acp_mode, AcpMode::SelectedSize);
    EXPECT_EQ(pos->config.n_train, 300u);
    EXPECT_EQ(pos->format, Format::Csv);

    const auto sw = cli::parse_args({"sweep", "--scenario", "A", "--rule", "t-exch:50", "--q", "20,40"}, help);
    EXPECT_EQ(std::get<QGrid>(*sw->grid).q, (std::vector<double>{20.0, 40.0}));
    const auto sizes = cli::parse_args({"sweep", "--scenario", "C", "--sizes", "100x200,200x100"}, help);
    EXPECT_EQ(std::get<SizeGrid>(*sizes->grid).n_m.size(), 2u);
}

TEST(ParseArgs, UsageErrorsNameTheFlag) {
    std::ostringstream help;
    const auto message = [&](const std::vector<std::string>& args) -> std::string {
        try {
            cli::parse_args(args, help);
        } catch (const cli::UsageError& e) {
            return e.what();
        }
        return "";
    };
    EXPECT_NE(message({"simulate", "--scenario", "A", "--rule", "t-top:0"}).find("K"), std::string::npos);
    EXPECT_NE(message({"simulate", "--scenario", "A", "--alpha", "1.5"}).find("alpha"), std::string::npos);
    EXPECT_NE(message({"simulate", "--scenario", "A", "--methods", "scop,xyz"}).find("--methods"), std::string::npos);
    EXPECT_NE(message({"simulate", "--scenario", "A", "--bogus"}).find("bogus"), std::string::npos);
    EXPECT_NE(message({"simulate"}).find("scenario"), std::string::npos);
    EXPECT_NE(message({"sweep", "--scenario", "A", "--q", "10,x"}).find("--q"), std::string::npos);
    EXPECT_NE(message({"simulate", "--scenario", "A", "--out", "/nonexistent-dir/r.json"}).find("--out"),
              std::string::npos);
    EXPECT_NE(message({"run-csv", "--test", "/nonexistent-file.csv", "--labeled", "x", "--n", "5"}).find("--labeled"),
              std::string::npos);
}

TEST(ParseArgs, HelpReturnsNothing) {
    std::ostringstream help;
    EXPECT_FALSE(cli::parse_args({"--help"}, help).has_value());
    EXPECT_NE(help.str().find("simulate"), std::string::npos);
}

TEST(MainEntry, ExitCodes) {
    TempDir dir("exit");
    std::string out, err;
    EXPECT_EQ(run_cli({"simulate", "--scenario", "A", "--rule", "t-top:0"}, &out, &err), cli::kUsage);
    EXPECT_NE(err.find("usage error"), std::string::npos);

    spit(dir / "bad.csv", "y,x1\n1,oops\n");
    spit(dir / "test.csv", "x1\n1\n");
    EXPECT_EQ(run_cli({"run-csv", "--labeled", (dir / "bad.csv").string(), "--test", (dir / "test.csv").string(), "--n",
                   "1"},
                  &out, &err),
              cli::kData);
    EXPECT_NE(err.find("bad.csv:2:2"), std::string::npos);

    EXPECT_EQ(run_cli({"simulate", "--scenario", "A", "--rule", "t-pos:1e6,0.2", "--reps", "3", "--n", "50", "--m", "50"},
                  &out, &err),
              cli::kNumerical);

    EXPECT_EQ(run_cli({"simulate", "--scenario", "B", "--reps", "2", "--n", "40", "--m", "30", "--out",
                   (dir / "r.json").string()},
                  &out, &err),
              cli::kOk);
    EXPECT_EQ(parse_results_json(slurp(dir / "r.json")).reps.size(), 2u);
}

TEST(MainEntry, ExportedDataReproducesFirstRepetition) {
    TempDir dir("export");
    const std::vector<std::string> common{"--reps", "1", "--n", "60", "--m", "40", "--seed", "3", "--rule", "t-cons:-2",
                                          "--methods", "scop,scop+,ocp,acp"};
    std::vector<std::string> sim{"simulate", "--scenario", "B", "--export-data", dir.path().string(), "--out",
                                 (dir / "sim.csv").string()};
    sim.insert(sim.end(), common.begin(), common.end());
    ASSERT_EQ(run_cli(sim), cli::kOk);

    std::vector<std::string> fixed{"run-csv", "--train", (dir / "train.csv").string(), "--cal",
                                   (dir / "cal.csv").string(), "--test", (dir / "test.csv").string(), "--out",
                                   (dir / "fixed.csv").string()};
    fixed.insert(fixed.end(), common.begin(), common.end());
    ASSERT_EQ(run_cli(fixed), cli::kOk);

    std::vector<std::string> pre{"run-csv", "--precomputed", "--cal", (dir / "cal_scored.csv").string(), "--test",
                                 (dir / "test_scored.csv").string(), "--out", (dir / "pre.csv").string()};
    pre.insert(pre.end(), common.begin(), common.end());
    ASSERT_EQ(run_cli(pre), cli::kOk);

    const auto rows = csv_block(slurp(dir / "sim.csv"), 0);
    EXPECT_EQ(csv_block(slurp(dir / "fixed.csv"), 0), rows);
    EXPECT_EQ(csv_block(slurp(dir / "pre.csv"), 0), rows);
}

TEST(MainEntry, UnlabeledTestWritesIntervals) {
    TempDir dir("intervals");
    ExperimentConfig c = small_config(1);
    c.scenario = ScenarioKind::B;
    RepData d = draw_rep_data(c, 0);
    d.test.y.reset();
    write_dataset(dir / "train.csv", d.train);
    write_dataset(dir / "cal.csv", d.cal);
    write_dataset(dir / "test.csv", d.test);
    std::string out;
    ASSERT_EQ(run_cli({"run-csv", "--train", (dir / "train.csv").string(), "--cal", (dir / "cal.csv").string(), "--test",
                   (dir / "test.csv").string(), "--rule", "t-top:5", "--methods", "scop"},
                  &out),
              cli::kOk);
    const auto rows = csv_block(out, 0);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"unit", "method", "mu_hat", "lo", "hi", "empty"}));
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(std::stod(rows[i][3]), std::stod(rows[i][4]));
}

TEST(MainEntry, SelfcheckPasses) {
    std::string out;
    EXPECT_EQ(run_cli({"selfcheck"}, &out), 0);
    EXPECT_EQ(out.find("FAIL"), std::string::npos);
    EXPECT_NE(out.find("PASS"), std::string::npos);
}
