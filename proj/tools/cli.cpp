#include "cli.hpp"

#include "scop/selfcheck.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <unistd.h>

namespace scop::cli {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t end = comma == std::string::npos ? text.size() : comma;
        out.push_back(text.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view text, const std::string& flag) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw UsageError(flag + ": '" + std::string(text) + "' is not a number");
    }
    return value;
}

std::vector<Method> parse_methods(const std::string& text) {
    std::vector<Method> out;
    for (const auto& name : split_list(text)) {
        try {
            const Method m = parse_method(name);
            if (std::find(out.begin(), out.end(), m) != out.end()) throw UsageError("--methods: '" + name + "' repeated");
            out.push_back(m);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--methods: ") + e.what());
        }
    }
    return out;
}

SweepGrid parse_q_grid(const std::string& text) {
    QGrid grid;
    for (const auto& item : split_list(text)) grid.q.push_back(parse_number<double>(item, "--q"));
    return grid;
}

SweepGrid parse_size_grid(const std::string& text) {
    SizeGrid grid;
    for (const auto& item : split_list(text)) {
        const std::size_t x = item.find('x');
        if (x == std::string::npos) throw UsageError("--sizes: expected NxM, got '" + item + "'");
        grid.n_m.emplace_back(parse_number<std::size_t>(std::string_view(item).substr(0, x), "--sizes"),
                              parse_number<std::size_t>(std::string_view(item).substr(x + 1), "--sizes"));
    }
    return grid;
}

void require_readable(const std::filesystem::path& path, const std::string& flag) {
    if (path.empty()) return;
    std::ifstream probe(path);
    if (!probe) throw UsageError(flag + ": cannot read '" + path.string() + "'");
}

void require_writable_target(const std::filesystem::path& path, const std::string& flag) {
    if (path.empty() || path == "-") return;
    const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::error_code ec;
    if (!std::filesystem::is_directory(parent, ec)) {
        throw UsageError(flag + ": directory '" + parent.string() + "' does not exist");
    }
    if (::access(parent.c_str(), W_OK) != 0) throw UsageError(flag + ": directory '" + parent.string() + "' is not writable");
}

bool use_color(std::ostream& out) {
    if (std::getenv("NO_COLOR") != nullptr) return false;
    if (&out != &std::cout) return false;
    return ::isatty(STDOUT_FILENO) != 0;
}

// Options shared by simulate, run-csv and sweep.
struct Common {
    std::size_t n = 200;
    std::size_t m = 200;
    double alpha = 0.1;
    std::string rule = "t-cons:-1";
    std::string methods = "scop,ocp,acp";
    std::string score = "abs";
    bool acp_simple = false;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out = "-";
    std::string format;
    bool summary = false;

    CLI::Option* n_opt = nullptr;
    CLI::Option* n_train_opt = nullptr;
    CLI::Option* m_opt = nullptr;
    std::size_t n_train = 0;

    void attach(CLI::App& app) {
        n_opt = app.add_option("--n", n, "Calibration size; also the training size unless --n-train is given");
        n_train_opt = app.add_option("--n-train", n_train, "Training size");
        m_opt = app.add_option("--m", m, "Test size");
        app.add_option("--alpha", alpha, "Miscoverage level in (0, 1)");
        app.add_option("--rule", rule,
                       "Selection rule: t-cons:B0, t-cal:Q, t-test:Q, t-exch:Q, t-top:K, t-pos:B0,BETA, t-clu");
        app.add_option("--methods", methods, "Comma list of scop, scop+, ocp, acp");
        app.add_option("--score", score, "Nonconformity score: abs or cqr");
        app.add_flag("--acp-simple", acp_simple, "ACP level alpha |S|/m instead of the exact per-unit M_min");
        app.add_option("--reps", reps, "Repetitions");
        app.add_option("--seed", seed, "Master seed");
        app.add_option("--threads", threads, "Worker threads, 0 for all cores; output does not depend on it");
        app.add_option("--out", out, "Output path, - for stdout");
        app.add_option("--format", format, "csv or json (default: from --out extension, else json)");
        app.add_flag("--summary", summary, "Print a summary table to stderr");
    }

    void apply(RunSpec& spec) const {
        ExperimentConfig& c = spec.config;
        c.n_cal = n;
        c.n_train = n_train_opt->count() > 0 ? n_train : n;
        c.m = m;
        if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha: must lie in (0, 1)");
        c.alpha = alpha;
        try {
            c.rule = parse_rule(rule);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--rule: ") + e.what());
        }
        c.methods = parse_methods(methods);
        if (c.methods.empty()) throw UsageError("--methods: empty list");
        try {
            c.score_kind = parse_score_kind(score);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--score: ") + e.what());
        }
        c.acp_mode = acp_simple ? AcpMode::SelectedSize : AcpMode::Exact;
        if (reps < 1) throw UsageError("--reps: must be at least 1");
        c.reps = reps;
        c.master_seed = seed;
        c.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;

        spec.out = out;
        spec.summary = summary;
        if (!format.empty()) {
            try {
                spec.format = parse_format(format);
            } catch (const std::invalid_argument& e) {
                throw UsageError(std::string("--format: ") + e.what());
            }
        } else {
            spec.format = spec.out.extension() == ".csv" ? Format::Csv : Format::Json;
        }
        require_writable_target(spec.out, "--out");
    }
};

void validate(const ExperimentConfig& c) {
    try {
        validate_config(c);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void write_intervals(std::ostream& out, const SplitIntervals& built, std::span<const ScoredUnit> test) {
    char buf[128];
    out << "unit,method,mu_hat,lo,hi,empty\n";
    for (const auto& mi : built.per_method) {
        for (const auto& pi : mi.intervals) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", test[pi.unit].mu_hat, pi.lo, pi.hi);
            out << test[pi.unit].index << ',' << method_name(mi.method) << ',' << buf << ',' << (pi.empty ? 1 : 0)
                << '\n';
        }
    }
}

int run_selfcheck_mode(const RunSpec& spec, std::ostream& out) {
    const bool color = use_color(out);
    bool all = true;
    for (const auto& r : run_selfcheck(spec.selfcheck_seed)) {
        const bool ok = r.passed();
        all = all && ok;
        const char* tag = ok ? "PASS" : "FAIL";
        if (color) {
            out << (ok ? "\033[32m" : "\033[31m") << tag << "\033[0m";
        } else {
            out << tag;
        }
        out << "  " << r.name << " (" << r.cases << " cases, " << r.failures << " failures)";
        if (!ok && !r.first_failure.empty()) out << ": " << r.first_failure;
        out << '\n';
    }
    return all ? kOk : 1;
}

void export_rep0(const RunSpec& spec) {
    const auto& dir = spec.export_dir;
    const RepData data = draw_rep_data(spec.config, 0);
    write_dataset(dir / "train.csv", data.train);
    write_dataset(dir / "cal.csv", data.cal);
    write_dataset(dir / "test.csv", data.test);
    const ScoredSplit split = score_split(spec.config, data.train, data.cal, data.test);
    write_scored_units(dir / "cal_scored.csv", split.cal);
    write_scored_units(dir / "test_scored.csv", split.test);
}

} // namespace

std::optional<RunSpec> parse_args(int argc, const char* const* argv, std::ostream& help) {
    CLI::App app{"Selection-conditional conformal prediction experiments", "scop"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    Common common_sim;
    Common common_csv;
    Common common_sweep;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment on a synthetic scenario");
    std::string scenario;
    bool fixed_beta = false;
    std::string export_dir;
    double beta_scale = 1.0;
    common_sim.attach(*sim);
    sim->add_option("--scenario", scenario, "A, B or C")->required();
    sim->add_flag("--fixed-beta", fixed_beta, "Scenario A: one beta for all repetitions");
    sim->add_option("--beta-scale", beta_scale, "Scenario A: beta ~ Unif(-s, s)^10");
    sim->add_option("--export-data", export_dir, "Directory for the data and scored units of repetition 0");

    auto* csv = app.add_subcommand("run-csv", "Run on external CSV data");
    ExternalPaths paths;
    std::string labeled, train, cal, test;
    common_csv.attach(*csv);
    csv->add_option("--labeled", labeled, "Labeled pool y,x1..xd, re-split each repetition");
    csv->add_option("--train", train, "Fixed training rows y,x1..xd");
    csv->add_option("--cal", cal, "Fixed calibration rows (or y,mu_hat,t_score with --precomputed)");
    csv->add_option("--test", test, "Test rows x1..xd, optionally with y first")->required();
    csv->add_flag("--precomputed", paths.precomputed, "Inputs hold y?,mu_hat,t_score; no fitting");

    auto* sw = app.add_subcommand("sweep", "Repeat an experiment over a parameter grid");
    std::string sw_scenario, q_list, size_list;
    bool sw_fixed_beta = false;
    double sw_beta_scale = 1.0;
    common_sweep.attach(*sw);
    sw->add_option("--scenario", sw_scenario, "A, B or C")->required();
    sw->add_flag("--fixed-beta", sw_fixed_beta, "Scenario A: one beta for all repetitions");
    sw->add_option("--beta-scale", sw_beta_scale, "Scenario A: beta ~ Unif(-s, s)^10");
    auto* q_opt = sw->add_option("--q", q_list, "Comma list of quantile levels for t-cal/t-test/t-exch");
    auto* size_opt = sw->add_option("--sizes", size_list, "Comma list of NxM pairs");
    q_opt->excludes(size_opt);

    auto* check = app.add_subcommand("selfcheck", "Run the deterministic property suite");
    RunSpec spec;
    check->add_option("--seed", spec.selfcheck_seed, "Seed of the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        help << app.help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        help << app.help("", CLI::AppFormatMode::All);
        return std::nullopt;
    } catch (const CLI::CallForVersion&) {
        help << version() << '\n';
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    const auto scenario_of = [](const std::string& name) {
        try {
            return parse_scenario(name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--scenario: ") + e.what());
        }
    };

    if (sim->parsed()) {
        spec.mode = Mode::Simulate;
        common_sim.apply(spec);
        spec.config.scenario = scenario_of(scenario);
        spec.config.fixed_beta = fixed_beta;
        spec.config.beta_scale = beta_scale;
        spec.export_dir = export_dir;
        if (!spec.export_dir.empty()) {
            std::error_code ec;
            if (!std::filesystem::is_directory(spec.export_dir, ec)) {
                throw UsageError("--export-data: '" + export_dir + "' is not a directory");
            }
        }
        validate(spec.config);
    } else if (csv->parsed()) {
        spec.mode = Mode::RunCsv;
        common_csv.apply(spec);
        spec.config.scenario.reset();
        paths.labeled = labeled;
        paths.train = train;
        paths.cal = cal;
        paths.test = test;
        if (paths.precomputed && (!labeled.empty() || !train.empty() || cal.empty())) {
            throw UsageError("--precomputed: needs --cal and --test only");
        }
        if (!paths.precomputed && labeled.empty() && (train.empty() || cal.empty())) {
            throw UsageError("--labeled or both --train and --cal are required");
        }
        if (!labeled.empty() && (!train.empty() || !cal.empty())) {
            throw UsageError("--labeled: cannot be combined with --train or --cal");
        }
        if (!labeled.empty() && common_csv.n_opt->count() == 0) {
            throw UsageError("--n: required with --labeled (calibration rows per split)");
        }
        require_readable(paths.labeled, "--labeled");
        require_readable(paths.train, "--train");
        require_readable(paths.cal, "--cal");
        require_readable(paths.test, "--test");
        spec.inputs = paths;
    } else if (sw->parsed()) {
        spec.mode = Mode::Sweep;
        common_sweep.apply(spec);
        spec.config.scenario = scenario_of(sw_scenario);
        spec.config.fixed_beta = sw_fixed_beta;
        spec.config.beta_scale = sw_beta_scale;
        if (q_opt->count() > 0) {
            spec.grid = parse_q_grid(q_list);
        } else if (size_opt->count() > 0) {
            spec.grid = parse_size_grid(size_list);
        } else {
            throw UsageError("sweep: one of --q or --sizes is required");
        }
        validate(spec.config);
    } else {
        spec.mode = Mode::Selfcheck;
    }
    return spec;
}

std::optional<RunSpec> parse_args(const std::vector<std::string>& args, std::ostream& help) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("scop");
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_args(static_cast<int>(argv.size()), argv.data(), help);
}

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    switch (spec.mode) {
    case Mode::Selfcheck: return run_selfcheck_mode(spec, out);

    case Mode::Simulate: {
        if (!spec.export_dir.empty()) export_rep0(spec);
        const ExperimentResult result = run_experiment(spec.config);
        write_results(spec.out, result, spec.format);
        if (spec.summary) err << format_summary_table(result);
        return kOk;
    }

    case Mode::Sweep: {
        const auto results = sweep(spec.config, *spec.grid);
        write_sweep(spec.out, results, spec.format);
        if (spec.summary) {
            for (std::size_t g = 0; g < results.size(); ++g) {
                err << "point " << g << ": " << to_string(results[g].config.rule) << ", n=" << results[g].config.n_cal
                    << ", m=" << results[g].config.m << '\n'
                    << format_summary_table(results[g]);
            }
        }
        return kOk;
    }

    case Mode::RunCsv: {
        ExperimentConfig config = spec.config;
        const ExternalData data = load_external(spec.inputs);
        bool test_labeled = true;
        if (const auto* pool = std::get_if<ExternalPool>(&data)) {
            if (config.n_cal >= pool->labeled.size()) {
                throw UsageError("--n: must be smaller than the labeled pool (" +
                                 std::to_string(pool->labeled.size()) + " rows)");
            }
            config.n_train = pool->labeled.size() - config.n_cal;
            config.m = pool->test.size();
            test_labeled = pool->test.labeled();
        } else if (const auto* split = std::get_if<ExternalSplit>(&data)) {
            config.n_train = split->train.size();
            config.n_cal = split->cal.size();
            config.m = split->test.size();
            test_labeled = split->test.labeled();
        } else {
            const auto& scored = std::get<ExternalScored>(data);
            config.n_train = 0;
            config.n_cal = scored.cal.size();
            config.m = scored.test.size();
            test_labeled = std::all_of(scored.test.begin(), scored.test.end(),
                                       [](const ScoredUnit& u) { return u.response.has_value(); });
        }
        validate(config);

        if (!test_labeled) {
            // Without test responses there is nothing to evaluate: emit the
            // intervals of the first split instead.
            const ScoredSplit split = external_split(config, data, 0);
            const SplitIntervals built = build_intervals(config, split);
            if (spec.out == "-") {
                write_intervals(out, built, split.test);
            } else {
                std::ofstream file(spec.out, std::ios::binary | std::ios::trunc);
                if (!file) throw std::runtime_error("cannot write " + spec.out.string());
                write_intervals(file, built, split.test);
                if (!file.flush()) throw std::runtime_error("write failed: " + spec.out.string());
            }
            return kOk;
        }
        const ExperimentResult result = run_external(config, data);
        write_results(spec.out, result, spec.format);
        if (spec.summary) err << format_summary_table(result);
        return kOk;
    }
    }
    return kOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        const auto spec = parse_args(argc, argv, out);
        if (!spec) return kOk;
        return run(*spec, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nrun 'scop --help' for usage\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const ExperimentAborted& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const NoNullCalibration& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
}

} // namespace scop::cli
