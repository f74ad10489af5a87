// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   scop_acceptance [--seed N] [--threads N]

#include "cli.hpp"
#include "scop/experiment.hpp"
#include "scop/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace scop;

namespace {

constexpr double kFcrTol = 0.015;
constexpr double kLengthTol = 0.08;
constexpr double kMaxSeconds = 120.0;

struct Settings {
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

// Accumulates the checks of one criterion into a single line.
class Verdict {
public:
    void check(bool ok, const std::string& text) {
        ok_ = ok_ && ok;
        if (!detail_.empty()) detail_ += "; ";
        detail_ += (ok ? "" : "!") + text;
    }
    void note(const std::string& text) {
        if (!detail_.empty()) detail_ += "; ";
        detail_ += text;
    }
    bool ok() const { return ok_; }
    const std::string& detail() const { return detail_; }

private:
    bool ok_ = true;
    std::string detail_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

ExperimentConfig base(const Settings& s, ScenarioKind scenario, SelectionRule rule, std::vector<Method> methods) {
    ExperimentConfig c;
    c.scenario = scenario;
    c.n_train = c.n_cal = c.m = 200;
    c.alpha = 0.1;
    c.rule = std::move(rule);
    c.methods = std::move(methods);
    c.reps = 1000;
    c.master_seed = s.seed;
    c.threads = s.threads;
    return c;
}

struct Timed {
    ExperimentResult result;
    double seconds = 0.0;
};

Timed timed_run(const ExperimentConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Timed t{run_experiment(c), 0.0};
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return t;
}

const MethodSummary& get(const ExperimentResult& r, Method m) {
    for (const auto& s : r.summaries)
        if (s.method == m) return s;
    throw std::logic_error("method missing from summaries");
}

void fcr_near(Verdict& v, const ExperimentResult& r, Method m, double target) {
    const double got = get(r, m).fcr;
    v.check(std::abs(got - target) <= kFcrTol,
            std::string(method_name(m)) + fmt(" fcr %.4f (%.4f)", got, target));
}

void length_near(Verdict& v, const ExperimentResult& r, Method m, double target) {
    const auto& s = get(r, m);
    const double got = s.mean_length.value_or(NAN);
    v.check(std::abs(got - target) <= kLengthTol * target,
            std::string(method_name(m)) + fmt(" len %.3f (%.2f)", got, target));
}

void within_time(Verdict& v, double seconds) { v.check(seconds < kMaxSeconds, fmt("%.1fs", seconds)); }

// Runs the CLI in-process, writing to `out`; returns the file bytes.
std::string cli_output(std::vector<std::string> args, const std::filesystem::path& out) {
    args.insert(args.begin(), "scop");
    args.push_back("--out");
    args.push_back(out.string());
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink_out, sink_err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
    if (code != 0) throw std::runtime_error("cli exited with " + std::to_string(code) + ": " + sink_err.str());
    std::ifstream in(out, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict criterion_1_and_6(const Settings& s, Verdict& six) {
    const Timed t = timed_run(base(s, ScenarioKind::A, rules::TCons{-1.0},
                                   {Method::SCOP, Method::SCOP_PLUS, Method::OCP, Method::ACP}));
    const auto& r = t.result;
    Verdict v;
    fcr_near(v, r, Method::SCOP, 0.0976);
    length_near(v, r, Method::SCOP, 11.83);
    fcr_near(v, r, Method::OCP, 0.1467);
    length_near(v, r, Method::OCP, 9.91);
    fcr_near(v, r, Method::ACP, 0.0491);
    length_near(v, r, Method::ACP, 14.87);
    within_time(v, t.seconds);

    const auto& a = get(r, Method::SCOP);
    const auto& b = get(r, Method::SCOP_PLUS);
    const double dl = std::abs(a.mean_length.value_or(NAN) - b.mean_length.value_or(NAN));
    six.check(std::abs(a.fcr - b.fcr) <= 0.01, fmt("|fcr scop - scop+| %.4f (<= 0.01)", std::abs(a.fcr - b.fcr)));
    six.check(dl <= 0.15, fmt("|len scop - scop+| %.3f (<= 0.15)", dl));
    six.note(fmt("scop %.4f/%.3f, scop+ %.4f", a.fcr, a.mean_length.value_or(NAN), b.fcr) +
             fmt("/%.3f", b.mean_length.value_or(NAN)));
    return v;
}

Verdict criterion_2(const Settings& s) {
    const Timed t = timed_run(base(s, ScenarioKind::A, rules::TTop{60}, {Method::SCOP, Method::OCP, Method::ACP}));
    Verdict v;
    fcr_near(v, t.result, Method::SCOP, 0.0973);
    fcr_near(v, t.result, Method::OCP, 0.1526);
    fcr_near(v, t.result, Method::ACP, 0.0490);
    within_time(v, t.seconds);
    return v;
}

Verdict criterion_3(const Settings& s) {
    const Timed t = timed_run(base(s, ScenarioKind::B, rules::TCons{-8.0}, {Method::SCOP, Method::OCP, Method::ACP}));
    Verdict v;
    fcr_near(v, t.result, Method::SCOP, 0.0999);
    length_near(v, t.result, Method::SCOP, 5.03);
    fcr_near(v, t.result, Method::OCP, 0.1225);
    fcr_near(v, t.result, Method::ACP, 0.0505);
    within_time(v, t.seconds);
    return v;
}

Verdict criterion_4(const Settings& s) {
    const Timed t =
        timed_run(base(s, ScenarioKind::A, rules::TPos{-1.0, 0.2}, {Method::SCOP, Method::SCOP_PLUS, Method::OCP}));
    const auto& r = t.result;
    Verdict v;
    const double scop = get(r, Method::SCOP).fcr;
    const double plus = get(r, Method::SCOP_PLUS).fcr;
    const double ocp = get(r, Method::OCP).fcr;
    const double fdr = r.selection_fdr.value_or(NAN);
    v.check(scop <= 0.085, fmt("scop fcr %.4f (<= 0.085)", scop));
    v.check(plus <= 0.085, fmt("scop+ fcr %.4f (<= 0.085)", plus));
    v.check(ocp >= 0.115, fmt("ocp fcr %.4f (>= 0.115)", ocp));
    v.check(fdr <= 0.22, fmt("selection fdr %.4f (<= 0.22)", fdr));
    v.note(fmt("mean selected %.2f, failed reps %.0f", get(r, Method::SCOP).mean_selected,
               static_cast<double>(r.failed_reps)));
    within_time(v, t.seconds);
    return v;
}

Verdict criterion_5(const Settings& s) {
    const std::vector<double> qs{20, 40, 60, 80, 100};
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = sweep(base(s, ScenarioKind::A, rules::TExch{50}, {Method::SCOP, Method::OCP}), QGrid{qs});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Verdict v;
    for (std::size_t g = 0; g < qs.size(); ++g) {
        const double scop = get(results[g], Method::SCOP).fcr;
        const double ocp = get(results[g], Method::OCP).fcr;
        const bool ocp_in = ocp >= 0.08 && ocp <= 0.12;
        v.check(scop >= 0.08 && scop <= 0.12, fmt("q=%.0f scop %.4f", qs[g], scop));
        if (qs[g] == 100.0) {
            v.check(ocp_in, fmt("q=%.0f ocp %.4f in band", qs[g], ocp));
        } else {
            v.check(!ocp_in, fmt("q=%.0f ocp %.4f out of band", qs[g], ocp));
        }
        if (qs[g] == 20.0) v.check(ocp >= 0.115, fmt("q=20 ocp %.4f (>= 0.115)", ocp));
    }
    v.check(seconds < kMaxSeconds * static_cast<double>(qs.size()), fmt("%.1fs", seconds));
    return v;
}

Verdict criterion_7(const Settings& s) {
    ExperimentConfig c = base(s, ScenarioKind::A, rules::TCons{-1.0}, {Method::SCOP, Method::OCP});
    c.score_kind = ScoreKind::Cqr;
    const Timed t = timed_run(c);
    Verdict v;
    const double scop = get(t.result, Method::SCOP).fcr;
    v.check(scop >= 0.075 && scop <= 0.115, fmt("scop fcr %.4f in [0.075, 0.115]", scop));
    v.note(fmt("ocp fcr %.4f", get(t.result, Method::OCP).fcr));
    within_time(v, t.seconds);
    return v;
}

Verdict criterion_8(const Settings& s) {
    const Timed t = timed_run(base(s, ScenarioKind::A, rules::TExch{50}, {Method::SCOP}));
    Verdict v;
    const auto& sc = get(t.result, Method::SCOP);
    v.check(sc.fcr >= 0.08, fmt("scop fcr %.4f (>= 0.08)", sc.fcr));
    within_time(v, t.seconds);
    return v;
}

Verdict criterion_9() {
    Verdict v;
    for (const auto& r : run_selfcheck()) {
        v.check(r.passed(), r.name + " " + std::to_string(r.failures) + "/" + std::to_string(r.cases));
    }
    return v;
}

Verdict criterion_10() {
    const auto dir = std::filesystem::temp_directory_path() / "scop_acceptance_repro";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const unsigned many = std::max(8u, std::thread::hardware_concurrency());

    const std::vector<std::vector<std::string>> configs{
        {"simulate", "--scenario", "A", "--rule", "t-cons:-1", "--methods", "scop,scop+,ocp,acp", "--reps", "200",
         "--seed", "11", "--format", "json"},
        {"simulate", "--scenario", "B", "--rule", "t-top:60", "--methods", "scop,ocp,acp", "--reps", "200", "--seed",
         "12", "--format", "csv"},
        {"simulate", "--scenario", "A", "--rule", "t-pos:-1,0.2", "--methods", "scop,scop+,ocp,acp", "--reps", "100",
         "--seed", "13", "--score", "cqr", "--format", "json"},
        {"sweep", "--scenario", "C", "--rule", "t-exch:50", "--q", "30,70", "--methods", "scop,ocp,acp", "--reps",
         "100", "--seed", "14", "--format", "csv"},
        {"simulate", "--scenario", "C", "--rule", "t-clu", "--methods", "scop,scop+,ocp,acp", "--reps", "100",
         "--seed", "15", "--format", "json"},
    };

    Verdict v;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        const auto with_threads = [&](unsigned threads) {
            auto args = configs[k];
            args.push_back("--threads");
            args.push_back(std::to_string(threads));
            return args;
        };
        const std::string first = cli_output(with_threads(1), dir / "a.out");
        const std::string second = cli_output(with_threads(1), dir / "b.out");
        const std::string parallel = cli_output(with_threads(many), dir / "c.out");
        const std::string label = configs[k][0] + " " + configs[k][4];
        v.check(!first.empty() && first == second, label + " repeat");
        v.check(first == parallel, label + " 1 vs " + std::to_string(many) + " threads");
    }
    std::filesystem::remove_all(dir);
    return v;
}

void report(int number, const Verdict& v, bool& all) {
    all = all && v.ok();
    std::cout << "criterion " << number << ": " << (v.ok() ? "PASS" : "FAIL") << "  " << v.detail() << std::endl;
}

} // namespace

int main(int argc, char** argv) {
    Settings s;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--seed") {
            s.seed = std::strtoull(argv[i + 1], nullptr, 10);
        } else if (flag == "--threads") {
            s.threads = static_cast<unsigned>(std::strtoul(argv[i + 1], nullptr, 10));
        } else {
            std::cerr << "unknown flag " << flag << '\n';
            return 2;
        }
    }
    if (s.threads == 0) s.threads = std::max(1u, std::thread::hardware_concurrency());
    std::cout << "acceptance: 1000 reps, n = m = 200, alpha = 0.1, seed " << s.seed << ", " << s.threads
              << " threads; '!' marks a failed check, targets in parentheses" << std::endl;

    bool all = true;
    try {
        Verdict six;
        const Verdict one = criterion_1_and_6(s, six);
        report(1, one, all);
        report(2, criterion_2(s), all);
        report(3, criterion_3(s), all);
        report(4, criterion_4(s), all);
        report(5, criterion_5(s), all);
        report(6, six, all);
        report(7, criterion_7(s), all);
        report(8, criterion_8(s), all);
        report(9, criterion_9(), all);
        report(10, criterion_10(), all);
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
    return all ? 0 : 1;
}
