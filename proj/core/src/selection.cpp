#include "scop/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace scop {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double parse_number(std::string_view text, std::string_view rule) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    // from_chars rejects a leading '+', accept it for convenience
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(value)) {
        throw std::invalid_argument("rule '" + std::string(rule) + "': '" + std::string(text) +
                                    "' is not a decimal number");
    }
    return value;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<double> scores_of(std::span<const ScoredUnit> units) {
    std::vector<double> out(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) out[i] = units[i].t_score;
    return out;
}

std::vector<std::size_t> at_or_below(std::span<const double> scores, double tau) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] <= tau) out.push_back(i);
    }
    return out;
}

double nth_of(std::vector<double> values, std::size_t k) {
    auto it = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(values.begin(), it, values.end());
    return *it;
}

// Fills selected_cal and the inflated calibration set from the test scores
// and the outcome's tau/kappa.
void fill_calibration(SelectionOutcome& out, std::span<const double> cal_scores,
                      std::span<const double> test_scores) {
    out.selected_cal = at_or_below(cal_scores, out.tau_hat);
    const std::size_t m = test_scores.size();
    const std::size_t k = out.kappa_hat.value_or(out.selected_test.size());
    if (k >= m) {
        out.tau_plus = kInf;
    } else {
        out.tau_plus = nth_of(std::vector<double>(test_scores.begin(), test_scores.end()), k + 1);
    }
    out.selected_cal_plus = at_or_below(cal_scores, out.tau_plus);
}

void set_rank_threshold(SelectionOutcome& out, std::span<const double> test_scores, std::size_t k) {
    out.kappa_hat = k;
    if (k == 0) {
        out.tau_hat = -kInf;
        out.selected_test.clear();
        return;
    }
    out.tau_hat = nth_of(std::vector<double>(test_scores.begin(), test_scores.end()), k);
    out.selected_test = at_or_below(test_scores, out.tau_hat);
}

std::vector<double> cal_responses(std::span<const ScoredUnit> cal, const char* rule) {
    std::vector<double> y(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) {
        if (!cal[i].response) {
            throw std::invalid_argument(std::string(rule) + " needs calibration responses");
        }
        y[i] = *cal[i].response;
    }
    return y;
}

} // namespace

SelectionRule parse_rule(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    const bool has_args = colon != std::string_view::npos;

    auto need_args = [&] {
        if (!has_args || args.empty()) {
            throw std::invalid_argument("rule '" + std::string(text) + "' is missing its parameter");
        }
    };

    SelectionRule rule;
    if (name == "t-cons") {
        need_args();
        rule = rules::TCons{parse_number(args, text)};
    } else if (name == "t-cal") {
        need_args();
        rule = rules::TCal{parse_number(args, text)};
    } else if (name == "t-test") {
        need_args();
        rule = rules::TTest{parse_number(args, text)};
    } else if (name == "t-exch") {
        need_args();
        rule = rules::TExch{parse_number(args, text)};
    } else if (name == "t-top") {
        need_args();
        const double k = parse_number(args, text);
        if (k < 1.0 || k != std::floor(k)) {
            throw std::invalid_argument("rule '" + std::string(text) + "': K must be a positive integer");
        }
        rule = rules::TTop{static_cast<std::size_t>(k)};
    } else if (name == "t-pos") {
        need_args();
        const auto comma = args.find(',');
        if (comma == std::string_view::npos) {
            throw std::invalid_argument("rule '" + std::string(text) + "' expects t-pos:B0,BETA");
        }
        rule = rules::TPos{parse_number(args.substr(0, comma), text),
                           parse_number(args.substr(comma + 1), text)};
    } else if (name == "t-clu") {
        if (has_args) throw std::invalid_argument("rule 't-clu' takes no parameter");
        rule = rules::TClu{};
    } else {
        throw std::invalid_argument("unknown selection rule '" + std::string(text) + "'");
    }
    validate_rule(rule);
    return rule;
}

std::string to_string(const SelectionRule& rule) {
    return std::visit(
        overloaded{
            [](const rules::TCons& r) { return "t-cons:" + format_number(r.b0); },
            [](const rules::TCal& r) { return "t-cal:" + format_number(r.q); },
            [](const rules::TTest& r) { return "t-test:" + format_number(r.q); },
            [](const rules::TExch& r) { return "t-exch:" + format_number(r.q); },
            [](const rules::TTop& r) { return "t-top:" + std::to_string(r.k); },
            [](const rules::TPos& r) { return "t-pos:" + format_number(r.b0) + "," + format_number(r.beta); },
            [](const rules::TClu&) { return std::string("t-clu"); },
        },
        rule);
}

void validate_rule(const SelectionRule& rule) {
    auto check_q = [](double q) {
        if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("quantile level q must lie in (0, 100]");
    };
    std::visit(overloaded{
                   [](const rules::TCons& r) {
                       if (!std::isfinite(r.b0)) throw std::invalid_argument("b0 must be finite");
                   },
                   [&](const rules::TCal& r) { check_q(r.q); },
                   [&](const rules::TTest& r) { check_q(r.q); },
                   [&](const rules::TExch& r) { check_q(r.q); },
                   [](const rules::TTop& r) {
                       if (r.k < 1) throw std::invalid_argument("K must be at least 1");
                   },
                   [](const rules::TPos& r) {
                       if (!std::isfinite(r.b0)) throw std::invalid_argument("b0 must be finite");
                       if (!(r.beta > 0.0 && r.beta < 1.0)) {
                           throw std::invalid_argument("beta must lie in (0, 1)");
                       }
                   },
                   [](const rules::TClu&) {},
               },
               rule);
}

bool is_ranking_based(const SelectionRule& rule) {
    return std::holds_alternative<rules::TTest>(rule) || std::holds_alternative<rules::TTop>(rule) ||
           std::holds_alternative<rules::TPos>(rule);
}

bool is_exchangeable(const SelectionRule& rule) {
    return std::holds_alternative<rules::TCons>(rule) || std::holds_alternative<rules::TExch>(rule) ||
           std::holds_alternative<rules::TClu>(rule);
}

ConformalPValues conformal_pvalues(std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test,
                                   double b0) {
    ConformalPValues out;
    out.b0 = b0;
    for (const auto& u : cal) {
        if (!u.response) throw std::invalid_argument("conformal_pvalues: calibration unit without response");
        if (*u.response >= b0) out.null_cal_scores.push_back(u.t_score);
    }
    if (out.null_cal_scores.empty()) throw NoNullCalibration{};
    std::sort(out.null_cal_scores.begin(), out.null_cal_scores.end());

    const double denom = static_cast<double>(out.null_cal_scores.size() + 1);
    out.p.reserve(test.size());
    for (const auto& u : test) {
        const auto below = std::upper_bound(out.null_cal_scores.begin(), out.null_cal_scores.end(), u.t_score) -
                           out.null_cal_scores.begin();
        out.p.push_back((1.0 + static_cast<double>(below)) / denom);
    }
    return out;
}

std::size_t step_up_rank(std::span<const double> pvalues,
                         const std::function<double(std::size_t, std::size_t)>& delta) {
    std::vector<double> sorted(pvalues.begin(), pvalues.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    for (std::size_t r = m; r >= 1; --r) {
        if (sorted[r - 1] <= delta(r, m)) return r;
    }
    return 0;
}

std::function<double(std::size_t, std::size_t)> bh_thresholds(double beta) {
    return [beta](std::size_t r, std::size_t m) {
        return static_cast<double>(r) * beta / static_cast<double>(m);
    };
}

SelectionOutcome bh_select(const ConformalPValues& p, double beta, std::span<const ScoredUnit> test,
                           std::span<const ScoredUnit> cal) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("bh_select: beta must lie in (0, 1)");
    if (p.p.size() != test.size()) throw std::invalid_argument("bh_select: p-value count differs from test size");

    SelectionOutcome out;
    out.rule = rules::TPos{p.b0, beta};
    const std::vector<double> test_scores = scores_of(test);
    set_rank_threshold(out, test_scores, step_up_rank(p.p, bh_thresholds(beta)));
    if (!cal.empty()) fill_calibration(out, scores_of(cal), test_scores);
    return out;
}

FisherCut fisher_cut_sorted(std::span<const double> asc) {
    const std::size_t n = asc.size();
    if (n < 2) throw std::invalid_argument("fisher_split: need at least two pooled scores");
    if (asc.front() == asc.back()) return FisherCut{asc.front(), 0.0, true};

    // Center to keep the running sums well conditioned.
    const double center = std::accumulate(asc.begin(), asc.end(), 0.0) / static_cast<double>(n);
    double total_s = 0.0;
    double total_ss = 0.0;
    for (double v : asc) {
        total_s += v - center;
        total_ss += (v - center) * (v - center);
    }

    // Cuts whose SSE differs by less than this are ties; the smaller tau wins.
    const double tie = 1e-10 * total_ss;
    FisherCut best{asc.front(), kInf, false};
    double s = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = asc[i] - center;
        s += c;
        ss += c * c;
        // Split only after the last copy of a value, and never at the maximum.
        if (i + 1 < n && asc[i + 1] == asc[i]) continue;
        if (asc[i] == asc.back()) break;
        const double lo_n = static_cast<double>(i + 1);
        const double hi_n = static_cast<double>(n - i - 1);
        const double lo_sse = std::max(0.0, ss - s * s / lo_n);
        const double hs = total_s - s;
        const double hi_sse = std::max(0.0, (total_ss - ss) - hs * hs / hi_n);
        const double sse = lo_sse + hi_sse;
        if (sse < best.sse - tie) best = FisherCut{asc[i], sse, false};
    }
    return best;
}

SelectionOutcome fisher_split(const SampleSet& cal_scores, const SampleSet& test_scores) {
    std::vector<double> pooled;
    pooled.reserve(cal_scores.size() + test_scores.size());
    pooled.insert(pooled.end(), cal_scores.values().begin(), cal_scores.values().end());
    pooled.insert(pooled.end(), test_scores.values().begin(), test_scores.values().end());
    std::sort(pooled.begin(), pooled.end());
    const FisherCut cut = fisher_cut_sorted(pooled);

    SelectionOutcome out;
    out.rule = rules::TClu{};
    out.tau_hat = cut.tau;
    out.degenerate = cut.degenerate;
    out.selected_test = at_or_below(test_scores.values(), cut.tau);
    fill_calibration(out, cal_scores.values(), test_scores.values());
    return out;
}

SelectionOutcome apply_rule(const SelectionRule& rule, std::span<const ScoredUnit> cal,
                            std::span<const ScoredUnit> test) {
    validate_rule(rule);
    if (test.empty()) throw std::invalid_argument("apply_rule: empty test set");
    const std::vector<double> test_scores = scores_of(test);
    const std::vector<double> cal_scores = scores_of(cal);
    const std::size_t m = test.size();
    const std::size_t n = cal.size();

    SelectionOutcome out;
    out.rule = rule;
    std::visit(
        overloaded{
            [&](const rules::TCons& r) {
                out.tau_hat = r.b0;
                out.selected_test = at_or_below(test_scores, out.tau_hat);
            },
            [&](const rules::TCal& r) {
                if (n == 0) throw std::invalid_argument("t-cal needs a non-empty calibration set");
                const std::vector<double> y = cal_responses(cal, "t-cal");
                const std::size_t k = std::clamp<std::size_t>(ceil_rank(r.q * static_cast<double>(n) / 100.0), 1, n);
                out.tau_hat = nth_of(y, k);
                out.selected_test = at_or_below(test_scores, out.tau_hat);
            },
            [&](const rules::TTest& r) {
                const std::size_t k = std::min(floor_rank(r.q * static_cast<double>(m) / 100.0), m);
                set_rank_threshold(out, test_scores, k);
            },
            [&](const rules::TExch& r) {
                std::vector<double> pooled = cal_scores;
                pooled.insert(pooled.end(), test_scores.begin(), test_scores.end());
                const std::size_t total = pooled.size();
                const std::size_t k =
                    std::clamp<std::size_t>(ceil_rank(r.q * static_cast<double>(total) / 100.0), 1, total);
                out.tau_hat = nth_of(std::move(pooled), k);
                out.selected_test = at_or_below(test_scores, out.tau_hat);
            },
            [&](const rules::TTop& r) {
                if (r.k > m) {
                    throw std::invalid_argument("t-top: K = " + std::to_string(r.k) + " exceeds test size " +
                                                std::to_string(m));
                }
                set_rank_threshold(out, test_scores, r.k);
            },
            [&](const rules::TPos& r) {
                const ConformalPValues p = conformal_pvalues(cal, test, r.b0);
                set_rank_threshold(out, test_scores, step_up_rank(p.p, bh_thresholds(r.beta)));
            },
            [&](const rules::TClu&) {
                std::vector<double> pooled = cal_scores;
                pooled.insert(pooled.end(), test_scores.begin(), test_scores.end());
                std::sort(pooled.begin(), pooled.end());
                const FisherCut cut = fisher_cut_sorted(pooled);
                out.tau_hat = cut.tau;
                out.degenerate = cut.degenerate;
                out.selected_test = at_or_below(test_scores, out.tau_hat);
            },
        },
        rule);

    fill_calibration(out, cal_scores, test_scores);
    return out;
}

} // namespace scop
