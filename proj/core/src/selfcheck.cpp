#include "scop/selfcheck.hpp"

#include "scop/order_stats.hpp"
#include "scop/rng.hpp"
#include "scop/selection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scop {

namespace {

class Tally {
public:
    explicit Tally(std::string name) { result_.name = std::move(name); }

    void check(bool ok, const std::string& detail_if_failed) {
        ++result_.cases;
        if (ok) return;
        if (result_.failures++ == 0) result_.first_failure = detail_if_failed;
    }

    template <class Describe>
    void check_lazy(bool ok, Describe describe) {
        ++result_.cases;
        if (ok) return;
        if (result_.failures++ == 0) result_.first_failure = describe();
    }

    CheckResult done() { return std::move(result_); }

private:
    CheckResult result_;
};

std::vector<double> distinct_uniforms(std::size_t n, RandomStream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-10.0, 10.0);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return distinct_uniforms(n, rng);
    return v;
}

// Values on a coarse lattice so that ties are frequent.
std::vector<double> lattice(std::size_t n, RandomStream& rng, int levels, double step) {
    std::vector<double> v(n);
    for (auto& x : v) x = step * std::floor(rng.uniform01() * levels);
    return v;
}

double alpha_in_unit(RandomStream& rng) { return 0.001 + 0.998 * rng.uniform01(); }

std::size_t count_above(const std::vector<double>& v, double q) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [q](double x) { return x > q; }));
}

std::vector<ScoredUnit> units_from(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<ScoredUnit> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        out[i].index = i;
        out[i].mu_hat = t[i];
        out[i].t_score = t[i];
        if (!y.empty()) {
            out[i].response = y[i];
            out[i].residual_score = std::abs(y[i] - t[i]);
        }
    }
    return out;
}

bool has_null(const std::vector<ScoredUnit>& cal, double b0) {
    return std::any_of(cal.begin(), cal.end(), [b0](const ScoredUnit& u) { return *u.response >= b0; });
}

// Sum of squared deviations from the mean, two-pass.
double sse(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s;
}

} // namespace

CheckResult check_quantile_bounds(std::uint64_t seed) {
    Tally tally("quantile tail bounds");
    RandomStream rng(derive_seed(seed, 1));
    for (std::size_t n = 1; n <= 200; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const double alpha = alpha_in_unit(rng);
            const auto x = distinct_uniforms(n, rng);
            const auto tied = lattice(n, rng, 4, 1.0);
            const double nd = static_cast<double>(n);
            const std::size_t k = ceil_rank(nd * (1.0 - alpha));

            const double q = kth_smallest(SampleSet(x), k);
            const double above = static_cast<double>(count_above(x, q));
            tally.check_lazy(above <= alpha * nd, [&] {
                std::ostringstream s;
                s << "upper bound, n=" << n << " alpha=" << alpha << " count=" << above;
                return s.str();
            });
            tally.check_lazy(above >= alpha * nd - 1.0, [&] {
                std::ostringstream s;
                s << "lower bound, n=" << n << " alpha=" << alpha << " count=" << above;
                return s.str();
            });

            const double qt = kth_smallest(SampleSet(tied), k);
            const double above_t = static_cast<double>(count_above(tied, qt));
            tally.check_lazy(above_t <= alpha * nd, [&] {
                std::ostringstream s;
                s << "upper bound with ties, n=" << n << " alpha=" << alpha << " count=" << above_t;
                return s.str();
            });
        }
    }
    return tally.done();
}

CheckResult check_drop_one(std::uint64_t seed) {
    Tally tally("leave-one-out order statistics");
    RandomStream rng(derive_seed(seed, 2));
    for (std::size_t n = 2; n <= 60; ++n) {
        const auto x = distinct_uniforms(n, rng);
        const SampleSet s(x);
        const auto& sorted = s.sorted();
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (i != j) rest.push_back(x[i]);
            }
            std::sort(rest.begin(), rest.end());
            for (std::size_t r = 1; r < n; ++r) {
                const double got = drop_one_rank(s, x[j], r);
                tally.check_lazy(got == rest[r - 1], [&] {
                    std::ostringstream msg;
                    msg << "drop_one_rank n=" << n << " j=" << j << " r=" << r;
                    return msg.str();
                });
                tally.check_lazy((x[j] <= sorted[r - 1]) == (x[j] <= got), [&] {
                    std::ostringstream msg;
                    msg << "event equivalence n=" << n << " j=" << j << " r=" << r;
                    return msg.str();
                });
            }
        }
    }
    return tally.done();
}

CheckResult check_dual_form(std::uint64_t seed) {
    Tally tally("BH p-value and score forms agree");
    RandomStream rng(derive_seed(seed, 3));
    constexpr std::size_t n = 50;
    constexpr std::size_t m = 50;
    std::size_t instance = 0;
    while (instance < 1000) {
        const auto cal_t = distinct_uniforms(n, rng);
        const auto test_t = distinct_uniforms(m, rng);
        std::vector<double> cal_y(n);
        for (std::size_t i = 0; i < n; ++i) cal_y[i] = cal_t[i] + 3.0 * rng.normal();
        const double b0 = rng.uniform(-8.0, 8.0);
        const double beta = 0.05 + 0.45 * rng.uniform01();
        const auto cal = units_from(cal_t, cal_y);
        const auto test = units_from(test_t, {});
        if (!has_null(cal, b0)) continue;
        ++instance;

        const ConformalPValues p = conformal_pvalues(cal, test, b0);
        std::vector<double> ps = p.p;
        std::sort(ps.begin(), ps.end());
        std::size_t kappa = 0;
        for (std::size_t r = 1; r <= m; ++r) {
            if (ps[r - 1] <= static_cast<double>(r) * beta / static_cast<double>(m)) kappa = r;
        }
        std::vector<std::size_t> by_p;
        if (kappa > 0) {
            for (std::size_t i = 0; i < m; ++i) {
                if (p.p[i] <= ps[kappa - 1]) by_p.push_back(i);
            }
        }
        const SelectionOutcome by_score = bh_select(p, beta, test);
        tally.check_lazy(by_score.selected_test == by_p && by_score.kappa_hat.value_or(0) == kappa, [&] {
            std::ostringstream msg;
            msg << "instance " << instance << ": kappa=" << kappa << " p-form size=" << by_p.size()
                << " score-form size=" << by_score.selected_test.size();
            return msg.str();
        });
    }
    return tally.done();
}

CheckResult check_m_min_grid(std::uint64_t seed) {
    Tally tally("M_min equals dense-grid search");
    RandomStream rng(derive_seed(seed, 4));
    constexpr double kStep = 0.25;
    constexpr double kFine = 1.0 / 64.0;
    std::size_t instance = 0;
    while (instance < 200) {
        const auto n = static_cast<std::size_t>(4 + rng.uniform01() * 20);
        const auto m = static_cast<std::size_t>(3 + rng.uniform01() * 20);
        const auto cal_t = lattice(n, rng, 24, kStep);
        const auto test_t = lattice(m, rng, 24, kStep);
        std::vector<double> cal_y(n);
        for (std::size_t i = 0; i < n; ++i) cal_y[i] = cal_t[i] + kStep * std::floor(8.0 * rng.normal());
        const auto cal = units_from(cal_t, cal_y);
        auto test = units_from(test_t, {});

        SelectionRule rule;
        switch (instance % 6) {
        case 0: rule = rules::TExch{10.0 + 90.0 * rng.uniform01()}; break;
        case 1: {
            const double b0 = kStep * std::floor(rng.uniform(4.0, 20.0));
            if (!has_null(cal, b0)) continue;
            rule = rules::TPos{b0, 0.1 + 0.6 * rng.uniform01()};
            break;
        }
        case 2: rule = rules::TCons{kStep * std::floor(rng.uniform(0.0, 24.0)) + 0.1}; break;
        case 3: rule = rules::TCal{10.0 + 90.0 * rng.uniform01()}; break;
        case 4: rule = rules::TTop{1 + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(m))}; break;
        default: rule = rules::TTest{10.0 + 90.0 * rng.uniform01()}; break;
        }
        ++instance;

        // Thresholds come from scores or, for T-cal, responses; scan past both.
        std::vector<double> span_of = cal_t;
        span_of.insert(span_of.end(), test_t.begin(), test_t.end());
        span_of.insert(span_of.end(), cal_y.begin(), cal_y.end());
        const double lo = *std::min_element(span_of.begin(), span_of.end()) - 2.0;
        const double hi = *std::max_element(span_of.begin(), span_of.end()) + 2.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double original = test[j].t_score;
            std::size_t best = 0;
            for (double t = lo; t <= hi; t += kFine) {
                test[j].t_score = t;
                const SelectionOutcome out = apply_rule(rule, cal, test);
                if (std::binary_search(out.selected_test.begin(), out.selected_test.end(), j)) {
                    if (best == 0 || out.selected_test.size() < best) best = out.selected_test.size();
                }
            }
            test[j].t_score = original;
            const MMin got = m_min(rule, cal, test, j);
            const std::size_t expect = best == 0 ? 1 : best;
            tally.check_lazy(got.value == expect && got.fallback == (best == 0), [&] {
                std::ostringstream msg;
                msg << to_string(rule) << " n=" << n << " m=" << m << " j=" << j << ": grid=" << expect
                    << (best == 0 ? " (none)" : "") << " m_min=" << got.value << (got.fallback ? " (fallback)" : "");
                return msg.str();
            });
        }
    }
    return tally.done();
}

CheckResult check_fisher_split(std::uint64_t seed) {
    Tally tally("Fisher split equals exhaustive SSE scan");
    RandomStream rng(derive_seed(seed, 5));
    for (std::size_t instance = 0; instance < 200; ++instance) {
        const auto n = static_cast<std::size_t>(1 + rng.uniform01() * 20);
        const auto m = static_cast<std::size_t>(1 + rng.uniform01() * 20);
        std::vector<double> cal;
        std::vector<double> test;
        if (instance % 3 == 0) {
            cal = lattice(n, rng, 6, 0.5);
            test = lattice(m, rng, 6, 0.5);
        } else if (instance % 3 == 1) {
            cal = distinct_uniforms(n, rng);
            test = distinct_uniforms(m, rng);
        } else {
            cal.assign(n, 1.5);
            test.assign(m, 1.5);
            if (instance % 2 == 0) test.back() = 1.5 + rng.uniform(0.1, 3.0);
        }

        std::vector<double> pooled = cal;
        pooled.insert(pooled.end(), test.begin(), test.end());
        std::sort(pooled.begin(), pooled.end());
        const std::size_t total = pooled.size();

        const double tie = 1e-10 * sse(pooled);
        double best_sse = kInf;
        double best_tau = pooled.front();
        bool degenerate = true;
        for (std::size_t c = 1; c < total; ++c) {
            if (pooled[c - 1] == pooled[c]) continue;
            degenerate = false;
            const std::span<const double> all(pooled);
            const double s = sse(all.first(c)) + sse(all.subspan(c));
            if (s < best_sse - tie) {
                best_sse = s;
                best_tau = pooled[c - 1];
            }
        }

        const SelectionOutcome out = fisher_split(SampleSet(cal), SampleSet(test));
        const auto at_or_below = static_cast<std::size_t>(
            std::count_if(test.begin(), test.end(), [&](double v) { return v <= best_tau; }));
        tally.check_lazy(out.tau_hat == best_tau && out.degenerate == degenerate &&
                             out.selected_test.size() == at_or_below,
                         [&] {
                             std::ostringstream msg;
                             msg << "instance " << instance << " size " << total << ": exhaustive tau=" << best_tau
                                 << " fisher tau=" << out.tau_hat;
                             return msg.str();
                         });
    }
    return tally.done();
}

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
    return {check_quantile_bounds(seed), check_drop_one(seed), check_dual_form(seed), check_m_min_grid(seed),
            check_fisher_split(seed)};
}

} // namespace scop
