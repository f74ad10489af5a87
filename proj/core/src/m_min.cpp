#include "scop/selection.hpp"

#include <algorithm>
#include <cmath>

namespace scop {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t count_le(std::span<const double> asc, double t) {
    return static_cast<std::size_t>(std::upper_bound(asc.begin(), asc.end(), t) - asc.begin());
}

// k-th smallest (1-based) of asc with one extra value t inserted.
double kth_with_insert(std::span<const double> asc, double t, std::size_t k) {
    if (k <= asc.size() && asc[k - 1] < t) return asc[k - 1];
    return k >= 2 ? std::max(asc[k - 2], t) : t;
}

struct Trial {
    std::size_t size = 0;
    bool selected = false;
};

// Sorted views of the scores with test position j left out. Rebuilt per j by
// erasing one element from the shared sorted arrays.
struct LeaveOneOut {
    std::vector<double> test_others;
    std::vector<double> pooled_others;
};

class Searcher {
public:
    Searcher(const SelectionRule& rule, std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test)
        : rule_(rule), cal_(cal), test_(test) {
        for (const auto& u : test) test_sorted_.push_back(u.t_score);
        for (const auto& u : cal) cal_sorted_.push_back(u.t_score);
        pooled_sorted_ = cal_sorted_;
        pooled_sorted_.insert(pooled_sorted_.end(), test_sorted_.begin(), test_sorted_.end());
        std::sort(test_sorted_.begin(), test_sorted_.end());
        std::sort(cal_sorted_.begin(), cal_sorted_.end());
        std::sort(pooled_sorted_.begin(), pooled_sorted_.end());

        if (const auto* pos = std::get_if<rules::TPos>(&rule_)) {
            const ConformalPValues p = conformal_pvalues(cal, test, pos->b0);
            null_scores_ = p.null_cal_scores;
            pvalues_ = p.p;
        }
        if (const auto* cal_rule = std::get_if<rules::TCal>(&rule_)) {
            const SelectionOutcome base = apply_rule(*cal_rule, cal, test);
            cal_tau_ = base.tau_hat;
        }
    }

    MMin run(std::size_t j) const {
        const std::size_t m = test_.size();
        const double tj = test_[j].t_score;
        return std::visit(
            overloaded{
                [&](const rules::TTop& r) { return ranked(j, std::min(r.k, m)); },
                [&](const rules::TTest& r) {
                    return ranked(j, std::min(floor_rank(r.q * static_cast<double>(m) / 100.0), m));
                },
                [&](const rules::TCons& r) { return below_fixed(r.b0, tj); },
                [&](const rules::TCal&) { return below_fixed(cal_tau_, tj); },
                [&](const auto&) { return search(j); },
            },
            rule_);
    }

private:
    // The k smallest test scores, ties included: size k unless T_j ties
    // with others at the cut.
    MMin ranked(std::size_t j, std::size_t k) const {
        if (k == 0) return MMin{1, true};
        return search(j, k);
    }

    MMin below_fixed(double tau, double tj) const {
        // The threshold does not move with T_j; any t <= tau keeps j selected.
        const std::size_t others = count_le(test_sorted_, tau) - (tj <= tau ? 1 : 0);
        return MMin{others + 1, false};
    }

    static std::vector<double> erase_one(const std::vector<double>& asc, double v) {
        std::vector<double> out = asc;
        out.erase(std::lower_bound(out.begin(), out.end(), v));
        return out;
    }

    MMin search(std::size_t j, std::size_t rank = 0) const {
        const double tj = test_[j].t_score;
        LeaveOneOut loo{erase_one(test_sorted_, tj), erase_one(pooled_sorted_, tj)};
        const auto& others = loo.pooled_others;

        // BH bookkeeping for the other test p-values.
        std::vector<double> q;
        std::vector<std::size_t> pref_a;
        std::vector<std::size_t> suf_b;
        if (std::holds_alternative<rules::TPos>(rule_)) prepare_bh(j, q, pref_a, suf_b);

        auto evaluate = [&](double t) -> Trial {
            return std::visit(
                overloaded{
                    [&](const rules::TExch& r) { return exch_trial(r, loo, t); },
                    [&](const rules::TPos& r) { return pos_trial(r, loo, q, pref_a, suf_b, t); },
                    [&](const rules::TClu&) { return clu_trial(loo, t); },
                    [&](const auto&) { return finish(loo, t, kth_with_insert(loo.test_others, t, rank)); },
                },
                rule_);
        };

        std::vector<double> candidates;
        candidates.reserve(2 * others.size() + 2);
        if (others.empty()) {
            candidates = {-kInf, tj};
        } else {
            candidates.push_back(-kInf);
            for (std::size_t i = 0; i < others.size(); ++i) {
                candidates.push_back(others[i]);
                if (i + 1 < others.size() && others[i + 1] > others[i]) {
                    candidates.push_back(others[i] + (others[i + 1] - others[i]) / 2.0);
                }
            }
            candidates.push_back(others.back() + std::max(1.0, std::abs(others.back())));
        }

        MMin best{0, true};
        for (double t : candidates) {
            const Trial trial = evaluate(t);
            if (!trial.selected) continue;
            if (best.fallback || trial.size < best.value) best = MMin{trial.size, false};
            if (best.value == 1) break;
        }
        if (best.fallback) best.value = 1;
        return best;
    }

    Trial exch_trial(const rules::TExch& r, const LeaveOneOut& loo, double t) const {
        const std::size_t total = pooled_sorted_.size();
        const std::size_t k = std::clamp<std::size_t>(ceil_rank(r.q * static_cast<double>(total) / 100.0), 1, total);
        const double tau = kth_with_insert(loo.pooled_others, t, k);
        return finish(loo, t, tau);
    }

    Trial clu_trial(const LeaveOneOut& loo, double t) const {
        if (std::isinf(t)) {
            // Limit t -> -inf: the substituted score forms the lower group alone.
            return Trial{1, true};
        }
        std::vector<double> pooled = loo.pooled_others;
        pooled.insert(std::upper_bound(pooled.begin(), pooled.end(), t), t);
        const FisherCut cut = fisher_cut_sorted(pooled);
        return finish(loo, t, cut.tau);
    }

    void prepare_bh(std::size_t j, std::vector<double>& q, std::vector<std::size_t>& pref_a,
                    std::vector<std::size_t>& suf_b) const {
        const auto& beta = std::get<rules::TPos>(rule_).beta;
        const std::size_t m = test_.size();
        q.clear();
        for (std::size_t i = 0; i < m; ++i) {
            if (i != j) q.push_back(pvalues_[i]);
        }
        std::sort(q.begin(), q.end());
        const double md = static_cast<double>(m);
        // pref_a[s]: largest r <= s with q_r <= r beta / m (ranks of the others
        // that sit below the inserted p-value).
        pref_a.assign(m, 0);
        for (std::size_t r = 1; r < m; ++r) {
            pref_a[r] = pref_a[r - 1];
            if (q[r - 1] <= static_cast<double>(r) * beta / md) pref_a[r] = r;
        }
        // suf_b[r]: largest r' >= r with q_{r'-1} <= r' beta / m (others
        // shifted up one rank by the inserted p-value).
        suf_b.assign(m + 2, 0);
        for (std::size_t r = m; r >= 2; --r) {
            suf_b[r] = suf_b[r + 1];
            if (suf_b[r] == 0 && q[r - 2] <= static_cast<double>(r) * beta / md) suf_b[r] = r;
        }
    }

    Trial pos_trial(const rules::TPos& r, const LeaveOneOut& loo, const std::vector<double>& q,
                    const std::vector<std::size_t>& pref_a, const std::vector<std::size_t>& suf_b,
                    double t) const {
        const std::size_t m = test_.size();
        const double p = (1.0 + static_cast<double>(count_le(null_scores_, t))) /
                         static_cast<double>(null_scores_.size() + 1);
        const std::size_t s = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), p) - q.begin());
        std::size_t kappa = pref_a[s];
        if (p <= static_cast<double>(s + 1) * r.beta / static_cast<double>(m)) kappa = std::max(kappa, s + 1);
        if (s + 2 <= m) kappa = std::max(kappa, suf_b[s + 2]);
        if (kappa == 0) return Trial{0, false};
        const double tau = kth_with_insert(loo.test_others, t, kappa);
        return finish(loo, t, tau);
    }

    static Trial finish(const LeaveOneOut& loo, double t, double tau) {
        const bool selected = t <= tau;
        return Trial{count_le(loo.test_others, tau) + (selected ? 1 : 0), selected};
    }

    const SelectionRule& rule_;
    std::span<const ScoredUnit> cal_;
    std::span<const ScoredUnit> test_;
    std::vector<double> test_sorted_;
    std::vector<double> cal_sorted_;
    std::vector<double> pooled_sorted_;
    std::vector<double> null_scores_;
    std::vector<double> pvalues_;
    double cal_tau_ = 0.0;
};

} // namespace

MMin m_min(const SelectionRule& rule, std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test,
           std::size_t j) {
    if (j >= test.size()) throw std::out_of_range("m_min: test position out of range");
    validate_rule(rule);
    return Searcher(rule, cal, test).run(j);
}

std::vector<MMin> m_min_batch(const SelectionRule& rule, std::span<const ScoredUnit> cal,
                              std::span<const ScoredUnit> test, std::span<const std::size_t> positions) {
    validate_rule(rule);
    std::vector<MMin> out;
    out.reserve(positions.size());
    if (positions.empty()) return out;
    const Searcher searcher(rule, cal, test);
    for (std::size_t j : positions) {
        if (j >= test.size()) throw std::out_of_range("m_min: test position out of range");
        out.push_back(searcher.run(j));
    }
    return out;
}

} // namespace scop
