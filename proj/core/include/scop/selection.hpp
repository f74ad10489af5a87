#pragma once

#include "scop/order_stats.hpp"
#include "scop/predictors.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace scop {

// Selection rules. Smaller scores are selected: every rule produces a score
// threshold tau and selects {i : T_i <= tau}.
namespace rules {

/// Fixed threshold tau = b0.
struct TCons {
    double b0 = 0.0;

    friend bool operator==(const TCons&, const TCons&) = default;
};
/// q% quantile of the calibration responses.
struct TCal {
    double q = 50.0;

    friend bool operator==(const TCal&, const TCal&) = default;
};
/// Rank floor(q m / 100) among the test scores.
struct TTest {
    double q = 50.0;

    friend bool operator==(const TTest&, const TTest&) = default;
};
/// q% quantile of the pooled calibration and test scores.
struct TExch {
    double q = 50.0;

    friend bool operator==(const TExch&, const TExch&) = default;
};
/// The K smallest test scores.
struct TTop {
    std::size_t k = 1;

    friend bool operator==(const TTop&, const TTop&) = default;
};
/// Benjamini-Hochberg on conformal p-values for H0: Y >= b0 at FDR level beta.
struct TPos {
    double b0 = 0.0;
    double beta = 0.2;

    friend bool operator==(const TPos&, const TPos&) = default;
};
/// Fisher optimal two-group division of the pooled scores.
struct TClu {
    friend bool operator==(const TClu&, const TClu&) = default;
};

} // namespace rules

using SelectionRule = std::variant<rules::TCons, rules::TCal, rules::TTest, rules::TExch,
                                   rules::TTop, rules::TPos, rules::TClu>;

/// Parses `t-cons:B0`, `t-cal:Q`, `t-test:Q`, `t-exch:Q`, `t-top:K`,
/// `t-pos:B0,BETA` or `t-clu`. Throws std::invalid_argument with a message
/// naming the problem.
SelectionRule parse_rule(std::string_view text);

/// Inverse of parse_rule; numbers are written in shortest round-trip form.
std::string to_string(const SelectionRule& rule);

/// Throws std::invalid_argument for q outside (0, 100], K < 1, or beta
/// outside (0, 1).
void validate_rule(const SelectionRule& rule);

/// Rules whose threshold is a rank among the test scores (T-test, T-top, T-pos).
bool is_ranking_based(const SelectionRule& rule);

/// Rules whose threshold is invariant to permuting the pooled calibration and
/// test scores (T-cons, T-exch, T-clu).
bool is_exchangeable(const SelectionRule& rule);

/// Raised when T-pos has no calibration unit with Y >= b0.
class NoNullCalibration : public std::runtime_error {
public:
    NoNullCalibration() : std::runtime_error("no null calibration units (Y >= b0)") {}
};

/// Result of a selection. Index sets hold positions into the calibration and
/// test spans that were passed in, ascending.
struct SelectionOutcome {
    SelectionRule rule;
    /// Realized score threshold; -inf when nothing can be selected.
    double tau_hat = -kInf;
    /// Rank threshold, present for ranking-based rules.
    std::optional<std::size_t> kappa_hat;
    std::vector<std::size_t> selected_test;
    std::vector<std::size_t> selected_cal;
    /// {i in C : T_i <= T_(k+1)} where k is kappa_hat, or |selected_test| for
    /// threshold rules; all of C when k >= m.
    std::optional<std::vector<std::size_t>> selected_cal_plus;
    double tau_plus = kInf;
    /// Fisher split over a constant pooled sample.
    bool degenerate = false;
};

struct ConformalPValues {
    double b0 = 0.0;
    /// Scores of C0 = {i in C : Y_i >= b0}, ascending.
    std::vector<double> null_cal_scores;
    /// One p-value per test unit, in test order.
    std::vector<double> p;
};

/// p_j = (1 + #{i in C0 : T_i <= T_j}) / (|C0| + 1). Throws NoNullCalibration
/// when C0 is empty and std::invalid_argument when a calibration unit has no
/// response.
ConformalPValues conformal_pvalues(std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test,
                                   double b0);

/// Step-up rank: max{r : p_(r) <= delta(r)}, 0 when no r qualifies.
std::size_t step_up_rank(std::span<const double> pvalues,
                         const std::function<double(std::size_t r, std::size_t m)>& delta);

/// Benjamini-Hochberg thresholds delta(r) = r beta / m.
std::function<double(std::size_t, std::size_t)> bh_thresholds(double beta);

/// BH at level beta, returned in score form {T_i <= T_(kappa)}. When `cal` is
/// non-empty the calibration sets are filled as well.
SelectionOutcome bh_select(const ConformalPValues& p, double beta, std::span<const ScoredUnit> test,
                           std::span<const ScoredUnit> cal = {});

/// Fisher optimal division of the pooled scores into {T <= tau} and the rest,
/// minimizing total within-group sum of squares. Candidates are the observed
/// values below the maximum; ties go to the smallest tau. A constant pooled
/// sample returns tau equal to that value with `degenerate` set. Throws
/// std::invalid_argument when fewer than two scores are pooled.
SelectionOutcome fisher_split(const SampleSet& cal_scores, const SampleSet& test_scores);

/// Threshold that fisher_split would pick for an ascending pooled sample.
/// Exposed for the substitution search in m_min.
struct FisherCut {
    double tau = 0.0;
    double sse = 0.0;
    bool degenerate = false;
};
FisherCut fisher_cut_sorted(std::span<const double> ascending);

/// Applies a rule to scored calibration and test units.
SelectionOutcome apply_rule(const SelectionRule& rule, std::span<const ScoredUnit> cal,
                            std::span<const ScoredUnit> test);

/// Smallest selected-set size over substitutions T_j <- t that keep test
/// unit j selected.
struct MMin {
    std::size_t value = 1;
    /// No candidate kept j selected; value falls back to 1.
    bool fallback = false;
};

/// M_min for test position j. T-cons and T-cal count the other test scores
/// under tau plus one; the remaining rules search t over -inf, every other
/// pooled score, the midpoints between consecutive pooled scores and a point
/// above the maximum. With distinct scores T-top(K) gives K and T-test gives
/// its rank; ties at the cut can make either larger.
MMin m_min(const SelectionRule& rule, std::span<const ScoredUnit> cal,
           std::span<const ScoredUnit> test, std::size_t j);

/// m_min for every position in `positions`, sharing the sorted state.
std::vector<MMin> m_min_batch(const SelectionRule& rule, std::span<const ScoredUnit> cal,
                              std::span<const ScoredUnit> test,
                              std::span<const std::size_t> positions);

} // namespace scop
