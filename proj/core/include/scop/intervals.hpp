#pragma once

#include "scop/order_stats.hpp"
#include "scop/predictors.hpp"
#include "scop/selection.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scop {

enum class Method { OCP, ACP, SCOP, SCOP_PLUS };
enum class ScoreKind { AbsResidual, Cqr };

std::string_view method_name(Method m);
std::string_view score_kind_name(ScoreKind k);
/// Accepts "ocp", "acp", "scop", "scop+" (also "scop-plus").
Method parse_method(std::string_view name);
ScoreKind parse_score_kind(std::string_view name);

/// How ACP picks the per-unit level alpha * M / m.
enum class AcpMode {
    /// M = M_min^j from the substitution search.
    Exact,
    /// M = |selected test set|.
    SelectedSize,
};

struct PredictionInterval {
    /// Position in the test span.
    std::size_t unit = 0;
    double lo = -kInf;
    double hi = kInf;
    /// Calibrated half-width; negative only for CQR.
    double half_width = kInf;
    Method method = Method::OCP;
    ScoreKind score_kind = ScoreKind::AbsResidual;
    /// CQR band inverted past itself: the prediction set is empty.
    bool empty = false;

    bool contains(double y) const noexcept { return !empty && lo <= y && y <= hi; }
    double length() const noexcept { return empty ? 0.0 : hi - lo; }
};

/// Marginal split-conformal interval mu_hat +- Q_alpha(all calibration
/// residuals) for every selected test unit.
std::vector<PredictionInterval> ocp_intervals(const SampleSet& cal_residuals, const SelectionOutcome& selected,
                                              std::span<const ScoredUnit> test, double alpha);

/// FCR-adjusted interval: unit j uses level alpha_j = alpha * M_j / m on the
/// full calibration residuals.
std::vector<PredictionInterval> acp_intervals(const SampleSet& cal_residuals, const SelectionOutcome& selected,
                                              std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test,
                                              double alpha, AcpMode mode = AcpMode::Exact);

/// Per-unit ACP levels alpha * M_j / m, aligned with selected.selected_test.
std::vector<double> acp_levels(const SelectionOutcome& selected, std::span<const ScoredUnit> cal,
                               std::span<const ScoredUnit> test, double alpha, AcpMode mode);

/// Selection-conditional interval: one half-width from the residuals of the
/// selected calibration units (or the inflated set when use_plus), applied to
/// every selected test unit. Throws std::invalid_argument when use_plus is
/// requested but the outcome carries no inflated calibration set.
std::vector<PredictionInterval> scop_intervals(const SelectionOutcome& selected, std::span<const ScoredUnit> cal,
                                               std::span<const ScoredUnit> test, double alpha, bool use_plus);

/// Calibration positions a method calibrates on: all of C for OCP/ACP,
/// selected_cal for SCOP, selected_cal_plus for SCOP+.
std::vector<std::size_t> calibration_positions(Method method, const SelectionOutcome& selected,
                                               std::size_t n_cal);

/// CQR intervals [q_lo - w, q_hi + w]. `acp_alpha` supplies the per-unit
/// levels when method is ACP (see acp_levels) and is ignored otherwise.
std::vector<PredictionInterval> cqr_intervals(Method method, const SelectionOutcome& selected,
                                              std::span<const CqrUnit> cal, std::span<const CqrUnit> test,
                                              double alpha, std::span<const double> acp_alpha = {});

struct CoverageRecord {
    /// Misses over max(|selected|, 1).
    double fcp = 0.0;
    /// Mean interval length; absent with no intervals, +inf when any interval
    /// is unbounded.
    std::optional<double> avg_length;
    std::size_t n_selected = 0;
    bool infinite = false;
};

/// `responses` is indexed by test position.
CoverageRecord evaluate_coverage(std::span<const PredictionInterval> intervals, std::span<const double> responses);

} // namespace scop
