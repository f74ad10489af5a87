#include "scop/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scop {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

PredictionInterval symmetric(std::size_t unit, double center, double w, Method method) {
    PredictionInterval pi;
    pi.unit = unit;
    pi.half_width = w;
    pi.lo = center - w;
    pi.hi = center + w;
    pi.method = method;
    pi.score_kind = ScoreKind::AbsResidual;
    return pi;
}

std::vector<double> residuals_at(std::span<const ScoredUnit> cal, std::span<const std::size_t> positions) {
    std::vector<double> out;
    out.reserve(positions.size());
    for (std::size_t i : positions) {
        if (i >= cal.size()) throw std::out_of_range("calibration position out of range");
        if (!cal[i].residual_score) throw std::invalid_argument("calibration unit without residual score");
        out.push_back(*cal[i].residual_score);
    }
    std::sort(out.begin(), out.end());
    return out;
}

const ScoredUnit& test_unit(std::span<const ScoredUnit> test, std::size_t j) {
    if (j >= test.size()) throw std::out_of_range("selected test position out of range");
    return test[j];
}

} // namespace

std::string_view method_name(Method m) {
    switch (m) {
    case Method::OCP: return "ocp";
    case Method::ACP: return "acp";
    case Method::SCOP: return "scop";
    case Method::SCOP_PLUS: return "scop+";
    }
    return "?";
}

std::string_view score_kind_name(ScoreKind k) {
    return k == ScoreKind::AbsResidual ? "abs" : "cqr";
}

Method parse_method(std::string_view name) {
    if (name == "ocp") return Method::OCP;
    if (name == "acp") return Method::ACP;
    if (name == "scop") return Method::SCOP;
    if (name == "scop+" || name == "scop-plus") return Method::SCOP_PLUS;
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected ocp, acp, scop, scop+)");
}

ScoreKind parse_score_kind(std::string_view name) {
    if (name == "abs" || name == "abs-residual") return ScoreKind::AbsResidual;
    if (name == "cqr") return ScoreKind::Cqr;
    throw std::invalid_argument("unknown score kind '" + std::string(name) + "' (expected abs, cqr)");
}

std::vector<PredictionInterval> ocp_intervals(const SampleSet& cal_residuals, const SelectionOutcome& selected,
                                              std::span<const ScoredUnit> test, double alpha) {
    check_alpha(alpha);
    std::vector<PredictionInterval> out;
    if (selected.selected_test.empty()) return out;
    const double w = conformal_quantile(cal_residuals, alpha);
    out.reserve(selected.selected_test.size());
    for (std::size_t j : selected.selected_test) {
        out.push_back(symmetric(j, test_unit(test, j).mu_hat, w, Method::OCP));
    }
    return out;
}

std::vector<double> acp_levels(const SelectionOutcome& selected, std::span<const ScoredUnit> cal,
                               std::span<const ScoredUnit> test, double alpha, AcpMode mode) {
    check_alpha(alpha);
    const double m = static_cast<double>(test.size());
    std::vector<double> levels;
    levels.reserve(selected.selected_test.size());
    if (mode == AcpMode::SelectedSize) {
        const double size = static_cast<double>(selected.selected_test.size());
        levels.assign(selected.selected_test.size(), alpha * size / m);
        return levels;
    }
    const std::vector<MMin> mins = m_min_batch(selected.rule, cal, test, selected.selected_test);
    for (const MMin& mm : mins) levels.push_back(alpha * static_cast<double>(mm.value) / m);
    return levels;
}

std::vector<PredictionInterval> acp_intervals(const SampleSet& cal_residuals, const SelectionOutcome& selected,
                                              std::span<const ScoredUnit> cal, std::span<const ScoredUnit> test,
                                              double alpha, AcpMode mode) {
    std::vector<PredictionInterval> out;
    if (selected.selected_test.empty()) return out;
    const std::vector<double> levels = acp_levels(selected, cal, test, alpha, mode);
    const std::vector<double> asc = cal_residuals.sorted();
    out.reserve(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const std::size_t j = selected.selected_test[i];
        const double w = conformal_quantile_sorted(asc, levels[i]);
        out.push_back(symmetric(j, test_unit(test, j).mu_hat, w, Method::ACP));
    }
    return out;
}

std::vector<std::size_t> calibration_positions(Method method, const SelectionOutcome& selected, std::size_t n_cal) {
    switch (method) {
    case Method::OCP:
    case Method::ACP: {
        std::vector<std::size_t> all(n_cal);
        for (std::size_t i = 0; i < n_cal; ++i) all[i] = i;
        return all;
    }
    case Method::SCOP: return selected.selected_cal;
    case Method::SCOP_PLUS:
        if (!selected.selected_cal_plus) {
            throw std::invalid_argument("scop+ needs an inflated calibration set; rule " +
                                        to_string(selected.rule) + " produced none");
        }
        return *selected.selected_cal_plus;
    }
    return {};
}

std::vector<PredictionInterval> scop_intervals(const SelectionOutcome& selected, std::span<const ScoredUnit> cal,
                                               std::span<const ScoredUnit> test, double alpha, bool use_plus) {
    check_alpha(alpha);
    const Method method = use_plus ? Method::SCOP_PLUS : Method::SCOP;
    const std::vector<std::size_t> positions = calibration_positions(method, selected, cal.size());
    std::vector<PredictionInterval> out;
    if (selected.selected_test.empty()) return out;
    const double w = conformal_quantile_sorted(residuals_at(cal, positions), alpha);
    out.reserve(selected.selected_test.size());
    for (std::size_t j : selected.selected_test) {
        out.push_back(symmetric(j, test_unit(test, j).mu_hat, w, method));
    }
    return out;
}

std::vector<PredictionInterval> cqr_intervals(Method method, const SelectionOutcome& selected,
                                              std::span<const CqrUnit> cal, std::span<const CqrUnit> test,
                                              double alpha, std::span<const double> acp_alpha) {
    check_alpha(alpha);
    std::vector<PredictionInterval> out;
    const std::vector<std::size_t> positions = calibration_positions(method, selected, cal.size());
    if (selected.selected_test.empty()) return out;
    if (method == Method::ACP && acp_alpha.size() != selected.selected_test.size()) {
        throw std::invalid_argument("cqr_intervals: ACP needs one level per selected unit");
    }

    std::vector<double> scores;
    scores.reserve(positions.size());
    for (std::size_t i : positions) {
        if (i >= cal.size() || !cal[i].score) throw std::invalid_argument("calibration unit without CQR score");
        scores.push_back(*cal[i].score);
    }
    std::sort(scores.begin(), scores.end());

    const double shared_w = method == Method::ACP ? 0.0 : conformal_quantile_sorted(scores, alpha);
    out.reserve(selected.selected_test.size());
    for (std::size_t k = 0; k < selected.selected_test.size(); ++k) {
        const std::size_t j = selected.selected_test[k];
        if (j >= test.size()) throw std::out_of_range("selected test position out of range");
        const double w = method == Method::ACP ? conformal_quantile_sorted(scores, acp_alpha[k]) : shared_w;
        PredictionInterval pi;
        pi.unit = j;
        pi.half_width = w;
        pi.lo = test[j].q_lo - w;
        pi.hi = test[j].q_hi + w;
        pi.method = method;
        pi.score_kind = ScoreKind::Cqr;
        if (pi.lo > pi.hi) {
            const double mid = (test[j].q_lo + test[j].q_hi) / 2.0;
            pi.lo = pi.hi = mid;
            pi.empty = true;
        }
        out.push_back(pi);
    }
    return out;
}

CoverageRecord evaluate_coverage(std::span<const PredictionInterval> intervals, std::span<const double> responses) {
    CoverageRecord rec;
    rec.n_selected = intervals.size();
    if (intervals.empty()) return rec;

    std::size_t misses = 0;
    double total = 0.0;
    for (const auto& pi : intervals) {
        if (pi.unit >= responses.size()) throw std::out_of_range("evaluate_coverage: no response for unit");
        if (!pi.contains(responses[pi.unit])) ++misses;
        if (std::isinf(pi.lo) || std::isinf(pi.hi)) {
            rec.infinite = true;
        } else {
            total += pi.length();
        }
    }
    rec.fcp = static_cast<double>(misses) / static_cast<double>(intervals.size());
    rec.avg_length = rec.infinite ? kInf : total / static_cast<double>(intervals.size());
    return rec;
}

} // namespace scop
