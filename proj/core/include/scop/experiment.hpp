#pragma once

#include "scop/intervals.hpp"
#include "scop/metrics.hpp"
#include "scop/predictors.hpp"
#include "scop/scenarios.hpp"
#include "scop/selection.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace scop {

/// Library version echoed into result files.
std::string_view version();

struct ExperimentConfig {
    /// Absent for external data.
    std::optional<ScenarioKind> scenario = ScenarioKind::A;
    /// Scenario A: draw beta once from the master seed instead of per repetition.
    bool fixed_beta = false;
    /// Scenario A: beta ~ Unif(-beta_scale, beta_scale)^10.
    double beta_scale = 1.0;
    std::size_t n_train = 200;
    std::size_t n_cal = 200;
    std::size_t m = 200;
    double alpha = 0.1;
    SelectionRule rule = rules::TCons{-1.0};
    std::vector<Method> methods{Method::SCOP, Method::OCP, Method::ACP};
    ScoreKind score_kind = ScoreKind::AbsResidual;
    AcpMode acp_mode = AcpMode::Exact;
    std::size_t reps = 1000;
    std::uint64_t master_seed = 0;
    /// Worker threads; never affects results.
    unsigned threads = 1;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws std::invalid_argument naming the offending field.
void validate_config(const ExperimentConfig& config);

struct MethodRecord {
    Method method = Method::SCOP;
    double fcp = 0.0;
    std::optional<double> avg_length;
    std::size_t n_selected = 0;
    bool infinite = false;

    friend bool operator==(const MethodRecord&, const MethodRecord&) = default;
};

struct RepRecord {
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    std::size_t n_selected = 0;
    std::size_t n_cal_selected = 0;
    std::size_t n_cal_plus = 0;
    double tau_hat = 0.0;
    std::optional<std::size_t> kappa_hat;
    /// Share of selected units with Y >= b0 (T-cons and T-pos only).
    std::optional<double> selection_fdp;
    bool degenerate_split = false;
    bool ols_regularized = false;
    bool quantile_converged = true;
    std::vector<MethodRecord> methods;

    friend bool operator==(const RepRecord&, const RepRecord&) = default;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RepRecord> reps;
    std::vector<MethodSummary> summaries;
    std::size_t failed_reps = 0;
    std::optional<double> selection_fdr;
};

/// Raised when more than 1% of repetitions fail. Carries the partial result.
class ExperimentAborted : public std::runtime_error {
public:
    ExperimentAborted(std::string what, ExperimentResult partial)
        : std::runtime_error(std::move(what)), result(std::move(partial)) {}
    ExperimentResult result;
};

inline constexpr double kMaxFailedFraction = 0.01;

/// Scored calibration and test units of one repetition, plus the CQR bands
/// when the score kind asks for them.
struct ScoredSplit {
    std::vector<ScoredUnit> cal;
    std::vector<ScoredUnit> test;
    std::optional<std::vector<CqrUnit>> cal_cqr;
    std::optional<std::vector<CqrUnit>> test_cqr;
    bool ols_regularized = false;
    bool quantile_converged = true;
};

/// Fits mu_hat by OLS on `train` (and the alpha/2, 1 - alpha/2 quantile pair
/// for CQR) and scores calibration and test rows. Selection scores are mu_hat.
ScoredSplit score_split(const ExperimentConfig& config, const Dataset& train, const Dataset& cal,
                        const Dataset& test);

struct MethodIntervals {
    Method method = Method::SCOP;
    std::vector<PredictionInterval> intervals;
};

struct SplitIntervals {
    SelectionOutcome selection;
    std::vector<MethodIntervals> per_method;
};

/// Applies the rule and builds intervals for every configured method.
SplitIntervals build_intervals(const ExperimentConfig& config, const ScoredSplit& split);

/// Evaluates one scored split against the test responses.
RepRecord evaluate_split(const ExperimentConfig& config, const ScoredSplit& split);

/// Draws the data of repetition `rep` (train, calibration, test in that order
/// from one stream) for a scenario config.
struct RepData {
    Dataset train;
    Dataset cal;
    Dataset test;
};
RepData draw_rep_data(const ExperimentConfig& config, std::size_t rep);

/// Seeded Monte Carlo over config.reps repetitions of a scenario. Output is
/// identical for any thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Labeled pool split at random into calibration (config.n_cal rows) and
/// training (the rest) in every repetition; the test rows stay fixed.
struct ExternalPool {
    Dataset labeled;
    Dataset test;
};
/// One fixed split, evaluated once.
struct ExternalSplit {
    Dataset train;
    Dataset cal;
    Dataset test;
};
/// Precomputed mu_hat and t_score, no fitting; evaluated once.
struct ExternalScored {
    std::vector<ScoredUnit> cal;
    std::vector<ScoredUnit> test;
};
using ExternalData = std::variant<ExternalPool, ExternalSplit, ExternalScored>;

/// Same contract as run_experiment for external data. Test responses are
/// required for coverage evaluation.
ExperimentResult run_external(const ExperimentConfig& config, const ExternalData& data);

/// Scored split of repetition `rep` for external data; also used to emit
/// intervals when test responses are unknown.
ScoredSplit external_split(const ExperimentConfig& config, const ExternalData& data, std::size_t rep);

struct QGrid {
    std::vector<double> q;
};
struct SizeGrid {
    std::vector<std::pair<std::size_t, std::size_t>> n_m;
};
using SweepGrid = std::variant<QGrid, SizeGrid>;

/// One run_experiment per grid point; point g runs with master seed
/// derive_seed(master_seed, g). A q grid requires a quantile rule (T-cal,
/// T-test, T-exch); a size grid sets n_train = n_cal = n and m.
std::vector<ExperimentResult> sweep(const ExperimentConfig& base, const SweepGrid& grid);

/// Recomputes result.summaries, result.failed_reps and result.selection_fdr
/// from the per-repetition records.
void aggregate(ExperimentResult& result);

} // namespace scop
