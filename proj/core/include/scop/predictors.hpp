#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace scop {

/// Labeled (or feature-only) rows. Row i of `x` pairs with `y[i]` when
/// responses are present.
struct Dataset {
    Eigen::MatrixXd x;
    std::optional<Eigen::VectorXd> y;

    std::size_t size() const noexcept { return static_cast<std::size_t>(x.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(x.cols()); }
    bool labeled() const noexcept { return y.has_value(); }

    /// Throws std::invalid_argument on non-finite entries or a response
    /// vector whose length differs from the row count.
    void validate() const;

    /// Rows [first, first + count) as a new dataset.
    Dataset slice(std::size_t first, std::size_t count) const;
    /// Rows picked by index, in the given order.
    Dataset take(std::span<const std::size_t> rows) const;
};

struct LinearModel {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    /// Set when the OLS design was rank deficient and a ridge solve was used.
    bool regularized = false;
    /// Cleared when the quantile solver hit its iteration cap.
    bool converged = true;
    std::size_t iterations = 0;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(coefficients.size()); }
    double predict(const Eigen::Ref<const Eigen::VectorXd>& features) const;
    Eigen::VectorXd predict_rows(const Eigen::MatrixXd& features) const;
};

struct QuantilePair {
    LinearModel lo;
    LinearModel hi;
    double alpha = 0.1;
};

struct ScoredUnit {
    std::size_t index = 0;
    double mu_hat = 0.0;
    double t_score = 0.0;
    /// |y - mu_hat| when a response is known.
    std::optional<double> residual_score;
    std::optional<double> response;
};

/// Selection score g(x) = mu_hat(x).
struct PredictionScore {};
/// Selection score g(x) = mu_hat(x) - b0.
struct PredictionMinusB0 {
    double b0 = 0.0;
};
using ScoreFn = std::variant<PredictionScore, PredictionMinusB0>;

inline constexpr double kOlsRidge = 1e-8;
inline constexpr double kQuantileSmoothing = 1e-6;
inline constexpr std::size_t kQuantileMaxIter = 200;
inline constexpr double kQuantileTol = 1e-8;

/// Least squares with an intercept. A rank-deficient design falls back to a
/// ridge solve with penalty kOlsRidge and sets `regularized`.
LinearModel fit_ols(const Dataset& train);

/// Linear quantile regression at `level` by iteratively reweighted least
/// squares on the check loss with residuals floored at kQuantileSmoothing.
/// Starts from the OLS fit and returns the iterate with the smallest pinball
/// loss seen; `converged` is false when the coefficient change never fell
/// below kQuantileTol within kQuantileMaxIter iterations.
LinearModel fit_quantile(const Dataset& train, double level);

QuantilePair fit_quantile_pair(const Dataset& train, double alpha);

/// Mean pinball loss of `model` at `level` over a labeled dataset.
double pinball_loss(const LinearModel& model, const Dataset& data, double level);

/// Predictions, selection scores and (for labeled data) absolute residuals.
/// Unit indices are row positions offset by `first_index`.
std::vector<ScoredUnit> score_units(const LinearModel& model, const Dataset& data,
                                    const ScoreFn& score_fn = PredictionScore{},
                                    std::size_t first_index = 0);

/// max{q_lo(x) - y, y - q_hi(x)}; negative when y sits strictly inside the band.
double cqr_score(const QuantilePair& pair, const Eigen::Ref<const Eigen::VectorXd>& features,
                 double y);

/// Quantile band of one unit, plus its CQR score when the response is known.
struct CqrUnit {
    std::size_t index = 0;
    double q_lo = 0.0;
    double q_hi = 0.0;
    std::optional<double> score;
};

std::vector<CqrUnit> cqr_units(const QuantilePair& pair, const Dataset& data,
                               std::size_t first_index = 0);

} // namespace scop
