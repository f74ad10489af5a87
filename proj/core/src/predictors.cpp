#include "scop/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace scop {

namespace {

Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd design(x.rows(), x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    return design;
}

LinearModel from_params(const Eigen::VectorXd& params) {
    LinearModel model;
    model.intercept = params(0);
    model.coefficients = params.tail(params.size() - 1);
    return model;
}

Eigen::VectorXd to_params(const LinearModel& model) {
    Eigen::VectorXd params(model.coefficients.size() + 1);
    params(0) = model.intercept;
    params.tail(model.coefficients.size()) = model.coefficients;
    return params;
}

void require_labeled(const Dataset& data, const char* what) {
    if (!data.labeled()) {
        throw std::invalid_argument(std::string(what) + ": dataset has no responses");
    }
}

void require_dim(const LinearModel& model, std::size_t dim) {
    if (model.dim() != dim) {
        throw std::domain_error("dimension mismatch: model has " + std::to_string(model.dim()) +
                                " coefficients, data has " + std::to_string(dim) + " features");
    }
}

double check_loss(double residual, double level) {
    return residual >= 0.0 ? level * residual : (level - 1.0) * residual;
}

} // namespace

void Dataset::validate() const {
    if (!x.allFinite()) throw std::invalid_argument("Dataset: non-finite feature value");
    if (y) {
        if (y->size() != x.rows()) {
            throw std::invalid_argument("Dataset: response count does not match row count");
        }
        if (!y->allFinite()) throw std::invalid_argument("Dataset: non-finite response");
    }
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw std::out_of_range("Dataset::slice past end");
    const auto f = static_cast<Eigen::Index>(first);
    const auto c = static_cast<Eigen::Index>(count);
    Dataset out;
    out.x = x.middleRows(f, c);
    if (y) out.y = y->segment(f, c);
    return out;
}

Dataset Dataset::take(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    if (y) out.y = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw std::out_of_range("Dataset::take index past end");
        const auto src = static_cast<Eigen::Index>(rows[i]);
        const auto dst = static_cast<Eigen::Index>(i);
        out.x.row(dst) = x.row(src);
        if (y) (*out.y)(dst) = (*y)(src);
    }
    return out;
}

double LinearModel::predict(const Eigen::Ref<const Eigen::VectorXd>& features) const {
    require_dim(*this, static_cast<std::size_t>(features.size()));
    return intercept + coefficients.dot(features);
}

Eigen::VectorXd LinearModel::predict_rows(const Eigen::MatrixXd& features) const {
    require_dim(*this, static_cast<std::size_t>(features.cols()));
    return (features * coefficients).array() + intercept;
}

LinearModel fit_ols(const Dataset& train) {
    require_labeled(train, "fit_ols");
    const Eigen::MatrixXd design = design_matrix(train.x);
    const Eigen::VectorXd& y = *train.y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() == design.cols()) {
        return from_params(qr.solve(y));
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += kOlsRidge;
    LinearModel model = from_params(gram.ldlt().solve(design.transpose() * y));
    model.regularized = true;
    return model;
}

double pinball_loss(const LinearModel& model, const Dataset& data, double level) {
    require_labeled(data, "pinball_loss");
    const Eigen::VectorXd resid = *data.y - model.predict_rows(data.x);
    double total = 0.0;
    for (Eigen::Index i = 0; i < resid.size(); ++i) total += check_loss(resid(i), level);
    return resid.size() > 0 ? total / static_cast<double>(resid.size()) : 0.0;
}

LinearModel fit_quantile(const Dataset& train, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("fit_quantile: level must lie in (0, 1)");
    }
    require_labeled(train, "fit_quantile");
    const Eigen::MatrixXd design = design_matrix(train.x);
    const Eigen::VectorXd& y = *train.y;

    const LinearModel start = fit_ols(train);
    const bool ridge = start.regularized;
    Eigen::VectorXd params = to_params(start);

    Eigen::VectorXd best = params;
    double best_loss = pinball_loss(start, train, level);
    bool converged = false;
    std::size_t iter = 0;

    Eigen::VectorXd weights(design.rows());
    while (iter < kQuantileMaxIter) {
        ++iter;
        const Eigen::VectorXd resid = y - design * params;
        for (Eigen::Index i = 0; i < resid.size(); ++i) {
            const double side = resid(i) >= 0.0 ? level : 1.0 - level;
            weights(i) = side / std::max(std::abs(resid(i)), kQuantileSmoothing);
        }
        Eigen::MatrixXd gram = design.transpose() * weights.asDiagonal() * design;
        if (ridge) gram.diagonal().array() += kOlsRidge;
        const Eigen::VectorXd rhs = design.transpose() * weights.cwiseProduct(y);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        Eigen::VectorXd next = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !next.allFinite()) {
            next = gram.colPivHouseholderQr().solve(rhs);
            if (!next.allFinite()) break;
        }

        const double change = (next - params).cwiseAbs().maxCoeff();
        params = next;

        const Eigen::VectorXd fitted_resid = y - design * params;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < fitted_resid.size(); ++i) loss += check_loss(fitted_resid(i), level);
        loss /= static_cast<double>(std::max<Eigen::Index>(fitted_resid.size(), 1));
        if (loss < best_loss) {
            best_loss = loss;
            best = params;
        }
        if (change < kQuantileTol) {
            converged = true;
            break;
        }
    }

    LinearModel model = from_params(best);
    model.regularized = ridge;
    model.converged = converged;
    model.iterations = iter;
    return model;
}

QuantilePair fit_quantile_pair(const Dataset& train, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("fit_quantile_pair: alpha must lie in (0, 1)");
    }
    return QuantilePair{fit_quantile(train, alpha / 2.0), fit_quantile(train, 1.0 - alpha / 2.0), alpha};
}

std::vector<ScoredUnit> score_units(const LinearModel& model, const Dataset& data,
                                    const ScoreFn& score_fn, std::size_t first_index) {
    require_dim(model, data.dim());
    const double shift = std::visit(
        [](const auto& fn) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(fn)>, PredictionMinusB0>) {
                return fn.b0;
            } else {
                return 0.0;
            }
        },
        score_fn);

    const Eigen::VectorXd mu = model.predict_rows(data.x);
    std::vector<ScoredUnit> out(data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        ScoredUnit& u = out[i];
        u.index = first_index + i;
        u.mu_hat = mu(row);
        u.t_score = mu(row) - shift;
        if (data.y) {
            u.response = (*data.y)(row);
            u.residual_score = std::abs(*u.response - u.mu_hat);
        }
    }
    return out;
}

double cqr_score(const QuantilePair& pair, const Eigen::Ref<const Eigen::VectorXd>& features,
                 double y) {
    const double lo = pair.lo.predict(features);
    const double hi = pair.hi.predict(features);
    return std::max(lo - y, y - hi);
}

std::vector<CqrUnit> cqr_units(const QuantilePair& pair, const Dataset& data, std::size_t first_index) {
    require_dim(pair.lo, data.dim());
    require_dim(pair.hi, data.dim());
    const Eigen::VectorXd lo = pair.lo.predict_rows(data.x);
    const Eigen::VectorXd hi = pair.hi.predict_rows(data.x);
    std::vector<CqrUnit> out(data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        out[i].index = first_index + i;
        out[i].q_lo = lo(row);
        out[i].q_hi = hi(row);
        if (data.y) {
            const double y = (*data.y)(row);
            out[i].score = std::max(lo(row) - y, y - hi(row));
        }
    }
    return out;
}

} // namespace scop
