#include "scop/scenarios.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scop {

std::string_view scenario_name(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::A: return "A";
    case ScenarioKind::B: return "B";
    case ScenarioKind::C: return "C";
    }
    return "?";
}

ScenarioKind parse_scenario(std::string_view name) {
    if (name == "A" || name == "a") return ScenarioKind::A;
    if (name == "B" || name == "b") return ScenarioKind::B;
    if (name == "C" || name == "c") return ScenarioKind::C;
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (expected A, B or C)");
}

Eigen::VectorXd draw_beta(RandomStream& rng, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("beta scale must be positive");
    Eigen::VectorXd beta(kScenarioDim);
    for (Eigen::Index k = 0; k < beta.size(); ++k) beta(k) = rng.uniform(-scale, scale);
    return beta;
}

double scenario_mean(ScenarioKind kind, const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& beta) {
    switch (kind) {
    case ScenarioKind::A: return x.dot(beta);
    case ScenarioKind::B: return x(0) * x(1) + x(2) - 2.0 * std::exp(x(3) + 1.0);
    case ScenarioKind::C:
        if (x(1) > -0.4) return 4.0 * (x(0) + 1.0) * std::abs(x(2));
        return 4.0 * (x(0) - 1.0);
    }
    return 0.0;
}

double scenario_noise_sd(ScenarioKind kind, double mu) {
    return kind == ScenarioKind::A ? 1.0 + std::abs(mu) : 1.0;
}

Dataset generate_rows(ScenarioKind kind, std::size_t n, RandomStream& rng, const Eigen::VectorXd& beta) {
    if (kind == ScenarioKind::A && beta.size() != static_cast<Eigen::Index>(kScenarioDim)) {
        throw std::invalid_argument("scenario A needs a 10-dimensional beta");
    }
    const auto rows = static_cast<Eigen::Index>(n);
    Dataset data;
    data.x.resize(rows, static_cast<Eigen::Index>(kScenarioDim));
    data.y = Eigen::VectorXd(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < data.x.cols(); ++k) data.x(i, k) = rng.uniform(-1.0, 1.0);
        const double mu = scenario_mean(kind, data.x.row(i).transpose(), beta);
        (*data.y)(i) = mu + scenario_noise_sd(kind, mu) * rng.normal();
    }
    return data;
}

Dataset generate(ScenarioKind kind, std::size_t n, RandomStream& rng) {
    const Eigen::VectorXd beta = kind == ScenarioKind::A ? draw_beta(rng) : Eigen::VectorXd{};
    return generate_rows(kind, n, rng, beta);
}

} // namespace scop
