#pragma once

#include "scop/predictors.hpp"
#include "scop/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace scop {

// Synthetic designs: X ~ Unif([-1, 1]^10), Y = mu(X) + eps.
//   A: mu = X'beta, beta ~ Unif([-1, 1]^10); eps | X ~ N(0, (1 + |mu|)^2)
//   B: mu = X1 X2 + X3 - 2 exp(X4 + 1);        eps ~ N(0, 1)
//   C: mu = 4 (X1 + 1) |X3| 1{X2 > -0.4} + 4 (X1 - 1) 1{X2 <= -0.4}; eps ~ N(0, 1)
enum class ScenarioKind { A, B, C };

inline constexpr std::size_t kScenarioDim = 10;

std::string_view scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view name);

/// beta for scenario A: ten Unif(-scale, scale) draws.
Eigen::VectorXd draw_beta(RandomStream& rng, double scale = 1.0);

/// Regression function of the scenario; `beta` is used by A only.
double scenario_mean(ScenarioKind kind, const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& beta);

/// Noise standard deviation at a point with mean mu.
double scenario_noise_sd(ScenarioKind kind, double mu);

/// n i.i.d. rows with a given beta. Each row consumes ten uniforms for X
/// followed by one normal for the noise.
Dataset generate_rows(ScenarioKind kind, std::size_t n, RandomStream& rng, const Eigen::VectorXd& beta);

/// n i.i.d. rows; scenario A first draws a fresh beta from the same stream.
Dataset generate(ScenarioKind kind, std::size_t n, RandomStream& rng);

} // namespace scop
