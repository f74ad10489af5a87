#include "scop/experiment.hpp"

#include "scop/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#ifndef SCOP_VERSION_STRING
#define SCOP_VERSION_STRING "0.0.0"
#endif

namespace scop {

namespace {

// Stream index reserved for the shared beta under --fixed-beta.
constexpr std::uint64_t kFixedBetaStream = std::numeric_limits<std::uint64_t>::max();

std::vector<double> residuals_of(std::span<const ScoredUnit> units) {
    std::vector<double> out;
    out.reserve(units.size());
    for (const auto& u : units) {
        if (!u.residual_score) throw std::invalid_argument("calibration unit without response");
        out.push_back(*u.residual_score);
    }
    return out;
}

std::optional<double> rule_b0(const SelectionRule& rule) {
    if (const auto* c = std::get_if<rules::TCons>(&rule)) return c->b0;
    if (const auto* p = std::get_if<rules::TPos>(&rule)) return p->b0;
    return std::nullopt;
}

// Runs body(r) for r in [0, count) on up to `threads` workers. Each index is
// processed exactly once; the caller stores results by index.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (workers <= 1) {
        for (std::size_t r = 0; r < count; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t r = next++; r < count; r = next++) body(r);
        });
    }
}

RepRecord failed_record(std::size_t rep, std::uint64_t seed, const std::string& why) {
    RepRecord rec;
    rec.rep = rep;
    rec.seed = seed;
    rec.failed = true;
    rec.failure = why;
    return rec;
}

void check_abort(const ExperimentResult& result) {
    const double allowed = kMaxFailedFraction * static_cast<double>(result.reps.size());
    if (static_cast<double>(result.failed_reps) <= allowed) return;
    std::ostringstream msg;
    msg << result.failed_reps << " of " << result.reps.size() << " repetitions failed";
    std::size_t shown = 0;
    for (const auto& rec : result.reps) {
        if (!rec.failed) continue;
        msg << (shown == 0 ? ": " : "; ") << "rep " << rec.rep << ": " << rec.failure;
        if (++shown == 3) break;
    }
    throw ExperimentAborted(msg.str(), result);
}

std::vector<std::size_t> permutation(std::size_t n, RandomStream& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    return idx;
}

} // namespace

std::string_view version() { return SCOP_VERSION_STRING; }

void validate_config(const ExperimentConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (c.reps < 1) throw std::invalid_argument("reps must be at least 1");
    if (c.m < 1) throw std::invalid_argument("m must be at least 1");
    if (c.methods.empty()) throw std::invalid_argument("at least one method is required");
    validate_rule(c.rule);
    if (const auto* top = std::get_if<rules::TTop>(&c.rule); top && top->k > c.m) {
        throw std::invalid_argument("t-top K exceeds m");
    }
    if (!(c.beta_scale > 0.0) || !std::isfinite(c.beta_scale)) throw std::invalid_argument("beta_scale must be positive");
    if (c.scenario) {
        if (c.n_cal < 1) throw std::invalid_argument("n must be at least 1");
        if (c.n_train < kScenarioDim + 1) throw std::invalid_argument("n_train must be at least d + 1 = 11");
    }
}

ScoredSplit score_split(const ExperimentConfig& config, const Dataset& train, const Dataset& cal,
                        const Dataset& test) {
    ScoredSplit split;
    const LinearModel mu = fit_ols(train);
    split.ols_regularized = mu.regularized;
    split.cal = score_units(mu, cal, PredictionScore{}, 0);
    split.test = score_units(mu, test, PredictionScore{}, 0);
    if (config.score_kind == ScoreKind::Cqr) {
        const QuantilePair pair = fit_quantile_pair(train, config.alpha);
        split.quantile_converged = pair.lo.converged && pair.hi.converged;
        split.cal_cqr = cqr_units(pair, cal, 0);
        split.test_cqr = cqr_units(pair, test, 0);
    }
    return split;
}

SplitIntervals build_intervals(const ExperimentConfig& config, const ScoredSplit& split) {
    SplitIntervals out;
    out.selection = apply_rule(config.rule, split.cal, split.test);
    const SelectionOutcome& sel = out.selection;

    if (config.score_kind == ScoreKind::Cqr) {
        if (!split.cal_cqr || !split.test_cqr) throw std::invalid_argument("CQR scores were not computed");
        for (Method method : config.methods) {
            std::vector<double> levels;
            if (method == Method::ACP) levels = acp_levels(sel, split.cal, split.test, config.alpha, config.acp_mode);
            out.per_method.push_back(
                {method, cqr_intervals(method, sel, *split.cal_cqr, *split.test_cqr, config.alpha, levels)});
        }
        return out;
    }

    const SampleSet cal_residuals(residuals_of(split.cal));
    for (Method method : config.methods) {
        std::vector<PredictionInterval> pis;
        switch (method) {
        case Method::OCP: pis = ocp_intervals(cal_residuals, sel, split.test, config.alpha); break;
        case Method::ACP:
            pis = acp_intervals(cal_residuals, sel, split.cal, split.test, config.alpha, config.acp_mode);
            break;
        case Method::SCOP: pis = scop_intervals(sel, split.cal, split.test, config.alpha, false); break;
        case Method::SCOP_PLUS: pis = scop_intervals(sel, split.cal, split.test, config.alpha, true); break;
        }
        out.per_method.push_back({method, std::move(pis)});
    }
    return out;
}

RepRecord evaluate_split(const ExperimentConfig& config, const ScoredSplit& split) {
    std::vector<double> responses;
    responses.reserve(split.test.size());
    for (const auto& u : split.test) {
        if (!u.response) throw std::invalid_argument("coverage evaluation needs test responses");
        responses.push_back(*u.response);
    }

    const SplitIntervals built = build_intervals(config, split);
    const SelectionOutcome& sel = built.selection;

    RepRecord rec;
    rec.n_selected = sel.selected_test.size();
    rec.n_cal_selected = sel.selected_cal.size();
    rec.n_cal_plus = sel.selected_cal_plus ? sel.selected_cal_plus->size() : 0;
    rec.tau_hat = sel.tau_hat;
    rec.kappa_hat = sel.kappa_hat;
    rec.degenerate_split = sel.degenerate;
    rec.ols_regularized = split.ols_regularized;
    rec.quantile_converged = split.quantile_converged;
    if (const auto b0 = rule_b0(config.rule)) {
        std::size_t nulls = 0;
        for (std::size_t j : sel.selected_test) nulls += responses[j] >= *b0 ? 1 : 0;
        rec.selection_fdp = static_cast<double>(nulls) / static_cast<double>(std::max<std::size_t>(rec.n_selected, 1));
    }
    for (const auto& mi : built.per_method) {
        const CoverageRecord cov = evaluate_coverage(mi.intervals, responses);
        rec.methods.push_back(MethodRecord{mi.method, cov.fcp, cov.avg_length, cov.n_selected, cov.infinite});
    }
    return rec;
}

RepData draw_rep_data(const ExperimentConfig& config, std::size_t rep) {
    if (!config.scenario) throw std::invalid_argument("draw_rep_data: config has no scenario");
    const ScenarioKind kind = *config.scenario;
    RandomStream rng(derive_seed(config.master_seed, rep));
    Eigen::VectorXd beta;
    if (kind == ScenarioKind::A) {
        if (config.fixed_beta) {
            RandomStream beta_rng(derive_seed(config.master_seed, kFixedBetaStream));
            beta = draw_beta(beta_rng, config.beta_scale);
        } else {
            beta = draw_beta(rng, config.beta_scale);
        }
    }
    RepData data;
    data.train = generate_rows(kind, config.n_train, rng, beta);
    data.cal = generate_rows(kind, config.n_cal, rng, beta);
    data.test = generate_rows(kind, config.m, rng, beta);
    return data;
}

void aggregate(ExperimentResult& result) {
    result.failed_reps = static_cast<std::size_t>(
        std::count_if(result.reps.begin(), result.reps.end(), [](const RepRecord& r) { return r.failed; }));
    result.summaries.clear();
    if (result.failed_reps < result.reps.size()) {
        result.summaries = summarize_records(result.reps, result.config.methods);
    }
    result.selection_fdr = mean_selection_fdp(result.reps);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    if (!config.scenario) throw std::invalid_argument("run_experiment needs a scenario; use run_external");

    ExperimentResult result;
    result.config = config;
    result.reps.resize(config.reps);
    parallel_for(config.reps, config.threads, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(config.master_seed, r);
        try {
            const RepData data = draw_rep_data(config, r);
            RepRecord rec = evaluate_split(config, score_split(config, data.train, data.cal, data.test));
            rec.rep = r;
            rec.seed = seed;
            result.reps[r] = std::move(rec);
        } catch (const std::exception& e) {
            result.reps[r] = failed_record(r, seed, e.what());
        }
    });
    aggregate(result);
    check_abort(result);
    return result;
}

ScoredSplit external_split(const ExperimentConfig& config, const ExternalData& data, std::size_t rep) {
    if (const auto* pool = std::get_if<ExternalPool>(&data)) {
        const std::size_t total = pool->labeled.size();
        if (config.n_cal >= total) throw std::invalid_argument("n_cal must be smaller than the labeled pool");
        RandomStream rng(derive_seed(config.master_seed, rep));
        const std::vector<std::size_t> order = permutation(total, rng);
        const std::span<const std::size_t> all(order);
        const Dataset cal = pool->labeled.take(all.first(config.n_cal));
        const Dataset train = pool->labeled.take(all.subspan(config.n_cal));
        return score_split(config, train, cal, pool->test);
    }
    if (const auto* fixed = std::get_if<ExternalSplit>(&data)) {
        return score_split(config, fixed->train, fixed->cal, fixed->test);
    }
    const auto& scored = std::get<ExternalScored>(data);
    if (config.score_kind == ScoreKind::Cqr) {
        throw std::invalid_argument("precomputed units carry no quantile band; CQR is unavailable");
    }
    ScoredSplit split;
    split.cal = scored.cal;
    split.test = scored.test;
    return split;
}

ExperimentResult run_external(const ExperimentConfig& config_in, const ExternalData& data) {
    ExperimentConfig config = config_in;
    config.scenario.reset();
    if (!std::holds_alternative<ExternalPool>(data)) config.reps = 1;
    validate_config(config);

    ExperimentResult result;
    result.config = config;
    result.reps.resize(config.reps);
    parallel_for(config.reps, config.threads, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(config.master_seed, r);
        try {
            RepRecord rec = evaluate_split(config, external_split(config, data, r));
            rec.rep = r;
            rec.seed = seed;
            result.reps[r] = std::move(rec);
        } catch (const std::exception& e) {
            result.reps[r] = failed_record(r, seed, e.what());
        }
    });
    aggregate(result);
    check_abort(result);
    return result;
}

std::vector<ExperimentResult> sweep(const ExperimentConfig& base, const SweepGrid& grid) {
    std::vector<ExperimentConfig> points;
    if (const auto* qg = std::get_if<QGrid>(&grid)) {
        if (qg->q.empty()) throw std::invalid_argument("sweep: empty q grid");
        for (double q : qg->q) {
            ExperimentConfig c = base;
            if (auto* r = std::get_if<rules::TCal>(&c.rule)) {
                r->q = q;
            } else if (auto* t = std::get_if<rules::TTest>(&c.rule)) {
                t->q = q;
            } else if (auto* e = std::get_if<rules::TExch>(&c.rule)) {
                e->q = q;
            } else {
                throw std::invalid_argument("sweep: a q grid needs a t-cal, t-test or t-exch rule");
            }
            points.push_back(c);
        }
    } else {
        const auto& sg = std::get<SizeGrid>(grid);
        if (sg.n_m.empty()) throw std::invalid_argument("sweep: empty (n, m) grid");
        for (const auto& [n, m] : sg.n_m) {
            ExperimentConfig c = base;
            c.n_train = n;
            c.n_cal = n;
            c.m = m;
            points.push_back(c);
        }
    }

    std::vector<ExperimentResult> out;
    out.reserve(points.size());
    for (std::size_t g = 0; g < points.size(); ++g) {
        points[g].master_seed = derive_seed(base.master_seed, g);
        out.push_back(run_experiment(points[g]));
    }
    return out;
}

} // namespace scop
