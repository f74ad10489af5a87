#include "scop/metrics.hpp"

#include "scop/experiment.hpp"

#include <cmath>
#include <stdexcept>

namespace scop {

std::vector<MethodSummary> summarize(const ExperimentResult& result) {
    return summarize_records(result.reps, result.config.methods);
}

std::vector<MethodSummary> summarize_records(std::span<const RepRecord> records, std::span<const Method> methods) {
    std::vector<MethodSummary> out;
    out.reserve(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
        MethodSummary s;
        s.method = methods[k];
        double fcp_sum = 0.0;
        double length_sum = 0.0;
        double selected_sum = 0.0;
        std::vector<double> fcps;
        for (const RepRecord& rec : records) {
            if (rec.failed) continue;
            if (k >= rec.methods.size() || rec.methods[k].method != methods[k]) {
                throw std::invalid_argument("summarize: record methods do not match the configuration");
            }
            const MethodRecord& mr = rec.methods[k];
            fcps.push_back(mr.fcp);
            fcp_sum += mr.fcp;
            selected_sum += static_cast<double>(mr.n_selected);
            if (mr.infinite) {
                ++s.infinite_rep_count;
            } else if (mr.avg_length) {
                length_sum += *mr.avg_length;
                ++s.length_reps;
            }
        }
        s.reps = fcps.size();
        if (s.reps == 0) throw std::invalid_argument("summarize: no successful repetitions");
        const double reps = static_cast<double>(s.reps);
        s.fcr = fcp_sum / reps;
        s.mean_selected = selected_sum / reps;
        if (s.length_reps > 0) s.mean_length = length_sum / static_cast<double>(s.length_reps);
        if (s.reps > 1) {
            double ss = 0.0;
            for (double f : fcps) ss += (f - s.fcr) * (f - s.fcr);
            s.fcr_se = std::sqrt(ss / (reps - 1.0)) / std::sqrt(reps);
        }
        out.push_back(s);
    }
    return out;
}

std::optional<double> mean_selection_fdp(std::span<const RepRecord> records) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const RepRecord& rec : records) {
        if (rec.failed || !rec.selection_fdp) continue;
        sum += *rec.selection_fdp;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

Comparison compare(const MethodSummary& a, const MethodSummary& b, double multiplier) {
    Comparison c;
    c.fcr_gap = a.fcr - b.fcr;
    if (a.mean_length && b.mean_length && *b.mean_length != 0.0) c.length_ratio = *a.mean_length / *b.mean_length;
    const double se_a = a.fcr_se.value_or(0.0);
    const double se_b = b.fcr_se.value_or(0.0);
    c.threshold = multiplier * std::sqrt(se_a * se_a + se_b * se_b);
    c.significant = std::abs(c.fcr_gap) > c.threshold;
    return c;
}

} // namespace scop
