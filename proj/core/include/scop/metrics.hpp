#pragma once

#include "scop/intervals.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace scop {

struct ExperimentResult;
struct RepRecord;

struct MethodSummary {
    Method method = Method::SCOP;
    /// Mean FCP over successful repetitions.
    double fcr = 0.0;
    /// sample-sd(FCP) / sqrt(reps); absent for a single repetition.
    std::optional<double> fcr_se;
    /// Mean of the per-repetition average lengths, over repetitions whose
    /// length is finite. Absent when there is none.
    std::optional<double> mean_length;
    std::size_t infinite_rep_count = 0;
    double mean_selected = 0.0;
    std::size_t reps = 0;
    std::size_t length_reps = 0;

    friend bool operator==(const MethodSummary&, const MethodSummary&) = default;
};

/// One summary per method, in the order the records list them. Failed
/// repetitions are skipped. Throws std::invalid_argument when no successful
/// repetition exists.
std::vector<MethodSummary> summarize(const ExperimentResult& result);
std::vector<MethodSummary> summarize_records(std::span<const RepRecord> records, std::span<const Method> methods);

/// Mean selection FDP over successful repetitions that recorded one.
std::optional<double> mean_selection_fdp(std::span<const RepRecord> records);

struct Comparison {
    double fcr_gap = 0.0;
    std::optional<double> length_ratio;
    double threshold = 0.0;
    bool significant = false;
};

inline constexpr double kSignificanceMultiplier = 3.0;

/// fcr_gap = a.fcr - b.fcr; significant when |gap| > multiplier *
/// sqrt(se_a^2 + se_b^2) (strict). A missing se counts as zero.
Comparison compare(const MethodSummary& a, const MethodSummary& b, double multiplier = kSignificanceMultiplier);

} // namespace scop
