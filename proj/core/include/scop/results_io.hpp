#pragma once

#include "scop/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace scop {

enum class Format { Csv, Json };

/// "csv" or "json".
Format parse_format(std::string_view name);

/// Per-(rep, method) rows `rep,method,fcp,avg_length,n_selected,infinite_flag`
/// followed by a blank line and the summary block
/// `method,fcr,fcr_se,mean_length,infinite_reps,mean_selected,reps`.
/// Reals carry 17 significant digits; absent values are empty cells and
/// unbounded lengths are written `inf`. Failed repetitions have no rows.
void write_results_csv(std::ostream& out, const ExperimentResult& result);

/// The full result as JSON. Key order is fixed: version, config, failed_reps,
/// selection_fdr, summaries, reps. Absent values are null and infinities are
/// the strings "inf" / "-inf". The thread count is not echoed.
std::string results_json(const ExperimentResult& result);

/// Inverse of results_json. Throws DataError on malformed input.
ExperimentResult parse_results_json(std::string_view text);

/// Sweep output: CSV rows gain a leading `point` column; JSON is
/// {"version", "points": [result, ...]}.
void write_sweep_csv(std::ostream& out, std::span<const ExperimentResult> results);
std::string sweep_json(std::span<const ExperimentResult> results);

/// Writes to `path`, or to stdout when path is "-". Throws std::runtime_error
/// naming the path on IO failure.
void write_results(const std::filesystem::path& path, const ExperimentResult& result, Format format);
void write_sweep(const std::filesystem::path& path, std::span<const ExperimentResult> results, Format format);

/// Fixed-width summary table for terminals; percentages with two decimals.
std::string format_summary_table(const ExperimentResult& result);

} // namespace scop
