#pragma once

#include "scop/experiment.hpp"
#include "scop/predictors.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace scop {

/// Malformed or unreadable input data. `row` and `column` are 1-based file
/// coordinates (the header is row 1); zero when not applicable.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t row = 0, std::size_t column = 0);
    std::size_t row;
    std::size_t column;
};

/// Numeric table under a mandatory header row. Cells are separated by commas,
/// carry no quoting, and must parse completely as finite reals.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Position of a header name, or npos.
    std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

/// Rows (y, x1, ..., xd) when the first column is named `y`, otherwise
/// feature-only rows (x1, ..., xd).
Dataset to_dataset(const CsvTable& table, const std::string& source = "<table>");
Dataset load_dataset(const std::filesystem::path& path);

/// Rows (y?, mu_hat, t_score), located by header name. Residual scores are
/// |y - mu_hat| when y is present.
std::vector<ScoredUnit> to_scored_units(const CsvTable& table, const std::string& source = "<table>");
std::vector<ScoredUnit> load_scored_units(const std::filesystem::path& path);

/// Where external data comes from. Exactly one layout must be filled:
///   labeled + test           pool re-split into train/calibration each rep
///   train + cal + test       one fixed split
///   cal + test, precomputed  scored units, no fitting
struct ExternalPaths {
    std::filesystem::path labeled;
    std::filesystem::path train;
    std::filesystem::path cal;
    std::filesystem::path test;
    bool precomputed = false;
};

/// Throws DataError for unreadable or malformed files and for feature
/// dimensions that disagree across files; std::invalid_argument for an
/// incomplete layout.
ExternalData load_external(const ExternalPaths& paths);

/// Writes `y,x1..xd` (or `x1..xd` without responses) with 17 significant
/// digits, so load_dataset reproduces the data bit for bit.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Writes `y,mu_hat,t_score` (y omitted when any unit lacks a response).
void write_scored_units(const std::filesystem::path& path, std::span<const ScoredUnit> units);

} // namespace scop
