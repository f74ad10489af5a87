#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace scop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Finite real sample. Construction rejects NaN and +-infinity so that
/// every comparison downstream is a total order.
class SampleSet {
public:
    SampleSet() = default;
    explicit SampleSet(std::vector<double> values);
    explicit SampleSet(std::span<const double> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    std::span<const double> values() const noexcept { return values_; }

    /// Ascending copy of the values.
    std::vector<double> sorted() const;

private:
    std::vector<double> values_;
};

/// ceil(x), robust to representation error in products such as 0.9 * 200.
std::size_t ceil_rank(double x);
/// floor(x), with the same tolerance as ceil_rank.
std::size_t floor_rank(double x);

/// Split-conformal quantile: the ceil((1 - alpha)(|s| + 1))-th smallest value
/// of s, or +inf when that rank exceeds |s| (including the empty sample).
double conformal_quantile(const SampleSet& s, double alpha);

/// Rank-k order statistic (1-based, duplicates counted). Throws
/// std::out_of_range unless 1 <= k <= |s|.
double kth_smallest(const SampleSet& s, std::size_t k);

/// r-th smallest value of s after removing one occurrence of j_value.
///
/// Evaluated through the drop-one case split on the full sample: the answer
/// is x_(r) when j_value > x_(r) and x_(r+1) otherwise. Throws
/// std::domain_error if j_value is not in s, std::out_of_range unless
/// 1 <= r <= |s| - 1.
double drop_one_rank(const SampleSet& s, double j_value, std::size_t r);

/// Same as conformal_quantile but for an already ascending range; no
/// validation beyond what the rank arithmetic needs.
double conformal_quantile_sorted(std::span<const double> ascending, double alpha);

} // namespace scop
