#include "scop/order_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scop {

namespace {

// Rank arithmetic on decimal levels (0.9 * 200, 30 * 200 / 100) lands a few
// ulps off the integer it should be; absorb that before rounding.
constexpr double kRankSlack = 1e-9;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

} // namespace

SampleSet::SampleSet(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("SampleSet: non-finite value at index " + std::to_string(i));
        }
    }
}

SampleSet::SampleSet(std::span<const double> values)
    : SampleSet(std::vector<double>(values.begin(), values.end())) {}

std::vector<double> SampleSet::sorted() const {
    std::vector<double> out = values_;
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t ceil_rank(double x) {
    if (x <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(x - kRankSlack * std::max(1.0, x)));
}

std::size_t floor_rank(double x) {
    if (x <= 0.0) return 0;
    return static_cast<std::size_t>(std::floor(x + kRankSlack * std::max(1.0, x)));
}

double conformal_quantile_sorted(std::span<const double> ascending, double alpha) {
    check_alpha(alpha);
    const auto n = ascending.size();
    const std::size_t k = ceil_rank((1.0 - alpha) * static_cast<double>(n + 1));
    if (k > n) return kInf;
    // k >= 1 because (1 - alpha)(n + 1) > 0
    return ascending[k - 1];
}

double conformal_quantile(const SampleSet& s, double alpha) {
    check_alpha(alpha);
    const auto n = s.size();
    const std::size_t k = ceil_rank((1.0 - alpha) * static_cast<double>(n + 1));
    if (k > n) return kInf;
    return kth_smallest(s, k);
}

double kth_smallest(const SampleSet& s, std::size_t k) {
    if (k < 1 || k > s.size()) {
        throw std::out_of_range("kth_smallest: rank " + std::to_string(k) + " outside [1, " +
                                std::to_string(s.size()) + "]");
    }
    std::vector<double> work(s.values().begin(), s.values().end());
    auto nth = work.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(work.begin(), nth, work.end());
    return *nth;
}

double drop_one_rank(const SampleSet& s, double j_value, std::size_t r) {
    const auto vals = s.values();
    if (std::find(vals.begin(), vals.end(), j_value) == vals.end()) {
        throw std::domain_error("drop_one_rank: value not present in sample");
    }
    if (r < 1 || r + 1 > s.size()) {
        throw std::out_of_range("drop_one_rank: rank " + std::to_string(r) + " outside [1, " +
                                std::to_string(s.size() - 1) + "]");
    }
    const std::vector<double> asc = s.sorted();
    const double x_r = asc[r - 1];
    return j_value > x_r ? x_r : asc[r];
}

} // namespace scop
