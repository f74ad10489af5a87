#include "scop/order_stats.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace scop;
using scop::testing::lattice_draws;
using scop::testing::uniform_draws;

namespace {

// Direct transcription of the definition: sort, then index.
double quantile_oracle(std::vector<double> v, double alpha) {
    std::sort(v.begin(), v.end());
    const double k_real = std::ceil((1.0 - alpha) * static_cast<double>(v.size() + 1) - 1e-9);
    const auto k = static_cast<std::size_t>(k_real);
    if (k == 0) return v.front();
    if (k > v.size()) return kInf;
    return v[k - 1];
}

} // namespace

TEST(ConformalQuantile, SmallExamples) {
    EXPECT_EQ(conformal_quantile(SampleSet(std::vector<double>{1, 2, 3}), 0.5), 2.0);
    EXPECT_EQ(conformal_quantile(SampleSet(std::vector<double>{5}), 0.1), kInf);
    EXPECT_EQ(conformal_quantile(SampleSet{}, 0.3), kInf);
}

TEST(ConformalQuantile, NineDistinctDrawsGiveMaximum) {
    RandomStream rng(11);
    const auto v = uniform_draws(rng, 9);
    EXPECT_EQ(conformal_quantile(SampleSet(v), 0.1), *std::max_element(v.begin(), v.end()));
}

TEST(ConformalQuantile, MatchesSortOracle) {
    RandomStream rng(12);
    for (std::size_t n = 1; n <= 120; ++n) {
        for (double alpha : {0.01, 0.05, 0.1, 0.25, 0.5, 0.9}) {
            const auto v = n % 2 ? uniform_draws(rng, n) : lattice_draws(rng, n, 5);
            EXPECT_EQ(conformal_quantile(SampleSet(v), alpha), quantile_oracle(v, alpha)) << "n=" << n;
        }
    }
}

TEST(ConformalQuantile, RankArithmeticIsExactOnDecimalProducts) {
    // 0.9 * 200 is 180.00000000000003 in binary floating point.
    EXPECT_EQ(ceil_rank(0.9 * 200.0), 180u);
    EXPECT_EQ(floor_rank(0.3 * 200.0), 60u);
    EXPECT_EQ(ceil_rank(180.5), 181u);
    EXPECT_EQ(floor_rank(59.999), 59u);

    std::vector<double> v(199);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
    // alpha_j = 0.01 on n = 199 uses rank ceil(0.99 * 200) = 198.
    EXPECT_EQ(conformal_quantile(SampleSet(v), 0.1 * 20.0 / 200.0), 198.0);
}

TEST(ConformalQuantile, RejectsBadAlphaAndNonFinite) {
    EXPECT_THROW(conformal_quantile(SampleSet(std::vector<double>{1}), 0.0), std::invalid_argument);
    EXPECT_THROW(conformal_quantile(SampleSet(std::vector<double>{1}), 1.0), std::invalid_argument);
    EXPECT_THROW(SampleSet(std::vector<double>{1, NAN}), std::invalid_argument);
    EXPECT_THROW(SampleSet(std::vector<double>{kInf}), std::invalid_argument);
}

TEST(ConformalQuantile, TailCountBounds) {
    RandomStream rng(13);
    for (std::size_t n = 1; n <= 200; ++n) {
        const double alpha = rng.uniform(0.01, 0.99);
        const auto v = uniform_draws(rng, n);
        const SampleSet s(v);
        const std::size_t r = ceil_rank(static_cast<double>(n) * (1.0 - alpha));
        if (r < 1 || r > n) continue;
        const double xr = kth_smallest(s, r);
        const auto above = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x > xr; }));
        EXPECT_LE(above, alpha * static_cast<double>(n) + 1e-9);
        EXPECT_GE(above, alpha * static_cast<double>(n) - 1.0 - 1e-9);
    }
}

TEST(KthSmallest, Examples) {
    EXPECT_EQ(kth_smallest(SampleSet(std::vector<double>{3, 1, 2}), 2), 2.0);
    EXPECT_EQ(kth_smallest(SampleSet(std::vector<double>{1, 1, 2}), 2), 1.0);
    EXPECT_THROW(kth_smallest(SampleSet(std::vector<double>{1, 2}), 0), std::out_of_range);
    EXPECT_THROW(kth_smallest(SampleSet(std::vector<double>{1, 2}), 3), std::out_of_range);
}

TEST(KthSmallest, MatchesFullSort) {
    RandomStream rng(14);
    const auto v = uniform_draws(rng, 50, -3.0, 3.0);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const SampleSet s(v);
    for (std::size_t k = 1; k <= v.size(); ++k) EXPECT_EQ(kth_smallest(s, k), sorted[k - 1]);
}

TEST(DropOneRank, Examples) {
    const SampleSet s(std::vector<double>{1, 2, 3});
    EXPECT_EQ(drop_one_rank(s, 3.0, 2), 2.0);
    EXPECT_EQ(drop_one_rank(s, 1.0, 2), 3.0);
    EXPECT_THROW(drop_one_rank(s, 2.5, 1), std::domain_error);
    EXPECT_THROW(drop_one_rank(s, 2.0, 3), std::out_of_range);
}

TEST(DropOneRank, MatchesRemoveThenSort) {
    RandomStream rng(15);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.bits() % 40;
        const auto v = trial % 2 ? uniform_draws(rng, n) : lattice_draws(rng, n, 4);
        const SampleSet s(v);
        for (std::size_t j = 0; j < n; ++j) {
            auto rest = v;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
            std::sort(rest.begin(), rest.end());
            for (std::size_t r = 1; r < n; ++r) {
                const double got = drop_one_rank(s, v[j], r);
                ASSERT_EQ(got, rest[r - 1]);
                // {x_j <= x_(r)} holds exactly when x_j <= (r-th smallest without j).
                EXPECT_EQ(v[j] <= kth_smallest(s, r), v[j] <= got);
            }
        }
    }
}
