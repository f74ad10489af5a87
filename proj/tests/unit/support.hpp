#pragma once

#include "scop/predictors.hpp"
#include "scop/rng.hpp"

#include <gtest/gtest.h>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace scop::testing {

inline ScoredUnit unit(double t, std::optional<double> y = std::nullopt, double mu = 0.0) {
    ScoredUnit u;
    u.mu_hat = mu;
    u.t_score = t;
    if (y) {
        u.response = *y;
        u.residual_score = std::abs(*y - mu);
    }
    return u;
}

inline std::vector<ScoredUnit> units(const std::vector<double>& t) {
    std::vector<ScoredUnit> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        out.push_back(unit(t[i]));
        out.back().index = i;
    }
    return out;
}

/// Labeled units with t = mu_hat and residual |y - mu_hat|.
inline std::vector<ScoredUnit> labeled_units(const std::vector<double>& mu, const std::vector<double>& y) {
    std::vector<ScoredUnit> out;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out.push_back(unit(mu[i], y[i], mu[i]));
        out.back().index = i;
    }
    return out;
}

inline std::vector<double> uniform_draws(RandomStream& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Values on a coarse lattice, so ties are common.
inline std::vector<double> lattice_draws(RandomStream& rng, std::size_t n, int levels) {
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(rng.bits() % static_cast<std::uint64_t>(levels)) * 0.5;
    return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = "scop_" + tag;
        if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
        path_ = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace scop::testing
