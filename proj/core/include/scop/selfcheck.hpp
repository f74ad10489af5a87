#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace scop {

struct CheckResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    /// Description of the first failing case, empty on success.
    std::string first_failure;

    bool passed() const noexcept { return failures == 0 && cases > 0; }
};

inline constexpr std::uint64_t kSelfcheckSeed = 0x5C0F5EEDULL;

/// Quantile tail bounds: for every size 1..200 and several random alpha,
/// #{x_i > x_(ceil(n(1 - alpha)))} <= alpha n, and >= alpha n - 1 for
/// distinct samples.
CheckResult check_quantile_bounds(std::uint64_t seed = kSelfcheckSeed);

/// Leave-one-out order statistics: drop_one_rank equals a remove-then-sort
/// oracle, and {x_j <= x_(r)} agrees with {x_j <= x_(r) without j}.
CheckResult check_drop_one(std::uint64_t seed = kSelfcheckSeed);

/// BH on conformal p-values selects {p_i <= p_(kappa)}, which must equal the
/// score form {T_i <= T_(kappa)}; 1000 instances with n = m = 50.
CheckResult check_dual_form(std::uint64_t seed = kSelfcheckSeed);

/// m_min against a brute-force scan of a fine grid of substituted scores, on
/// 200 instances spread over every rule except T-clu.
CheckResult check_m_min_grid(std::uint64_t seed = kSelfcheckSeed);

/// fisher_split against an exhaustive scan of every cut, on 200 instances.
CheckResult check_fisher_split(std::uint64_t seed = kSelfcheckSeed);

/// All of the above, in that order.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed = kSelfcheckSeed);

} // namespace scop
