#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "dcortest/dcor.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/pdcor.hpp"
#include "dcortest/result.hpp"
#include "dcortest/rng.hpp"

namespace dcortest {

/// Permuted statistics within this absolute distance of the observed one count
/// as ties (and hence as ">="). Relabelings that leave the statistic
/// mathematically unchanged can still differ in the last few bits.
inline constexpr double kPermutationTieTolerance = 1e-12;

/// Upper tail P(chi^2_1 >= s); 1 for s <= 0.
inline double chi2_1_survival(double s) {
    if (std::isnan(s)) throw ParameterError("chi2_1_survival: NaN statistic");
    if (s <= 0.0) return 1.0;
    if (std::isinf(s)) return std::numeric_limits<double>::min();
    const boost::math::chi_squared_distribution<double> chi2(1.0);
    const double p = boost::math::cdf(boost::math::complement(chi2, s));
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

/// S = n * statistic + 1 referred to the chi^2_1 upper tail.
inline TestResult asymptotic_result(double statistic, std::size_t n) {
    TestResult res;
    res.method = TestMethod::asymptotic;
    res.statistic = statistic;
    res.p_value = chi2_1_survival(static_cast<double>(n) * statistic + 1.0);
    return res;
}

/// (1 + #{s_r >= s0}) / (R + 1).
inline double permutation_p_value(double observed, std::span<const double> permuted) {
    const auto hits = std::count_if(permuted.begin(), permuted.end(), [&](double s) {
        return s >= observed - kPermutationTieTolerance;
    });
    return (1.0 + static_cast<double>(hits)) / (static_cast<double>(permuted.size()) + 1.0);
}

namespace detail {

inline void require_permutations(std::size_t r) {
    if (r < 1) throw ParameterError("permutation test: at least one permutation is required");
}

inline double unbiased_dcor(const DistanceAggregates& xy, double vx, double vy) {
    if (!(vx > 0.0) || !(vy > 0.0)) return 0.0;
    return std::clamp(unbiased_from(xy) / std::sqrt(vx * vy), -1.0, 1.0);
}

}  // namespace detail

/// Permutation test of independence based on the bias-corrected distance
/// correlation. Relabels y; x's sort order and both samples' row sums are
/// computed once, so each permutation costs one O(n log n) merge pass.
inline TestResult dcor_test_permutation(std::span<const double> x, std::span<const double> y,
                                        std::size_t permutations, RngStream rng) {
    detail::require_same_length(x.size(), y.size(), "dcor_test_permutation");
    detail::require_min_size(x.size(), 4, "dcor_test_permutation");
    detail::require_finite(x, "dcor_test_permutation");
    detail::require_finite(y, "dcor_test_permutation");
    detail::require_permutations(permutations);

    const UnivariateDistance dx(x), dy(y);
    const double vx = detail::unbiased_from(dx.self_aggregates());
    const double vy = detail::unbiased_from(dy.self_aggregates());
    CrossKernel kernel;

    TestResult res;
    res.method = TestMethod::permutation;
    res.n_permutations = permutations;
    res.seed = rng.seed();
    res.statistic = detail::unbiased_dcor(kernel.cross(dx, dy), vx, vy);

    std::vector<double> stats(permutations, 0.0);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const bool degenerate = !(vx > 0.0) || !(vy > 0.0);
    for (std::size_t r = 0; r < permutations; ++r) {
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        if (!degenerate) stats[r] = detail::unbiased_dcor(kernel.cross(dx, dy, perm), vx, vy);
    }
    res.p_value = permutation_p_value(res.statistic, stats);
    return res;
}

/// Permutation test of conditional independence based on the partial distance
/// correlation. Relabels x while y and z stay fixed, so r_yz is computed once.
inline TestResult pdcor_test_permutation(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> z, std::size_t permutations,
                                         RngStream rng) {
    detail::require_same_length(x.size(), y.size(), "pdcor_test_permutation");
    detail::require_same_length(x.size(), z.size(), "pdcor_test_permutation");
    detail::require_min_size(x.size(), 4, "pdcor_test_permutation");
    detail::require_finite(x, "pdcor_test_permutation");
    detail::require_finite(y, "pdcor_test_permutation");
    detail::require_finite(z, "pdcor_test_permutation");
    detail::require_permutations(permutations);

    const UnivariateDistance dx(x), dy(y), dz(z);
    const double vx = detail::unbiased_from(dx.self_aggregates());
    const double vy = detail::unbiased_from(dy.self_aggregates());
    const double vz = detail::unbiased_from(dz.self_aggregates());
    CrossKernel kernel;

    const double r_yz = detail::unbiased_dcor(kernel.cross(dy, dz), vy, vz);
    const auto statistic = [&](std::span<const std::size_t> perm) {
        const double r_xy = detail::unbiased_dcor(kernel.cross(dy, dx, perm), vx, vy);
        const double r_xz = detail::unbiased_dcor(kernel.cross(dz, dx, perm), vx, vz);
        return pdcor_from_components(r_xy, r_xz, r_yz).value;
    };

    TestResult res;
    res.method = TestMethod::permutation;
    res.n_permutations = permutations;
    res.seed = rng.seed();
    res.statistic = statistic({});

    std::vector<double> stats(permutations, 0.0);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t r = 0; r < permutations; ++r) {
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        stats[r] = statistic(perm);
    }
    res.p_value = permutation_p_value(res.statistic, stats);
    return res;
}

inline TestResult dcor_test_asymptotic(std::span<const double> x, std::span<const double> y) {
    const auto est = dcor_bias_corrected(x, y);
    return asymptotic_result(est.value, est.n);
}

inline TestResult pdcor_test_asymptotic(std::span<const double> x, std::span<const double> y,
                                        std::span<const double> z) {
    const auto est = pdcor(x, y, z);
    return asymptotic_result(est.value, est.n);
}

}  // namespace dcortest
