#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "dcortest/dcor.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/result.hpp"

namespace dcortest {

struct PearsonEstimate {
    double r = 0.0;
    std::size_t n = 0;
    std::size_t conditioning_size = 0;
    /// Constant input; `r` is reported as 0.
    bool degenerate = false;
};

inline PearsonEstimate pearson_corr(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "pearson_corr");
    detail::require_min_size(x.size(), 3, "pearson_corr");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    PearsonEstimate est{0.0, n, 0, false};
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        est.degenerate = true;
        return est;
    }
    est.r = std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
    return est;
}

/// Partial correlation of x and y given the control variables `controls`.
///
/// One control uses the closed form
/// (R_xy - R_xz R_yz) / sqrt((1 - R_xz^2)(1 - R_yz^2)); more than one uses
/// -A_12 / sqrt(A_11 A_22) with A the inverse correlation matrix of (x, y, Z).
inline PearsonEstimate partial_pearson(std::span<const double> x, std::span<const double> y,
                                       std::span<const std::span<const double>> controls) {
    if (controls.empty()) {
        throw ParameterError("partial_pearson: at least one control variable is required");
    }
    detail::require_same_length(x.size(), y.size(), "partial_pearson");
    for (const auto& z : controls) detail::require_same_length(x.size(), z.size(), "partial_pearson");
    const std::size_t k = controls.size();
    const std::size_t n = x.size();
    if (n <= k + 3) {
        throw SizeError("partial_pearson: needs n > |Z| + 3");
    }

    PearsonEstimate est{0.0, n, k, false};
    if (k == 1) {
        const double rxy = pearson_corr(x, y).r;
        const double rxz = pearson_corr(x, controls[0]).r;
        const double ryz = pearson_corr(y, controls[0]).r;
        const double fx = 1.0 - rxz * rxz;
        const double fy = 1.0 - ryz * ryz;
        const double denom = fx * fy;
        if (!(fx > 1e-12) || !(fy > 1e-12)) {
            throw SingularityError("partial_pearson: control variable is perfectly correlated");
        }
        est.r = std::clamp((rxy - rxz * ryz) / std::sqrt(denom), -1.0, 1.0);
        return est;
    }

    std::vector<std::span<const double>> vars;
    vars.reserve(k + 2);
    vars.push_back(x);
    vars.push_back(y);
    vars.insert(vars.end(), controls.begin(), controls.end());
    const auto m = static_cast<Eigen::Index>(vars.size());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const auto rij = pearson_corr(vars[static_cast<std::size_t>(i)], vars[static_cast<std::size_t>(j)]);
            if (rij.degenerate) {
                throw SingularityError("partial_pearson: constant variable in correlation matrix");
            }
            corr(i, j) = corr(j, i) = rij.r;
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(corr);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        throw SingularityError("partial_pearson: correlation matrix is singular");
    }
    const Eigen::MatrixXd inv = lu.inverse();
    const double d = inv(0, 0) * inv(1, 1);
    if (!(d > 0.0)) {
        throw SingularityError("partial_pearson: correlation matrix is not positive definite");
    }
    est.r = std::clamp(-inv(0, 1) / std::sqrt(d), -1.0, 1.0);
    return est;
}

/// Fisher's z: 0.5 ln((1 + r) / (1 - r)). Infinite for |r| = 1.
inline double fisher_transform(double r) {
    if (std::isnan(r) || std::abs(r) > 1.0) {
        throw ParameterError("fisher_transform: |r| must not exceed 1");
    }
    if (r == 1.0) return std::numeric_limits<double>::infinity();
    if (r == -1.0) return -std::numeric_limits<double>::infinity();
    return std::atanh(r);
}

/// Two-sided Fisher-z test of rho = rho0 with a t reference distribution on
/// n - 3 - |Z| degrees of freedom. |r| = 1 forces p = 0.
inline TestResult pearson_test(const PearsonEstimate& est, double rho0 = 0.0) {
    if (!(std::abs(rho0) < 1.0)) {
        throw ParameterError("pearson_test: |rho0| must be < 1");
    }
    const double df = static_cast<double>(est.n) - 3.0 - static_cast<double>(est.conditioning_size);
    if (df < 1.0) {
        throw SizeError("pearson_test: fewer than 1 degree of freedom");
    }
    TestResult res;
    res.method = TestMethod::pearson;
    const double fz = fisher_transform(est.r);
    if (std::isinf(fz)) {
        res.statistic = fz;
        res.p_value = 0.0;
        return res;
    }
    res.statistic = (fz - fisher_transform(rho0)) * std::sqrt(df);
    if (res.statistic == 0.0) {
        res.p_value = 1.0;
        return res;
    }
    const boost::math::students_t_distribution<double> tdist(df);
    res.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(res.statistic))));
    res.p_value = std::max(res.p_value, std::numeric_limits<double>::min());
    return res;
}

}  // namespace dcortest
