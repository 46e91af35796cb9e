#pragma once

#include <cmath>
#include <span>

#include "dcortest/dcor.hpp"

namespace dcortest {

/// 1 - r^2 at or below this counts as zero; a component equal to +-1 up to
/// rounding must not leave a tiny positive factor under the square root.
inline constexpr double kPartialDegenerateTolerance = 1e-12;

struct PartialDCorEstimate {
    double value = 0.0;
    double r_xy = 0.0;
    double r_xz = 0.0;
    double r_yz = 0.0;
    std::size_t n = 0;
    /// Set when 1 - r_xz^2 or 1 - r_yz^2 is not positive (within
    /// kPartialDegenerateTolerance); `value` is then 0.
    bool degenerate = false;
};

/// Partial distance correlation from three bias-corrected distance correlations.
inline PartialDCorEstimate pdcor_from_components(double r_xy, double r_xz, double r_yz,
                                                 std::size_t n = 0) {
    PartialDCorEstimate est{0.0, r_xy, r_xz, r_yz, n, false};
    const double fx = 1.0 - r_xz * r_xz;
    const double fy = 1.0 - r_yz * r_yz;
    if (!(fx > kPartialDegenerateTolerance) || !(fy > kPartialDegenerateTolerance)) {
        est.degenerate = true;
        return est;
    }
    est.value = (r_xy - r_xz * r_yz) / (std::sqrt(fx) * std::sqrt(fy));
    return est;
}

inline PartialDCorEstimate pdcor(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> z) {
    detail::require_same_length(x.size(), y.size(), "pdcor");
    detail::require_same_length(x.size(), z.size(), "pdcor");
    detail::require_min_size(x.size(), 4, "pdcor");
    return pdcor_from_components(dcor_bias_corrected(x, y).value, dcor_bias_corrected(x, z).value,
                                 dcor_bias_corrected(y, z).value, x.size());
}

}  // namespace dcortest
