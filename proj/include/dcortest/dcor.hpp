#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dcortest/errors.hpp"

namespace dcortest {

/// One variable's observations, in sample order.
using Sample = std::vector<double>;

/// Unnormalized sums over the pairwise distance matrices A = (|x_i - x_j|)
/// and B = (|y_i - y_j|). Both the biased and the bias-corrected distance
/// covariance are linear combinations of these three numbers.
struct DistanceAggregates {
    double pair_product_sum = 0.0;  // sum_{i != j} a_ij b_ij
    double row_sum_products = 0.0;  // sum_i a_i. b_i.
    double grand_product = 0.0;     // a.. * b..
    std::size_t n = 0;
};

enum class DCorKind { biased_sq, bias_corrected };

struct DCorEstimate {
    double value = 0.0;
    DCorKind kind = DCorKind::bias_corrected;
    std::size_t n = 0;
    /// Set when a distance variance is not strictly positive (e.g. constant input);
    /// `value` is then 0.
    bool degenerate = false;
};

namespace detail {

inline void require_finite(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw DataError(std::string(what) + ": sample contains a non-finite value");
        }
    }
}

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": samples have different lengths (" +
                             std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

inline void require_min_size(std::size_t n, std::size_t min_n, const char* what) {
    if (n < min_n) {
        throw SizeError(std::string(what) + ": needs at least " + std::to_string(min_n) +
                        " observations, got " + std::to_string(n));
    }
}

inline std::vector<double> centered(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    if (out.empty()) return out;
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (double& v : out) v -= mean;
    return out;
}

// Biased combination: (1/n^2) sum_ij Ahat_ij Bhat_ij.
inline double biased_from(const DistanceAggregates& g) {
    const double n = static_cast<double>(g.n);
    return g.pair_product_sum / (n * n) - 2.0 * g.row_sum_products / (n * n * n) +
           g.grand_product / (n * n * n * n);
}

// U-statistic combination; requires n >= 4.
inline double unbiased_from(const DistanceAggregates& g) {
    const double n = static_cast<double>(g.n);
    return g.pair_product_sum / (n * (n - 3.0)) -
           2.0 * g.row_sum_products / (n * (n - 2.0) * (n - 3.0)) +
           g.grand_product / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
}

// Order-preserving map of a finite double to an unsigned key; -0 folds into +0.
inline std::uint64_t sort_key(double v) noexcept {
    if (v == 0.0) v = 0.0;
    const auto b = std::bit_cast<std::uint64_t>(v);
    return (b >> 63) ? ~b : (b | (std::uint64_t{1} << 63));
}

/// Stable ascending order of `v`. LSD radix sort on 8-bit digits of the
/// order-preserving keys; small inputs use a comparison sort with the same
/// result.
inline std::vector<std::size_t> stable_order(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n < 128) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        return idx;
    }
    std::vector<std::uint64_t> key(n), key_tmp(n);
    std::vector<std::size_t> idx_tmp(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = sort_key(v[i]);
    for (unsigned shift = 0; shift < 64; shift += 8) {
        std::array<std::size_t, 257> start{};
        for (std::uint64_t k : key) ++start[((k >> shift) & 0xFF) + 1];
        if (std::find(start.begin() + 1, start.end(), n) != start.end()) continue;  // one digit value
        for (std::size_t d = 1; d < start.size(); ++d) start[d] += start[d - 1];
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pos = start[(key[i] >> shift) & 0xFF]++;
            key_tmp[pos] = key[i];
            idx_tmp[pos] = idx[i];
        }
        key.swap(key_tmp);
        idx.swap(idx_tmp);
    }
    return idx;
}

}  // namespace detail

/// Precomputed distance summaries of one univariate sample: centered values,
/// sort order, distance-matrix row sums, and the self aggregates. Every
/// quantity here is invariant under relabeling, which is what lets a
/// permutation test reuse it.
class UnivariateDistance {
public:
    explicit UnivariateDistance(std::span<const double> x) : values_(detail::centered(x)) {
        const std::size_t n = values_.size();
        constant_ = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
        if (constant_) std::fill(values_.begin(), values_.end(), 0.0);
        order_ = detail::stable_order(values_);
        sorted_.resize(n);
        ranks_.resize(n);
        std::uint32_t rank = 0;
        for (std::size_t k = 0; k < n; ++k) {
            sorted_[k] = values_[order_[k]];
            if (k == 0 || sorted_[k] != sorted_[k - 1]) ++rank;
            ranks_[order_[k]] = rank;
        }

        // Row k of the sorted distance matrix:
        // sum_{m<k} (s_k - s_m) + sum_{m>k} (s_m - s_k).
        const double total = std::accumulate(sorted_.begin(), sorted_.end(), 0.0);
        row_sums_.assign(n, 0.0);
        double prefix = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double s = sorted_[k];
            const double below = s * static_cast<double>(k) - prefix;
            const double above = (total - prefix - s) - s * static_cast<double>(n - k - 1);
            row_sums_[order_[k]] = below + above;
            prefix += s;
        }
        grand_sum_ = std::accumulate(row_sums_.begin(), row_sums_.end(), 0.0);

        double sq = 0.0;
        for (double v : values_) sq += v * v;
        const double nn = static_cast<double>(n);
        self_.n = n;
        self_.pair_product_sum = std::max(0.0, 2.0 * nn * sq - 2.0 * total * total);
        for (double r : row_sums_) self_.row_sum_products += r * r;
        self_.grand_product = grand_sum_ * grand_sum_;
    }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> centered_values() const noexcept { return values_; }
    std::span<const std::size_t> order() const noexcept { return order_; }
    std::span<const double> sorted_values() const noexcept { return sorted_; }
    /// Dense 1-based ranks (ties share a rank), in sample order.
    std::span<const std::uint32_t> ranks() const noexcept { return ranks_; }
    /// a_i. = sum_j |x_i - x_j|, in sample order.
    std::span<const double> row_sums() const noexcept { return row_sums_; }
    double grand_sum() const noexcept { return grand_sum_; }
    /// Aggregates of the pair (x, x).
    const DistanceAggregates& self_aggregates() const noexcept { return self_; }

    bool is_constant() const noexcept { return constant_; }

private:
    std::vector<double> values_;
    std::vector<std::size_t> order_;
    std::vector<double> sorted_;
    std::vector<std::uint32_t> ranks_;
    std::vector<double> row_sums_;
    double grand_sum_ = 0.0;
    DistanceAggregates self_;
    bool constant_ = false;
};

namespace detail {

inline void finish_cross(DistanceAggregates& g, const UnivariateDistance& u, const UnivariateDistance& v,
                         std::span<const std::size_t> perm) {
    const auto ru = u.row_sums();
    const auto rv = v.row_sums();
    const bool identity = perm.empty();
    for (std::size_t i = 0; i < ru.size(); ++i) {
        g.row_sum_products += ru[i] * rv[identity ? i : perm[i]];
    }
    g.grand_product = u.grand_sum() * v.grand_sum();
}

// sum_{i<j} (x_j - x_i)(y_j - y_i) over all pairs, with the discordant pairs'
// sign flipped, doubled for the i != j sum.
inline double pair_sum_from(std::size_t n, double sxy, double sx, double sy, double discordant) {
    const double all_pairs = static_cast<double>(n) * sxy - sx * sy;
    return std::max(0.0, 2.0 * (all_pairs - 2.0 * discordant));
}

}  // namespace detail

/// Reusable workspace for cross aggregates between a fixed variable `u` and a
/// relabeled partner `v`; the permutation tests' inner loop. The discordant
/// pair sum comes from a Fenwick tree over the partner's precomputed ranks, so
/// no per-call sorting is needed. Not thread-safe; use one per worker.
class CrossKernel {
public:
    /// Aggregates of (u, v∘perm), i.e. the partner's i-th observation is
    /// v[perm[i]]. An empty `perm` means the identity.
    DistanceAggregates cross(const UnivariateDistance& u, const UnivariateDistance& v,
                             std::span<const std::size_t> perm = {}) {
        const std::size_t n = u.size();
        detail::require_same_length(n, v.size(), "cross aggregates");
        const bool identity = perm.empty();
        if (!identity) detail::require_same_length(n, perm.size(), "cross aggregates");

        const auto uo = u.order();
        const auto us = u.sorted_values();
        const auto vv = v.centered_values();
        const auto vr = v.ranks();
        tree_.assign(n + 1, Node{});
        Node total;
        double discordant = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
        // Walk u in ascending order; for each point, the already-inserted points
        // with a strictly larger partner rank are exactly its discordant pairs.
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = identity ? uo[k] : perm[uo[k]];
            const double xj = us[k];
            const double yj = vv[idx];
            const double pxy = xj * yj;
            const std::uint32_t rj = vr[idx];
            Node below;
            for (std::uint32_t t = rj; t > 0; t &= t - 1) below += tree_[t];
            const double c = total.count - below.count;
            const double gx = total.x - below.x;
            const double gy = total.y - below.y;
            const double gxy = total.xy - below.xy;
            discordant += c * pxy - xj * gy - yj * gx + gxy;
            const Node add{1.0, xj, yj, pxy};
            for (std::size_t t = rj; t <= n; t += t & (~t + 1)) tree_[t] += add;
            total += add;
            sxy += pxy;
            sx += xj;
            sy += yj;
        }

        DistanceAggregates g;
        g.n = n;
        g.pair_product_sum = detail::pair_sum_from(n, sxy, sx, sy, discordant);
        detail::finish_cross(g, u, v, perm);
        return g;
    }

private:
    struct Node {
        double count = 0.0, x = 0.0, y = 0.0, xy = 0.0;
        Node& operator+=(const Node& o) noexcept {
            count += o.count;
            x += o.x;
            y += o.y;
            xy += o.xy;
            return *this;
        }
    };
    std::vector<Node> tree_;
};

namespace detail {

// Orientation is fixed by the lexicographic order of the centered vectors so
// the result is bitwise symmetric in its arguments.
inline DistanceAggregates symmetric_cross(const UnivariateDistance& dx, const UnivariateDistance& dy) {
    const auto cx = dx.centered_values();
    const auto cy = dy.centered_values();
    if (std::lexicographical_compare(cy.begin(), cy.end(), cx.begin(), cx.end())) {
        return CrossKernel{}.cross(dy, dx);
    }
    return CrossKernel{}.cross(dx, dy);
}

}  // namespace detail

/// O(n^2) double loop over the distance matrices. Reference path for
/// cross-checking and for very small samples.
inline DistanceAggregates naive_aggregates(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "naive_aggregates");
    const std::size_t n = x.size();
    std::vector<double> ra(n, 0.0), rb(n, 0.0);
    DistanceAggregates g;
    g.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = std::abs(x[i] - x[j]);
            const double b = std::abs(y[i] - y[j]);
            g.pair_product_sum += a * b;
            ra[i] += a;
            rb[i] += b;
        }
    }
    double ga = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g.row_sum_products += ra[i] * rb[i];
        ga += ra[i];
        gb += rb[i];
    }
    g.grand_product = ga * gb;
    return g;
}

/// O(n log n) aggregates for univariate samples: sort-based prefix sums give
/// the row and grand sums, a Fenwick-tree pass over the partner ranks gives the
/// pair-product sum.
///
/// The result is exactly symmetric in (x, y).
inline DistanceAggregates fast_aggregates_univariate(std::span<const double> x,
                                                     std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "fast_aggregates_univariate");
    detail::require_finite(x, "fast_aggregates_univariate");
    detail::require_finite(y, "fast_aggregates_univariate");
    return detail::symmetric_cross(UnivariateDistance(x), UnivariateDistance(y));
}

/// Biased squared distance covariance (1/n^2) sum_ij Ahat_ij Bhat_ij.
inline double dcov_biased_sq(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "dcov_biased_sq");
    detail::require_min_size(x.size(), 2, "dcov_biased_sq");
    return std::max(0.0, detail::biased_from(fast_aggregates_univariate(x, y)));
}

/// Unbiased (U-centered) squared distance covariance. May be negative.
inline double dcov_unbiased(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "dcov_unbiased");
    detail::require_min_size(x.size(), 4, "dcov_unbiased");
    return detail::unbiased_from(fast_aggregates_univariate(x, y));
}

/// Correlation from cross and self aggregates; 0 with the degenerate flag when
/// either variance is not strictly positive.
inline DCorEstimate dcor_from_aggregates(const DistanceAggregates& xy, const DistanceAggregates& xx,
                                         const DistanceAggregates& yy, DCorKind kind) {
    DCorEstimate est;
    est.kind = kind;
    est.n = xy.n;
    const auto combine = kind == DCorKind::biased_sq ? detail::biased_from : detail::unbiased_from;
    const double vx = combine(xx);
    const double vy = combine(yy);
    if (!(vx > 0.0) || !(vy > 0.0)) {
        est.degenerate = true;
        return est;
    }
    double cov = combine(xy);
    if (kind == DCorKind::biased_sq) cov = std::max(0.0, cov);
    est.value = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
    return est;
}

inline DCorEstimate dcor_bias_corrected(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "dcor_bias_corrected");
    detail::require_min_size(x.size(), 4, "dcor_bias_corrected");
    detail::require_finite(x, "dcor_bias_corrected");
    detail::require_finite(y, "dcor_bias_corrected");
    const UnivariateDistance dx(x), dy(y);
    if (dx.is_constant() || dy.is_constant()) {
        return {0.0, DCorKind::bias_corrected, x.size(), true};
    }
    return dcor_from_aggregates(detail::symmetric_cross(dx, dy), dx.self_aggregates(),
                                dy.self_aggregates(), DCorKind::bias_corrected);
}

inline DCorEstimate dcor_biased_sq(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x.size(), y.size(), "dcor_biased_sq");
    detail::require_min_size(x.size(), 2, "dcor_biased_sq");
    detail::require_finite(x, "dcor_biased_sq");
    detail::require_finite(y, "dcor_biased_sq");
    const UnivariateDistance dx(x), dy(y);
    if (dx.is_constant() || dy.is_constant()) {
        return {0.0, DCorKind::biased_sq, x.size(), true};
    }
    return dcor_from_aggregates(detail::symmetric_cross(dx, dy), dx.self_aggregates(),
                                dy.self_aggregates(), DCorKind::biased_sq);
}

}  // namespace dcortest
