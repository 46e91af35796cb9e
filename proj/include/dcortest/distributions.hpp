#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dcortest/dcor.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/rng.hpp"

namespace dcortest {

enum class Family {
    Beta,
    SkewNormal,
    Cauchy,
    Gamma,
    VonMises,
    MixtureNormal2,
    MixtureNormal3,
    MixtureSkewT2,
    MixtureExpWeibull,
    StdNormal,
};

/// A sampling distribution. Parameter layout by family:
///
///   Beta               params = {a, b}
///   SkewNormal         params = {location, scale, slant}
///   Cauchy             params = {location, scale}
///   Gamma              params = {shape, scale}
///   VonMises           params = {mu, kappa}
///   MixtureNormal2/3   params = {mean_1, sd_1, mean_2, sd_2, ...}, one weight per component
///   MixtureSkewT2      params = {location, scale, slant, dof} per component, two weights
///   MixtureExpWeibull  params = {exp_rate, weibull_shape, weibull_scale}, two weights
///   StdNormal          params = {}
struct DistributionSpec {
    Family family = Family::StdNormal;
    std::vector<double> params;
    std::vector<double> weights;

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

inline constexpr std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::Beta: return "Beta";
        case Family::SkewNormal: return "SkewNormal";
        case Family::Cauchy: return "Cauchy";
        case Family::Gamma: return "Gamma";
        case Family::VonMises: return "VonMises";
        case Family::MixtureNormal2: return "MixtureNormal2";
        case Family::MixtureNormal3: return "MixtureNormal3";
        case Family::MixtureSkewT2: return "MixtureSkewT2";
        case Family::MixtureExpWeibull: return "MixtureExpWeibull";
        case Family::StdNormal: return "StdNormal";
    }
    return "?";
}

/// Short table label (Be, SN, Cau, Ga, vM, M2N, M3N, M2St, ExpWei, N).
inline constexpr std::string_view family_label(Family f) noexcept {
    switch (f) {
        case Family::Beta: return "Be";
        case Family::SkewNormal: return "SN";
        case Family::Cauchy: return "Cau";
        case Family::Gamma: return "Ga";
        case Family::VonMises: return "vM";
        case Family::MixtureNormal2: return "M2N";
        case Family::MixtureNormal3: return "M3N";
        case Family::MixtureSkewT2: return "M2St";
        case Family::MixtureExpWeibull: return "ExpWei";
        case Family::StdNormal: return "N";
    }
    return "?";
}

inline constexpr std::array<Family, 10> kAllFamilies = {
    Family::Beta,           Family::SkewNormal,     Family::Cauchy,
    Family::Gamma,          Family::VonMises,       Family::MixtureNormal2,
    Family::MixtureNormal3, Family::MixtureSkewT2,  Family::MixtureExpWeibull,
    Family::StdNormal,
};

/// Accepts either the long name or the short label.
inline Family parse_family(std::string_view s) {
    for (Family f : kAllFamilies) {
        if (s == family_name(f) || s == family_label(f)) return f;
    }
    throw ConfigError("unknown distribution family '" + std::string(s) + "'");
}

/// Default parameterisation used by the simulation scenarios.
inline DistributionSpec default_spec(Family f) {
    switch (f) {
        case Family::Beta: return {f, {2.0, 5.0}, {}};
        case Family::SkewNormal: return {f, {0.0, 1.0, 5.0}, {}};
        case Family::Cauchy: return {f, {0.0, 1.0}, {}};
        case Family::Gamma: return {f, {2.0, 1.0}, {}};
        case Family::VonMises: return {f, {0.0, 2.0}, {}};
        case Family::MixtureNormal2: return {f, {0.0, 1.0, 3.0, 1.0}, {0.5, 0.5}};
        case Family::MixtureNormal3:
            return {f, {-3.0, 1.0, 0.0, 1.0, 3.0, 1.0}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        case Family::MixtureSkewT2:
            return {f, {-2.0, 1.0, 3.0, 5.0, 2.0, 1.0, -3.0, 5.0}, {0.5, 0.5}};
        case Family::MixtureExpWeibull: return {f, {1.0, 2.0, 1.0}, {0.5, 0.5}};
        case Family::StdNormal: return {f, {}, {}};
    }
    throw ParameterError("default_spec: unknown family");
}

namespace detail {

inline void check_param_count(const DistributionSpec& s, std::size_t params, std::size_t weights) {
    if (s.params.size() != params || s.weights.size() != weights) {
        throw ParameterError(std::string(family_name(s.family)) + ": expected " +
                             std::to_string(params) + " parameters and " + std::to_string(weights) +
                             " weights");
    }
}

inline void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(std::string(what) + " must be strictly positive and finite");
    }
}

inline void check_finite_param(double v, const char* what) {
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite");
}

inline void check_weights(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("mixture weights must be non-negative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture weights must sum to 1");
}

}  // namespace detail

/// Throws ParameterError if the distribution's parameters are malformed.
inline void validate(const DistributionSpec& s) {
    using detail::check_finite_param;
    using detail::check_param_count;
    using detail::check_positive;
    const auto& p = s.params;
    switch (s.family) {
        case Family::Beta:
            check_param_count(s, 2, 0);
            check_positive(p[0], "Beta shape a");
            check_positive(p[1], "Beta shape b");
            break;
        case Family::SkewNormal:
            check_param_count(s, 3, 0);
            check_finite_param(p[0], "skew-normal location");
            check_positive(p[1], "skew-normal scale");
            check_finite_param(p[2], "skew-normal slant");
            break;
        case Family::Cauchy:
            check_param_count(s, 2, 0);
            check_finite_param(p[0], "Cauchy location");
            check_positive(p[1], "Cauchy scale");
            break;
        case Family::Gamma:
            check_param_count(s, 2, 0);
            check_positive(p[0], "Gamma shape");
            check_positive(p[1], "Gamma scale");
            break;
        case Family::VonMises:
            check_param_count(s, 2, 0);
            check_finite_param(p[0], "von Mises mean");
            if (!(p[1] >= 0.0) || !std::isfinite(p[1])) {
                throw ParameterError("von Mises concentration must be >= 0");
            }
            break;
        case Family::MixtureNormal2:
        case Family::MixtureNormal3: {
            const std::size_t k = s.family == Family::MixtureNormal2 ? 2 : 3;
            check_param_count(s, 2 * k, k);
            for (std::size_t c = 0; c < k; ++c) {
                check_finite_param(p[2 * c], "normal component mean");
                check_positive(p[2 * c + 1], "normal component sd");
            }
            detail::check_weights(s.weights);
            break;
        }
        case Family::MixtureSkewT2:
            check_param_count(s, 8, 2);
            for (std::size_t c = 0; c < 2; ++c) {
                check_finite_param(p[4 * c], "skew-t location");
                check_positive(p[4 * c + 1], "skew-t scale");
                check_finite_param(p[4 * c + 2], "skew-t slant");
                check_positive(p[4 * c + 3], "skew-t degrees of freedom");
            }
            detail::check_weights(s.weights);
            break;
        case Family::MixtureExpWeibull:
            check_param_count(s, 3, 2);
            check_positive(p[0], "exponential rate");
            check_positive(p[1], "Weibull shape");
            check_positive(p[2], "Weibull scale");
            detail::check_weights(s.weights);
            break;
        case Family::StdNormal:
            check_param_count(s, 0, 0);
            break;
    }
}

namespace detail {

using Engine = RngStream::engine_type;

inline double standard_normal(Engine& eng) { return std::normal_distribution<double>(0.0, 1.0)(eng); }

// Conditioning construction: (U0, U1) standard bivariate normal with
// correlation delta = alpha / sqrt(1 + alpha^2); U1 if U0 > 0 else -U1.
inline double standard_skew_normal(double slant, Engine& eng) {
    const double delta = slant / std::sqrt(1.0 + slant * slant);
    const double u0 = standard_normal(eng);
    const double v = standard_normal(eng);
    const double u1 = delta * u0 + std::sqrt(1.0 - delta * delta) * v;
    return u0 > 0.0 ? u1 : -u1;
}

inline double skew_t(double loc, double scale, double slant, double dof, Engine& eng) {
    const double z = standard_skew_normal(slant, eng);
    const double w = std::chi_squared_distribution<double>(dof)(eng) / dof;
    return loc + scale * z / std::sqrt(w);
}

inline double wrap_angle(double theta) {
    double t = std::remainder(theta, 2.0 * std::numbers::pi);
    if (t <= -std::numbers::pi) t = std::numbers::pi;
    return t;
}

// Best & Fisher (1979) rejection sampler.
inline double von_mises(double mu, double kappa, Engine& eng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (kappa < 1e-8) {
        return wrap_angle(mu + std::numbers::pi * (2.0 * unif(eng) - 1.0));
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    double f = 0.0;
    for (;;) {
        const double u1 = unif(eng);
        const double u2 = unif(eng);
        const double z = std::cos(std::numbers::pi * u1);
        f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2.0 - c) - u2 > 0.0) break;
        if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
    }
    const double sign = unif(eng) > 0.5 ? 1.0 : -1.0;
    return wrap_angle(mu + sign * std::acos(std::clamp(f, -1.0, 1.0)));
}

inline std::size_t pick_component(const std::vector<double>& weights, Engine& eng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < weights.size(); ++c) {
        acc += weights[c];
        if (u < acc) return c;
    }
    // Trailing zero-weight components are never selected.
    std::size_t last = weights.size() - 1;
    while (last > 0 && weights[last] == 0.0) --last;
    return last;
}

inline double draw_one(const DistributionSpec& s, Engine& eng) {
    const auto& p = s.params;
    switch (s.family) {
        case Family::Beta: {
            const double a = std::gamma_distribution<double>(p[0], 1.0)(eng);
            const double b = std::gamma_distribution<double>(p[1], 1.0)(eng);
            return a / (a + b);
        }
        case Family::SkewNormal: return p[0] + p[1] * standard_skew_normal(p[2], eng);
        case Family::Cauchy: return std::cauchy_distribution<double>(p[0], p[1])(eng);
        case Family::Gamma: return std::gamma_distribution<double>(p[0], p[1])(eng);
        case Family::VonMises: return von_mises(p[0], p[1], eng);
        case Family::MixtureNormal2:
        case Family::MixtureNormal3: {
            const std::size_t c = pick_component(s.weights, eng);
            return p[2 * c] + p[2 * c + 1] * standard_normal(eng);
        }
        case Family::MixtureSkewT2: {
            const std::size_t c = pick_component(s.weights, eng);
            return skew_t(p[4 * c], p[4 * c + 1], p[4 * c + 2], p[4 * c + 3], eng);
        }
        case Family::MixtureExpWeibull: {
            const std::size_t c = pick_component(s.weights, eng);
            if (c == 0) return std::exponential_distribution<double>(p[0])(eng);
            return std::weibull_distribution<double>(p[1], p[2])(eng);
        }
        case Family::StdNormal: return standard_normal(eng);
    }
    return 0.0;
}

}  // namespace detail

/// n i.i.d. draws from `spec`, consuming `rng`.
inline Sample sample(const DistributionSpec& spec, std::size_t n, RngStream& rng) {
    if (n < 1) throw SizeError("sample: n must be at least 1");
    validate(spec);
    Sample out(n);
    for (double& v : out) v = detail::draw_one(spec, rng.engine());
    return out;
}

inline Sample standard_normal_sample(std::size_t n, RngStream& rng) {
    return sample(default_spec(Family::StdNormal), n, rng);
}

namespace detail {

// |v| is clamped away from 0 before taking logs.
inline double safe_abs(double v) { return std::max(std::abs(v), 1e-300); }

}  // namespace detail

struct Case4Data {
    Sample x;
    Sample y;
};

/// x = ln|z| + z^2 + eta, y = sin z + log10|z| + eta', with eta, eta'
/// independent N(0, noise_sd^2). noise_sd = 0 gives the noiseless map.
inline Case4Data gen_case4(std::span<const double> z, RngStream& rng, double noise_sd = 1.0) {
    if (z.empty()) throw SizeError("gen_case4: z must be non-empty");
    const std::size_t n = z.size();
    Case4Data out{Sample(n), Sample(n)};
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double az = detail::safe_abs(z[i]);
        out.x[i] = std::log(az) + z[i] * z[i];
        out.y[i] = std::sin(z[i]) + std::log10(az);
    }
    if (noise_sd != 0.0) {
        for (double& v : out.x) v += noise_sd * noise(rng.engine());
        for (double& v : out.y) v += noise_sd * noise(rng.engine());
    }
    return out;
}

/// Collider: z = ln|x| + sin y + eta, eta ~ N(0, noise_sd^2).
inline Sample gen_case5(std::span<const double> x, std::span<const double> y, RngStream& rng,
                        double noise_sd = 1.0) {
    detail::require_same_length(x.size(), y.size(), "gen_case5");
    Sample z(x.size());
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        z[i] = std::log(detail::safe_abs(x[i])) + std::sin(y[i]);
        if (noise_sd != 0.0) z[i] += noise_sd * noise(rng.engine());
    }
    return z;
}

struct FilteringDesign {
    /// Families in column-block order; `columns_per_family` columns each.
    std::vector<DistributionSpec> families = {
        default_spec(Family::Beta),           default_spec(Family::SkewNormal),
        default_spec(Family::VonMises),       default_spec(Family::Gamma),
        default_spec(Family::Cauchy),         default_spec(Family::MixtureNormal2),
        default_spec(Family::MixtureNormal3), default_spec(Family::MixtureSkewT2),
    };
    std::size_t columns_per_family = 50;
    /// The first `active_columns` coefficients equal `coefficient`, the rest are 0.
    std::size_t active_columns = 10;
    double coefficient = 1.0;
    double intercept = 5.0;
    double noise_sd = 1.0;

    std::size_t total_columns() const noexcept { return families.size() * columns_per_family; }
};

struct FilteringData {
    /// Standardized predictor columns (zero mean, unit sample variance).
    std::vector<Sample> columns;
    Sample y;
    std::vector<std::size_t> true_support;
};

/// Standardize in place to zero mean and unit (n - 1)-denominator variance.
/// Constant columns are only centered.
inline void standardize(Sample& v) {
    const auto n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double& e : v) {
        e -= mean;
        ss += e * e;
    }
    if (v.size() < 2 || !(ss > 0.0)) return;
    const double sd = std::sqrt(ss / (n - 1.0));
    for (double& e : v) e /= sd;
    // Second pass removes the residual mean left by rounding.
    const double resid = std::accumulate(v.begin(), v.end(), 0.0) / n;
    for (double& e : v) e -= resid;
}

/// Univariate-filtering design: predictor blocks from each family, response
/// y_i = exp(x_i^T b + intercept) + eta_i on the standardized predictors.
inline FilteringData gen_case6(std::size_t n, RngStream& rng, const FilteringDesign& design = {}) {
    if (n < 4) throw SizeError("gen_case6: n must be at least 4");
    if (design.active_columns > design.total_columns()) {
        throw ParameterError("gen_case6: more active columns than predictors");
    }
    FilteringData out;
    out.columns.reserve(design.total_columns());
    for (const auto& fam : design.families) {
        for (std::size_t c = 0; c < design.columns_per_family; ++c) {
            Sample col = sample(fam, n, rng);
            standardize(col);
            out.columns.push_back(std::move(col));
        }
    }
    if (design.coefficient != 0.0) {
        for (std::size_t j = 0; j < design.active_columns; ++j) out.true_support.push_back(j);
    }
    out.y.assign(n, design.intercept);
    for (std::size_t j : out.true_support) {
        for (std::size_t i = 0; i < n; ++i) out.y[i] += design.coefficient * out.columns[j][i];
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double& v : out.y) {
        v = std::exp(v);
        if (design.noise_sd != 0.0) v += design.noise_sd * noise(rng.engine());
    }
    return out;
}

}  // namespace dcortest
