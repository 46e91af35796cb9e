#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "dcortest/distributions.hpp"
#include "oracles.hpp"

using namespace dcortest;

namespace {

double mean(const Sample& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double variance(const Sample& v) {
    const double m = mean(v);
    double s = 0;
    for (double e : v) s += (e - m) * (e - m);
    return s / double(v.size() - 1);
}

Sample draw(const DistributionSpec& s, std::size_t n, std::uint64_t seed) {
    RngStream rng(seed);
    return sample(s, n, rng);
}

constexpr std::size_t kBig = 100000;

}  // namespace

TEST(Sample, BetaMeanMatchesAnalyticValue) {
    const auto v = draw(default_spec(Family::Beta), kBig, 11);
    const double a = 2, b = 5;
    const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)));
    EXPECT_NEAR(mean(v), a / (a + b), 3 * sd / std::sqrt(double(kBig)));
    EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double e) { return e > 0 && e < 1; }));
}

TEST(Sample, GammaMoments) {
    const auto v = draw(default_spec(Family::Gamma), kBig, 12);
    // shape 2, scale 1: mean 2, variance 2.
    EXPECT_NEAR(mean(v), 2.0, 3 * std::sqrt(2.0 / kBig));
    EXPECT_NEAR(variance(v), 2.0, 0.05);
}

TEST(Sample, VonMisesSupportAndMeanResultant) {
    const DistributionSpec s{Family::VonMises, {0.0, 1.0}, {}};
    const auto v = draw(s, kBig, 13);
    EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double e) { return e > -std::numbers::pi && e <= std::numbers::pi; }));
    double c = 0;
    for (double e : v) c += std::cos(e);
    const double want = std::cyl_bessel_i(1.0, 1.0) / std::cyl_bessel_i(0.0, 1.0);
    EXPECT_NEAR(c / kBig, want, 0.01);
}

TEST(Sample, VonMisesZeroConcentrationIsUniform) {
    const DistributionSpec s{Family::VonMises, {1.0, 0.0}, {}};
    const auto v = draw(s, kBig, 14);
    const double d = oracle::ks_distance(v, [](double x) { return (x + std::numbers::pi) / (2 * std::numbers::pi); });
    EXPECT_LT(d, 0.01);
}

TEST(Sample, DegenerateMixtureIsFirstComponent) {
    const DistributionSpec s{Family::MixtureNormal2, {0.0, 1.0, 3.0, 1.0}, {1.0, 0.0}};
    const auto v = draw(s, kBig, 15);
    EXPECT_NEAR(mean(v), 0.0, 3.0 / std::sqrt(double(kBig)));
    EXPECT_LT(oracle::ks_distance(v, [](double x) { return oracle::normal_cdf(x); }), 0.01);
}

TEST(Sample, CauchyMedianNearLocation) {
    auto v = draw(default_spec(Family::Cauchy), kBig, 16);
    std::nth_element(v.begin(), v.begin() + kBig / 2, v.end());
    // asymptotic sd of the median: 1 / (2 f(0) sqrt(n)), f(0) = 1/pi
    EXPECT_NEAR(v[kBig / 2], 0.0, 3 * std::numbers::pi / (2 * std::sqrt(double(kBig))));
}

TEST(Sample, SkewNormalMeanAndMirror) {
    const double alpha = 5.0, delta = alpha / std::sqrt(1 + alpha * alpha);
    const double m = delta * std::sqrt(2 / std::numbers::pi);
    const double sd = std::sqrt(1 - m * m);
    const auto pos = draw({Family::SkewNormal, {0, 1, alpha}, {}}, kBig, 17);
    const auto neg = draw({Family::SkewNormal, {0, 1, -alpha}, {}}, kBig, 18);
    const double tol = 3 * sd / std::sqrt(double(kBig));
    EXPECT_NEAR(mean(pos), m, tol);
    EXPECT_NEAR(mean(neg), -m, tol);
    // skew-normal CDF: Phi(x) - 2 T(x, alpha); compare via tabulated density
    const auto cdf = oracle::tabulated_cdf(
        [&](double x) { return 2 * std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi) * oracle::normal_cdf(alpha * x); },
        -10, 10);
    EXPECT_LT(oracle::ks_distance(pos, cdf), 0.01);
}

TEST(Sample, MixtureLawsMatchComponentCdfs) {
    {
        const auto v = draw(default_spec(Family::MixtureNormal2), kBig, 21);
        EXPECT_LT(oracle::ks_distance(v, [](double x) {
                      return 0.5 * oracle::normal_cdf(x, 0, 1) + 0.5 * oracle::normal_cdf(x, 3, 1);
                  }),
                  0.02);
    }
    {
        const auto v = draw(default_spec(Family::MixtureNormal3), kBig, 22);
        EXPECT_LT(oracle::ks_distance(v, [](double x) {
                      return (oracle::normal_cdf(x, -3, 1) + oracle::normal_cdf(x, 0, 1) + oracle::normal_cdf(x, 3, 1)) / 3;
                  }),
                  0.02);
    }
    {
        const auto v = draw(default_spec(Family::MixtureExpWeibull), kBig, 23);
        EXPECT_LT(oracle::ks_distance(v, [](double x) {
                      if (x <= 0) return 0.0;
                      return 0.5 * (1 - std::exp(-x)) + 0.5 * (1 - std::exp(-x * x));
                  }),
                  0.02);
    }
    {
        // Azzalini skew-t density: 2/w t_nu(u) T_{nu+1}(a u sqrt((nu+1)/(nu+u^2))), u = (x-loc)/w.
        const auto skew_t_pdf = [](double x, double loc, double w, double a, double nu) {
            const boost::math::students_t t(nu), t1(nu + 1);
            const double u = (x - loc) / w;
            return 2 / w * boost::math::pdf(t, u) * boost::math::cdf(t1, a * u * std::sqrt((nu + 1) / (nu + u * u)));
        };
        const auto cdf = oracle::tabulated_cdf(
            [&](double x) { return 0.5 * skew_t_pdf(x, -2, 1, 3, 5) + 0.5 * skew_t_pdf(x, 2, 1, -3, 5); }, -200, 200,
            400000);
        const auto v = draw(default_spec(Family::MixtureSkewT2), kBig, 24);
        EXPECT_LT(oracle::ks_distance(v, cdf), 0.02);
    }
}

TEST(Sample, ReproducibleAndStreamDependent) {
    for (Family f : kAllFamilies) {
        const auto spec = default_spec(f);
        RngStream a(99, 3), b(99, 3), c(99, 4);
        const auto va = sample(spec, 200, a);
        const auto vb = sample(spec, 200, b);
        const auto vc = sample(spec, 200, c);
        EXPECT_EQ(va, vb) << family_name(f);
        EXPECT_NE(va, vc) << family_name(f);
    }
}

TEST(Sample, DerivedStreamsDoNotConsumeParent) {
    RngStream a(5), b(5);
    (void)a.derive(1);
    (void)a.derive(2);
    EXPECT_EQ(a.engine()(), b.engine()());
    EXPECT_NE(RngStream(5).derive(1).engine()(), RngStream(5).derive(2).engine()());
}

TEST(Sample, ParameterValidation) {
    EXPECT_THROW(draw({Family::Beta, {0.0, 1.0}, {}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::Gamma, {1.0, -1.0}, {}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::Cauchy, {0.0, 0.0}, {}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::VonMises, {0.0, -0.1}, {}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::SkewNormal, {0.0, 1.0}, {}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::MixtureNormal2, {0, 1, 3, 1}, {0.6, 0.6}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::MixtureNormal2, {0, 1, 3, 1}, {1.2, -0.2}}, 5, 1), ParameterError);
    EXPECT_THROW(draw({Family::MixtureSkewT2, {-2, 1, 3, 0, 2, 1, -3, 5}, {0.5, 0.5}}, 5, 1), ParameterError);
    EXPECT_THROW(draw(default_spec(Family::Beta), 0, 1), SizeError);
    EXPECT_NO_THROW(draw({Family::MixtureNormal2, {0, 1, 3, 1}, {0.5, 0.5 + 1e-13}}, 5, 1));
}

TEST(Sample, FamilyNamesRoundTrip) {
    for (Family f : kAllFamilies) {
        EXPECT_EQ(parse_family(family_name(f)), f);
        EXPECT_EQ(parse_family(family_label(f)), f);
        EXPECT_NO_THROW(validate(default_spec(f)));
    }
    EXPECT_THROW(parse_family("Weibull"), ConfigError);
}

TEST(Generators, Case4NoiselessMap) {
    RngStream rng(1);
    const Sample z = {1.0, std::numbers::e, -1.0};
    const auto d = gen_case4(z, rng, 0.0);
    EXPECT_DOUBLE_EQ(d.x[0], 1.0);
    EXPECT_NEAR(d.y[0], 0.8414709848, 1e-10);
    EXPECT_NEAR(d.x[1], 1 + std::exp(2.0), 1e-12);
    EXPECT_NEAR(d.x[1], 8.38906, 1e-5);
    EXPECT_NEAR(d.y[1], std::sin(std::numbers::e) + std::log10(std::numbers::e), 1e-12);
    EXPECT_NEAR(d.y[2], -std::sin(1.0), 1e-12);
}

TEST(Generators, Case4NoiseIsIndependentPerCoordinate) {
    RngStream rng(2);
    const Sample z(20000, 1.0);
    const auto d = gen_case4(z, rng);
    Sample ex(z.size()), ey(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        ex[i] = d.x[i] - 1.0;
        ey[i] = d.y[i] - std::sin(1.0);
    }
    EXPECT_NEAR(variance(ex), 1.0, 0.05);
    EXPECT_NEAR(variance(ey), 1.0, 0.05);
    EXPECT_LT(std::abs(oracle::pearson(ex, ey)), 0.03);
}

TEST(Generators, LogSingularityStaysFinite) {
    RngStream rng(3);
    const Sample zero = {0.0, 0.0, 0.0, 0.0};
    const auto d = gen_case4(zero, rng);
    for (double v : d.x) EXPECT_TRUE(std::isfinite(v));
    for (double v : d.y) EXPECT_TRUE(std::isfinite(v));
    const auto z = gen_case5(zero, zero, rng);
    for (double v : z) EXPECT_TRUE(std::isfinite(v));
}

TEST(Generators, Case5NoiselessCollider) {
    RngStream rng(4);
    const Sample x = {1.0, std::numbers::e, 1.0};
    const Sample y = {0.0, 0.0, std::numbers::pi / 2};
    const auto z = gen_case5(x, y, rng, 0.0);
    EXPECT_NEAR(z[0], 0.0, 1e-15);
    EXPECT_NEAR(z[1], 1.0, 1e-15);
    EXPECT_NEAR(z[2], 1.0, 1e-15);
    EXPECT_THROW(gen_case5(Sample{1.0}, Sample{1.0, 2.0}, rng), DimensionError);
}

TEST(Generators, Case6DesignShape) {
    RngStream rng(5);
    const auto d = gen_case6(50, rng);
    EXPECT_EQ(d.columns.size(), 400u);
    ASSERT_EQ(d.true_support.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(d.true_support[j], j);
    for (const auto& col : d.columns) {
        ASSERT_EQ(col.size(), 50u);
        EXPECT_LT(std::abs(mean(col)), 1e-10);
        EXPECT_NEAR(variance(col), 1.0, 1e-10);
    }
    EXPECT_EQ(d.y.size(), 50u);
}

TEST(Generators, Case6ZeroCoefficientDiagnostic) {
    RngStream rng(6);
    FilteringDesign design;
    design.coefficient = 0.0;
    design.noise_sd = 0.0;
    const auto d = gen_case6(30, rng, design);
    EXPECT_TRUE(d.true_support.empty());
    for (double v : d.y) EXPECT_NEAR(v, 148.4131591025766, 1e-9);
}

TEST(Generators, Case6Reproducible) {
    RngStream a(7), b(7);
    const auto da = gen_case6(20, a);
    const auto db = gen_case6(20, b);
    EXPECT_EQ(da.columns, db.columns);
    EXPECT_EQ(da.y, db.y);
    EXPECT_THROW(gen_case6(3, a), SizeError);
}
