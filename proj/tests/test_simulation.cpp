#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "dcortest/simulation.hpp"
#include "oracles.hpp"

using namespace dcortest;

namespace {

ScenarioSpec small_case(int id, std::size_t reps = 20, std::size_t perms = 49) {
    ScenarioSpec s = case_scenarios(id).front();
    s.n_grid = {30, 60};
    s.replications = reps;
    s.permutations = perms;
    return s;
}

FilterOptions small_filter() {
    FilterOptions o;
    o.n_grid = {30};
    o.replications = 3;
    o.permutations = 49;
    o.design.columns_per_family = 5;
    return o;
}

}  // namespace

TEST(Rates, IndicatorAverage) {
    const std::vector<double> p = {0.04, 0.06};
    EXPECT_DOUBLE_EQ(rejection_rate(p, 0.05), 0.5);
    const std::vector<double> edge = {0.05};
    EXPECT_DOUBLE_EQ(rejection_rate(edge, 0.05), 0.0);
    const RateCell c{RateMethod::A, 100, 7, 40};
    EXPECT_DOUBLE_EQ(c.rate(), 0.175);
    EXPECT_DOUBLE_EQ(c.se(), std::sqrt(0.175 * 0.825 / 40));
}

TEST(Rates, ForcedDependenceRejectsEverywhere) {
    RngStream rng(1);
    SimulatedData d;
    d.x = sample(default_spec(Family::Beta), 80, rng);
    d.y = d.x;
    const auto m = test_all_methods(d, 99, RngStream(2));
    for (RateMethod k : kRateMethods) EXPECT_LT(m.get(k), 0.05);
    d.z = sample(default_spec(Family::MixtureExpWeibull), 80, rng);
    const auto pm = test_all_methods(d, 99, RngStream(3));
    for (RateMethod k : kRateMethods) EXPECT_LT(pm.get(k), 0.05);
}

TEST(Scenarios, RosterShape) {
    for (int c : {1, 2, 3, 5}) {
        const auto r = case_scenarios(c);
        EXPECT_EQ(r.size(), 15u);
        std::set<std::string> labels;
        for (const auto& s : r) labels.insert(scenario_label(s));
        EXPECT_EQ(labels.size(), 15u);
        EXPECT_EQ(scenario_label(r.front()), "Be-M2N");
        EXPECT_EQ(r.front().z_dist.has_value(), c == 2 || c == 3);
    }
    const auto r4 = case_scenarios(4);
    EXPECT_EQ(r4.size(), 8u);
    EXPECT_EQ(scenario_label(r4[2]), "Ga");
    EXPECT_EQ(default_n_grid(5).size(), 10u);
    EXPECT_THROW(case_scenarios(7), ConfigError);
}

TEST(Scenarios, Validation) {
    ScenarioSpec s = small_case(1);
    EXPECT_NO_THROW(validate(s));
    for (double a : {0.0, 1.0, -0.1}) {
        ScenarioSpec b = s;
        b.alpha = a;
        EXPECT_THROW(validate(b), ConfigError);
    }
    ScenarioSpec b = s;
    b.n_grid = {3};
    EXPECT_THROW(validate(b), ConfigError);
    b = s;
    b.replications = 0;
    EXPECT_THROW(validate(b), ConfigError);
    b = s;
    b.case_id = 9;
    EXPECT_THROW(validate(b), ConfigError);
    b = small_case(2);
    b.z_dist.reset();
    EXPECT_THROW(validate(b), ConfigError);
    b = s;
    b.x_dist.params = {-1.0, 2.0};
    EXPECT_THROW(validate(b), ConfigError);
}

TEST(Scenarios, CaseThreeAddsZToBoth) {
    ScenarioSpec two = small_case(2), three = small_case(3);
    RngStream a(5), b(5);
    const auto d2 = simulate_data(two, 40, a);
    const auto d3 = simulate_data(three, 40, b);
    ASSERT_TRUE(d2.z && d3.z);
    EXPECT_EQ(*d2.z, *d3.z);
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_DOUBLE_EQ(d3.x[i], d2.x[i] + (*d2.z)[i]);
        EXPECT_DOUBLE_EQ(d3.y[i], d2.y[i] + (*d2.z)[i]);
    }
}

TEST(Scenarios, CaseFiveColliderResidual) {
    ScenarioSpec s = small_case(5);
    RngStream rng(6);
    const auto d = simulate_data(s, 5000, rng);
    Sample eta(5000);
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = (*d.z)[i] - std::log(std::abs(d.x[i])) - std::sin(d.y[i]);
    double m = 0, v = 0;
    for (double e : eta) m += e / 5000;
    for (double e : eta) v += (e - m) * (e - m) / 4999;
    EXPECT_NEAR(m, 0.0, 0.05);
    EXPECT_NEAR(v, 1.0, 0.06);
}

TEST(Scenarios, CaseFourDerivesXYFromZ) {
    ScenarioSpec s = case_scenarios(4)[2];
    RngStream rng(7);
    const auto d = simulate_data(s, 3000, rng);
    ASSERT_TRUE(d.z);
    EXPECT_TRUE(std::all_of(d.z->begin(), d.z->end(), [](double v) { return v > 0; }));  // Gamma support
    Sample rx(3000);
    for (std::size_t i = 0; i < rx.size(); ++i) rx[i] = d.x[i] - std::log((*d.z)[i]) - (*d.z)[i] * (*d.z)[i];
    double v = 0;
    for (double e : rx) v += e * e / 3000;
    EXPECT_NEAR(v, 1.0, 0.1);
}

TEST(RunCase, ReproducibleAndThreadIndependent) {
    for (int c : {1, 3, 4, 5}) {
        const ScenarioSpec s = small_case(c);
        const auto a = run_case(s, {1});
        const auto b = run_case(s, {1});
        const auto t = run_case(s, {4});
        ASSERT_EQ(a.cells.size(), 6u);
        for (std::size_t i = 0; i < a.cells.size(); ++i) {
            EXPECT_EQ(a.cells[i].rejections, b.cells[i].rejections);
            EXPECT_EQ(a.cells[i].rejections, t.cells[i].rejections);
        }
    }
}

TEST(RunCase, SingleReplicationRatesAreBinary) {
    const auto r = run_case(small_case(1, 1));
    for (const auto& c : r.cells) {
        EXPECT_TRUE(c.rate() == 0.0 || c.rate() == 1.0);
        EXPECT_EQ(c.replications, 1u);
    }
}

TEST(RunCase, SeedChangesOutcomeStreams) {
    ScenarioSpec s = small_case(1, 1);
    RngStream a = replication_stream(s, 30, 0), b = replication_stream(s, 30, 1);
    EXPECT_NE(a.engine()(), b.engine()());
    s.base_seed += 1;
    RngStream c = replication_stream(s, 30, 0);
    RngStream a2 = replication_stream(small_case(1, 1), 30, 0);
    EXPECT_NE(c.engine()(), a2.engine()());
}

TEST(RunCase, NominalLevelUnderIndependence) {
    ScenarioSpec s = case_scenarios(1).front();
    s.n_grid = {200};
    s.replications = 500;
    const auto r = run_case(s, {2});
    for (RateMethod m : kRateMethods) {
        const auto& c = r.cell(m, 200);
        const double se = std::sqrt(0.05 * 0.95 / 500);
        EXPECT_NEAR(c.rate(), 0.05, 4 * se) << to_string(m);
    }
}

TEST(Filter, AlphaOneSelectsEveryColumnWithPBelowOne) {
    FilterOptions o = small_filter();
    o.alpha = 1.0;
    const auto rep = run_filtering(o);
    ASSERT_EQ(rep.rows.size(), 1u);
    const auto& row = rep.rows[0];
    EXPECT_EQ(rep.total_predictors, 40u);
    // Pearson p < 1 almost surely
    EXPECT_DOUBLE_EQ(row.pear_true, 10.0);
    EXPECT_DOUBLE_EQ(row.pear_false, 30.0);
    // the asymptotic p is exactly 1 when S = n r + 1 <= 0; count those directly
    double a_true = 0, a_false = 0;
    for (std::size_t r = 0; r < o.replications; ++r) {
        const RngStream root = RngStream(o.base_seed, r).derive(detail::label_key("filter")).derive(30);
        RngStream data_rng = root.derive(1);
        const auto d = gen_case6(30, data_rng, o.design);
        for (std::size_t j = 0; j < d.columns.size(); ++j) {
            if (30 * oracle::dcor_unbiased(d.columns[j], d.y) + 1 > 0) (j < 10 ? a_true : a_false) += 1;
        }
    }
    EXPECT_DOUBLE_EQ(row.a_true, a_true / o.replications);
    EXPECT_DOUBLE_EQ(row.a_false, a_false / o.replications);
    // a permutation p equals 1 only when no relabeling falls below the observed
    // statistic, roughly 1 column in R + 1
    EXPECT_GE(row.p_true + row.p_false, 36.0);
}

TEST(Filter, AlphaBelowPermutationFloor) {
    FilterOptions o = small_filter();
    o.alpha = 0.5 / (o.permutations + 1);
    const auto row = run_filtering(o).rows[0];
    EXPECT_EQ(row.p_true, 0.0);
    EXPECT_EQ(row.p_false, 0.0);
    EXPECT_EQ(row.p_and_a, 0.0);
}

TEST(Filter, CountInvariants) {
    FilterOptions o = small_filter();
    o.n_grid = {30, 80};
    const auto rep = run_filtering(o);
    for (const auto& r : rep.rows) {
        for (double t : {r.p_true, r.a_true, r.pear_true}) {
            EXPECT_GE(t, 0.0);
            EXPECT_LE(t, 10.0);
        }
        for (double f : {r.p_false, r.a_false, r.pear_false}) {
            EXPECT_GE(f, 0.0);
            EXPECT_LE(f, 30.0);
        }
        EXPECT_LE(r.p_and_a, std::min(r.p_true + r.p_false, r.a_true + r.a_false) + 1e-12);
        EXPECT_LE(r.p_and_pear, std::min(r.p_true + r.p_false, r.pear_true + r.pear_false) + 1e-12);
        EXPECT_LE(r.a_and_pear, std::min(r.a_true + r.a_false, r.pear_true + r.pear_false) + 1e-12);
    }
}

TEST(Filter, ThreadIndependentAndValidated) {
    FilterOptions o = small_filter();
    const auto a = run_filtering(o);
    o.threads = 3;
    const auto b = run_filtering(o);
    EXPECT_EQ(a.rows[0].p_true, b.rows[0].p_true);
    EXPECT_EQ(a.rows[0].a_false, b.rows[0].a_false);
    EXPECT_EQ(a.rows[0].p_and_pear, b.rows[0].p_and_pear);
    o.n_grid = {9};
    EXPECT_THROW(run_filtering(o), ConfigError);
    o.n_grid = {30};
    o.alpha = 0.0;
    EXPECT_THROW(run_filtering(o), ConfigError);
}

TEST(Parallel, PropagatesFirstException) {
    std::vector<int> hit(100, 0);
    EXPECT_THROW(parallel_for(100, 4,
                              [&](std::size_t i) {
                                  if (i == 37) throw std::runtime_error("boom");
                                  hit[i] = 1;
                              }),
                 std::runtime_error);
    std::vector<int> all(57, 0);
    parallel_for(57, 8, [&](std::size_t i) { all[i] += 1; });
    for (int v : all) EXPECT_EQ(v, 1);
}
