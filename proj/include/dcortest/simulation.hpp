#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dcortest/distributions.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/inference.hpp"
#include "dcortest/pdcor.hpp"
#include "dcortest/pearson.hpp"
#include "dcortest/rng.hpp"

namespace dcortest {

/// One experimental cell family: a case, the distributions feeding it, and the
/// Monte-Carlo settings.
///
///   case 1  x ~ x_dist, y ~ y_dist; marginal tests on (x, y)
///   case 2  as 1 plus an independent z ~ z_dist; partial tests on (x, y | z)
///   case 3  as 2 but x += z and y += z
///   case 4  z ~ z_dist, (x, y) from the nonlinear common-cause generator
///   case 5  x ~ x_dist, y ~ y_dist, z from the collider generator
///
/// Case 6 (univariate filtering) has its own entry point, `run_filtering`.
struct ScenarioSpec {
    int case_id = 1;
    DistributionSpec x_dist = default_spec(Family::Beta);
    DistributionSpec y_dist = default_spec(Family::MixtureNormal2);
    std::optional<DistributionSpec> z_dist;
    std::vector<std::size_t> n_grid = {50, 100, 200, 500, 1000, 2000, 5000, 10000};
    std::size_t replications = 1000;
    double alpha = 0.05;
    std::size_t permutations = 500;
    std::uint64_t base_seed = 20250101;
};

enum class RateMethod { P, A, Pear };

inline constexpr std::string_view to_string(RateMethod m) noexcept {
    switch (m) {
        case RateMethod::P: return "P";
        case RateMethod::A: return "A";
        case RateMethod::Pear: return "Pear";
    }
    return "?";
}

inline constexpr std::array<RateMethod, 3> kRateMethods = {RateMethod::P, RateMethod::A,
                                                          RateMethod::Pear};

inline bool case_uses_x_dist(int case_id) { return case_id != 4; }
inline bool case_uses_z_dist(int case_id) { return case_id >= 2 && case_id <= 4; }

/// Row label for reports: "<x>-<y>", or the Z family for case 4.
inline std::string scenario_label(const ScenarioSpec& s) {
    if (s.case_id == 4) {
        return std::string(family_label(s.z_dist ? s.z_dist->family : Family::StdNormal));
    }
    return std::string(family_label(s.x_dist.family)) + "-" + std::string(family_label(s.y_dist.family));
}

inline void validate(const ScenarioSpec& s) {
    if (s.case_id < 1 || s.case_id > 5) {
        throw ConfigError("scenario: case must be 1..5 (case 6 is run through the filter command)");
    }
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ConfigError("scenario: alpha must lie in (0, 1)");
    if (s.replications < 1) throw ConfigError("scenario: replications must be >= 1");
    if (s.permutations < 1) throw ConfigError("scenario: permutations must be >= 1");
    if (s.n_grid.empty()) throw ConfigError("scenario: n grid is empty");
    for (std::size_t n : s.n_grid) {
        if (n < 4) throw ConfigError("scenario: every n must be >= 4");
    }
    if (case_uses_z_dist(s.case_id) && !s.z_dist) {
        throw ConfigError("scenario: case " + std::to_string(s.case_id) + " needs a z distribution");
    }
    try {
        if (case_uses_x_dist(s.case_id)) {
            validate(s.x_dist);
            validate(s.y_dist);
        }
        if (s.z_dist) validate(*s.z_dist);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

struct RateCell {
    RateMethod method = RateMethod::P;
    std::size_t n = 0;
    std::size_t rejections = 0;
    std::size_t replications = 0;

    double rate() const noexcept {
        return static_cast<double>(rejections) / static_cast<double>(replications);
    }
    /// Binomial Monte-Carlo standard error of `rate()`.
    double se() const noexcept {
        const double r = rate();
        return std::sqrt(r * (1.0 - r) / static_cast<double>(replications));
    }
};

struct RateReport {
    ScenarioSpec spec;
    std::string label;
    /// Ordered by n (grid order), then method (P, A, Pear).
    std::vector<RateCell> cells;

    const RateCell& cell(RateMethod m, std::size_t n) const {
        for (const auto& c : cells) {
            if (c.method == m && c.n == n) return c;
        }
        throw std::out_of_range("RateReport: no cell for requested (method, n)");
    }
};

/// Fraction of p-values strictly below alpha.
inline double rejection_rate(std::span<const double> p_values, double alpha) {
    if (p_values.empty()) return 0.0;
    const auto hits = std::count_if(p_values.begin(), p_values.end(), [&](double p) { return p < alpha; });
    return static_cast<double>(hits) / static_cast<double>(p_values.size());
}

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers. Tasks are
/// claimed dynamically; callers must write results by index so the outcome is
/// independent of scheduling. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    workers.clear();
    if (error) std::rethrow_exception(error);
}

namespace detail {

// FNV-1a; keeps scenario streams distinct and stable across platforms.
inline std::uint64_t label_key(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Data stream key for one (scenario, n, replication) cell.
inline RngStream replication_stream(const ScenarioSpec& s, std::size_t n, std::size_t rep) {
    return RngStream(s.base_seed, rep)
        .derive(detail::label_key(std::to_string(s.case_id) + ":" + scenario_label(s)))
        .derive(n);
}

struct SimulatedData {
    Sample x;
    Sample y;
    std::optional<Sample> z;
};

inline SimulatedData simulate_data(const ScenarioSpec& s, std::size_t n, RngStream& rng) {
    SimulatedData d;
    switch (s.case_id) {
        case 1:
            d.x = sample(s.x_dist, n, rng);
            d.y = sample(s.y_dist, n, rng);
            break;
        case 2:
        case 3:
            d.x = sample(s.x_dist, n, rng);
            d.y = sample(s.y_dist, n, rng);
            d.z = sample(*s.z_dist, n, rng);
            if (s.case_id == 3) {
                for (std::size_t i = 0; i < n; ++i) {
                    d.x[i] += (*d.z)[i];
                    d.y[i] += (*d.z)[i];
                }
            }
            break;
        case 4: {
            d.z = sample(*s.z_dist, n, rng);
            auto xy = gen_case4(*d.z, rng);
            d.x = std::move(xy.x);
            d.y = std::move(xy.y);
            break;
        }
        case 5:
            d.x = sample(s.x_dist, n, rng);
            d.y = sample(s.y_dist, n, rng);
            d.z = gen_case5(d.x, d.y, rng);
            break;
        default: throw ConfigError("simulate_data: unsupported case");
    }
    return d;
}

struct ReplicationPValues {
    double permutation = 1.0;
    double asymptotic = 1.0;
    double pearson = 1.0;

    double get(RateMethod m) const noexcept {
        switch (m) {
            case RateMethod::P: return permutation;
            case RateMethod::A: return asymptotic;
            case RateMethod::Pear: return pearson;
        }
        return 1.0;
    }
};

/// The three p-values for one dataset: marginal tests when `z` is empty,
/// partial tests on (x, y | z) otherwise.
inline ReplicationPValues test_all_methods(const SimulatedData& d, std::size_t permutations,
                                           RngStream perm_rng) {
    ReplicationPValues out;
    if (!d.z) {
        out.permutation = dcor_test_permutation(d.x, d.y, permutations, perm_rng).p_value;
        out.asymptotic = dcor_test_asymptotic(d.x, d.y).p_value;
        out.pearson = pearson_test(pearson_corr(d.x, d.y)).p_value;
    } else {
        const auto& z = *d.z;
        out.permutation = pdcor_test_permutation(d.x, d.y, z, permutations, perm_rng).p_value;
        out.asymptotic = pdcor_test_asymptotic(d.x, d.y, z).p_value;
        const std::span<const double> controls[] = {z};
        out.pearson = pearson_test(partial_pearson(d.x, d.y, controls)).p_value;
    }
    return out;
}

inline ReplicationPValues run_replication(const ScenarioSpec& s, std::size_t n, std::size_t rep) {
    const RngStream root = replication_stream(s, n, rep);
    RngStream data_rng = root.derive(1);
    const SimulatedData d = simulate_data(s, n, data_rng);
    return test_all_methods(d, s.permutations, root.derive(2));
}

struct RunOptions {
    std::size_t threads = 1;
};

/// Estimated rejection rates for every (method, n) cell of one scenario.
inline RateReport run_case(const ScenarioSpec& s, const RunOptions& opts = {}) {
    validate(s);
    RateReport report{s, scenario_label(s), {}};
    for (std::size_t n : s.n_grid) {
        std::vector<ReplicationPValues> pv(s.replications);
        parallel_for(s.replications, opts.threads, [&](std::size_t rep) { pv[rep] = run_replication(s, n, rep); });
        for (RateMethod m : kRateMethods) {
            RateCell cell{m, n, 0, s.replications};
            for (const auto& r : pv) {
                if (r.get(m) < s.alpha) ++cell.rejections;
            }
            report.cells.push_back(cell);
        }
    }
    return report;
}

inline std::vector<std::size_t> default_n_grid(int case_id) {
    if (case_id == 5) return {50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
    if (case_id == 6) return {100, 200, 300, 500, 1000};
    return {50, 100, 200, 500, 1000, 2000, 5000, 10000};
}

/// The default roster for a case: the 15 (x, y) pairs for cases 1, 2, 3 and 5,
/// the 8 z families for case 4. Rows follow a fixed reporting order.
inline std::vector<ScenarioSpec> case_scenarios(int case_id) {
    if (case_id < 1 || case_id > 5) throw ConfigError("case_scenarios: case must be 1..5");
    std::vector<ScenarioSpec> out;
    ScenarioSpec base;
    base.case_id = case_id;
    base.n_grid = default_n_grid(case_id);
    if (case_id == 2 || case_id == 3) base.z_dist = default_spec(Family::MixtureExpWeibull);
    if (case_id == 4) {
        for (Family f : {Family::Beta, Family::Cauchy, Family::Gamma, Family::SkewNormal, Family::VonMises,
                         Family::MixtureNormal2, Family::MixtureNormal3, Family::MixtureSkewT2}) {
            ScenarioSpec s = base;
            s.z_dist = default_spec(f);
            out.push_back(std::move(s));
        }
        return out;
    }
    for (Family fx : {Family::Beta, Family::Cauchy, Family::Gamma, Family::SkewNormal, Family::VonMises}) {
        for (Family fy : {Family::MixtureNormal2, Family::MixtureNormal3, Family::MixtureSkewT2}) {
            ScenarioSpec s = base;
            s.x_dist = default_spec(fx);
            s.y_dist = default_spec(fy);
            out.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Univariate filtering

struct FilterOptions {
    std::vector<std::size_t> n_grid = default_n_grid(6);
    std::size_t replications = 100;
    double alpha = 0.05;
    std::size_t permutations = 500;
    std::uint64_t base_seed = 20250101;
    std::size_t threads = 1;
    FilteringDesign design;
};

/// Per-n mean selection counts; T = true support selected, F = false
/// selections, and pairwise overlaps of the selected sets.
struct FilterRow {
    std::size_t n = 0;
    std::size_t replications = 0;
    double p_true = 0, p_false = 0;
    double a_true = 0, a_false = 0;
    double pear_true = 0, pear_false = 0;
    double p_and_a = 0, p_and_pear = 0, a_and_pear = 0;
};

struct FilterReport {
    std::size_t total_predictors = 0;
    std::size_t true_predictors = 0;
    std::vector<FilterRow> rows;
};

struct FilterCounts {
    std::size_t p_true = 0, p_false = 0, a_true = 0, a_false = 0, pear_true = 0, pear_false = 0;
    std::size_t p_and_a = 0, p_and_pear = 0, a_and_pear = 0;
};

/// Selection counts for one replication of the filtering design.
inline FilterCounts run_filter_replication(const FilterOptions& opt, std::size_t n, std::size_t rep) {
    const RngStream root = RngStream(opt.base_seed, rep).derive(detail::label_key("filter")).derive(n);
    RngStream data_rng = root.derive(1);
    const FilteringData data = gen_case6(n, data_rng, opt.design);
    std::vector<bool> is_true(data.columns.size(), false);
    for (std::size_t j : data.true_support) is_true[j] = true;

    FilterCounts c;
    const RngStream perm_root = root.derive(2);
    for (std::size_t j = 0; j < data.columns.size(); ++j) {
        const auto& col = data.columns[j];
        const bool sel_p =
            dcor_test_permutation(col, data.y, opt.permutations, perm_root.derive(j)).p_value < opt.alpha;
        const bool sel_a = dcor_test_asymptotic(col, data.y).p_value < opt.alpha;
        const bool sel_pear = pearson_test(pearson_corr(col, data.y)).p_value < opt.alpha;
        (is_true[j] ? c.p_true : c.p_false) += sel_p;
        (is_true[j] ? c.a_true : c.a_false) += sel_a;
        (is_true[j] ? c.pear_true : c.pear_false) += sel_pear;
        c.p_and_a += sel_p && sel_a;
        c.p_and_pear += sel_p && sel_pear;
        c.a_and_pear += sel_a && sel_pear;
    }
    return c;
}

inline FilterReport run_filtering(const FilterOptions& opt) {
    if (!(opt.alpha > 0.0 && opt.alpha <= 1.0)) throw ConfigError("filter: alpha must lie in (0, 1]");
    if (opt.replications < 1) throw ConfigError("filter: replications must be >= 1");
    if (opt.permutations < 1) throw ConfigError("filter: permutations must be >= 1");
    if (opt.n_grid.empty()) throw ConfigError("filter: n grid is empty");
    for (std::size_t n : opt.n_grid) {
        if (n < 10) throw ConfigError("filter: every n must be >= 10");
    }
    FilterReport report;
    report.total_predictors = opt.design.total_columns();
    report.true_predictors = opt.design.coefficient != 0.0 ? opt.design.active_columns : 0;
    for (std::size_t n : opt.n_grid) {
        std::vector<FilterCounts> counts(opt.replications);
        parallel_for(opt.replications, opt.threads,
                     [&](std::size_t rep) { counts[rep] = run_filter_replication(opt, n, rep); });
        FilterRow row;
        row.n = n;
        row.replications = opt.replications;
        for (const auto& c : counts) {
            row.p_true += static_cast<double>(c.p_true);
            row.p_false += static_cast<double>(c.p_false);
            row.a_true += static_cast<double>(c.a_true);
            row.a_false += static_cast<double>(c.a_false);
            row.pear_true += static_cast<double>(c.pear_true);
            row.pear_false += static_cast<double>(c.pear_false);
            row.p_and_a += static_cast<double>(c.p_and_a);
            row.p_and_pear += static_cast<double>(c.p_and_pear);
            row.a_and_pear += static_cast<double>(c.a_and_pear);
        }
        const auto reps = static_cast<double>(opt.replications);
        for (double* v : {&row.p_true, &row.p_false, &row.a_true, &row.a_false, &row.pear_true,
                          &row.pear_false, &row.p_and_a, &row.p_and_pear, &row.a_and_pear}) {
            *v /= reps;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace dcortest
