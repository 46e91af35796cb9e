// Command-line front end: statistics and tests on CSV data, Monte-Carlo
// scenario runs, the univariate-filtering study, and timing benchmarks.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcortest.hpp"

namespace {

using namespace dcortest;

struct Columns {
    std::string input;
    std::string x;
    std::string y;
    std::vector<std::string> z;
};

struct Loaded {
    Sample x;
    Sample y;
    std::vector<Sample> z;
};

Loaded load(const Columns& c) {
    const auto table = io::read_csv_file(c.input);
    Loaded l{table.column(c.x), table.column(c.y), {}};
    for (const auto& name : c.z) l.z.push_back(table.column(name));
    return l;
}

std::vector<std::span<const double>> spans(const std::vector<Sample>& v) {
    return {v.begin(), v.end()};
}

void degenerate_warning(bool flag) {
    if (flag) std::cerr << "warning: degenerate sample (constant column); statistic reported as 0\n";
}

int cmd_stat(const Columns& cols, const std::string& kind) {
    const Loaded d = load(cols);
    double value = 0.0;
    if (kind == "pearson") {
        const auto e = pearson_corr(d.x, d.y);
        degenerate_warning(e.degenerate);
        value = e.r;
    } else if (kind == "partial_pearson") {
        if (d.z.empty()) throw ConfigError("stat: partial_pearson needs at least one --z column");
        value = partial_pearson(d.x, d.y, spans(d.z)).r;
    } else if (kind == "dcor_biased") {
        const auto e = dcor_biased_sq(d.x, d.y);
        degenerate_warning(e.degenerate);
        value = e.value;
    } else if (kind == "dcor_bc") {
        const auto e = dcor_bias_corrected(d.x, d.y);
        degenerate_warning(e.degenerate);
        value = e.value;
    } else if (kind == "pdcor") {
        if (d.z.size() != 1) throw ConfigError("stat: pdcor needs exactly one --z column");
        const auto e = pdcor(d.x, d.y, d.z[0]);
        degenerate_warning(e.degenerate);
        value = e.value;
    } else {
        throw ConfigError("stat: unknown kind '" + kind + "'");
    }
    std::cout << io::format_number(value, 10) << '\n';
    return 0;
}

int cmd_test(const Columns& cols, const std::string& method, std::size_t perms, std::uint64_t seed,
             io::OutputFormat fmt) {
    const Loaded d = load(cols);
    if (d.z.size() > 1 && method != "pearson") {
        throw ConfigError("test: distance-based tests condition on a single --z column");
    }
    TestResult r;
    if (method == "perm") {
        r = d.z.empty() ? dcor_test_permutation(d.x, d.y, perms, RngStream(seed))
                        : pdcor_test_permutation(d.x, d.y, d.z[0], perms, RngStream(seed));
    } else if (method == "asymp") {
        r = d.z.empty() ? dcor_test_asymptotic(d.x, d.y) : pdcor_test_asymptotic(d.x, d.y, d.z[0]);
    } else if (method == "pearson") {
        r = pearson_test(d.z.empty() ? pearson_corr(d.x, d.y) : partial_pearson(d.x, d.y, spans(d.z)));
    } else {
        throw ConfigError("test: unknown method '" + method + "'");
    }
    if (fmt == io::OutputFormat::json) {
        std::cout << nlohmann::json{{"method", std::string(to_string(r.method))},
                                    {"statistic", r.statistic},
                                    {"p_value", r.p_value},
                                    {"permutations", r.n_permutations},
                                    {"seed", r.seed}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << "method,statistic,p_value,permutations,seed\n"
                  << to_string(r.method) << ',' << io::format_number(r.statistic, 10) << ','
                  << io::format_number(r.p_value, 10) << ',' << r.n_permutations << ',' << r.seed << '\n';
    }
    return 0;
}

// Writes to `path`, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output '" + path + "'");
    write(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distance-correlation and Pearson (conditional) independence testing"};
    app.require_subcommand(1);

    Columns cols;
    std::string kind = "dcor_bc";
    std::string method = "perm";
    std::size_t perms = 500;
    std::uint64_t seed = 20250101;
    std::string format = "csv";
    std::string out_path;
    std::string config_path;
    std::optional<int> case_flag;
    std::vector<std::size_t> n_flag;
    std::optional<std::size_t> reps_flag, perms_flag, threads_flag;
    std::optional<double> alpha_flag;
    std::optional<std::uint64_t> seed_flag;
    std::vector<std::string> scenario_flag;

    const auto add_columns = [&](CLI::App* sub) {
        sub->add_option("--input,-i", cols.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        sub->add_option("--x", cols.x, "first column")->required();
        sub->add_option("--y", cols.y, "second column")->required();
        sub->add_option("--z", cols.z, "conditioning column(s)");
    };
    const auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--n", n_flag, "sample sizes")->delimiter(',');
        sub->add_option("--reps", reps_flag, "replications per cell");
        sub->add_option("--alpha", alpha_flag, "significance level");
        sub->add_option("--perms", perms_flag, "permutations per test");
        sub->add_option("--seed", seed_flag, "base seed");
        sub->add_option("--threads", threads_flag, "worker threads (output does not depend on it)");
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out_path, "output file (default stdout)");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };

    auto* stat = app.add_subcommand("stat", "compute one statistic on a data file");
    add_columns(stat);
    stat->add_option("--kind", kind, "pearson | partial_pearson | dcor_biased | dcor_bc | pdcor")
        ->check(CLI::IsMember({"pearson", "partial_pearson", "dcor_biased", "dcor_bc", "pdcor"}));

    auto* test = app.add_subcommand("test", "run one (conditional) independence test on a data file");
    add_columns(test);
    test->add_option("--method", method, "perm | asymp | pearson")->check(CLI::IsMember({"perm", "asymp", "pearson"}));
    test->add_option("--perms", perms, "permutations");
    test->add_option("--seed", seed, "permutation seed");
    test->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo rejection rates for cases 1-5 (case 6 runs the filtering study)");
    simulate->add_option("--case", case_flag, "case 1..6");
    simulate->add_option("--scenario", scenario_flag, "restrict to scenario labels, e.g. Be-M2N (case 4: Ga)");
    add_run_flags(simulate);

    auto* filter = app.add_subcommand("filter", "univariate filtering study (case 6)");
    add_run_flags(filter);

    auto* bench = app.add_subcommand("bench", "timing of the statistics and permutation tests");
    std::vector<std::size_t> bench_n = {50, 100, 200, 500, 1000, 2000, 5000, 10000};
    std::size_t bench_perms = 499;
    std::uint64_t bench_seed = 1;
    double bench_min = 0.2;
    bench->add_option("--n", bench_n, "sample sizes")->delimiter(',');
    bench->add_option("--perms", bench_perms, "permutations");
    bench->add_option("--seed", bench_seed, "seed");
    bench->add_option("--min-time", bench_min, "minimum seconds per timed kernel");
    bench->add_option("--out,-o", out_path, "output file (default stdout)");
    bench->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const auto collect_flags = [&] {
        io::SimulationConfig c;
        c.case_id = case_flag;
        c.scenarios = scenario_flag;
        if (!n_flag.empty()) c.n_grid = n_flag;
        c.replications = reps_flag;
        c.alpha = alpha_flag;
        c.permutations = perms_flag;
        c.base_seed = seed_flag;
        c.threads = threads_flag;
        io::SimulationConfig base;
        if (!config_path.empty()) base = io::read_config_file(config_path);
        return io::merge(base, c);
    };

    try {
        const auto fmt = io::parse_format(format);
        if (*stat) return cmd_stat(cols, kind);
        if (*test) return cmd_test(cols, method, perms, seed, fmt);
        if (*simulate) {
            const auto cfg = collect_flags();
            if (cfg.case_id == 6) {
                const auto report = run_filtering(io::filter_options_from_config(cfg));
                emit(out_path, [&](std::ostream& o) { io::write_filter_report(o, report, fmt); });
                return 0;
            }
            const auto scenarios = io::scenarios_from_config(cfg);
            RunOptions opts;
            opts.threads = cfg.threads.value_or(1);
            std::vector<RateReport> reports;
            for (const auto& s : scenarios) reports.push_back(run_case(s, opts));
            emit(out_path, [&](std::ostream& o) { io::write_rate_reports(o, reports, fmt); });
            return 0;
        }
        if (*filter) {
            const auto cfg = collect_flags();
            const auto report = run_filtering(io::filter_options_from_config(cfg));
            emit(out_path, [&](std::ostream& o) { io::write_filter_report(o, report, fmt); });
            return 0;
        }
        if (*bench) {
            const auto rows = run_bench(bench_n, bench_perms, bench_seed, bench_min);
            emit(out_path, [&](std::ostream& o) { write_bench(o, rows, fmt); });
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
