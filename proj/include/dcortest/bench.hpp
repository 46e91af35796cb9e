#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcortest/distributions.hpp"
#include "dcortest/inference.hpp"
#include "dcortest/io.hpp"
#include "dcortest/pdcor.hpp"

namespace dcortest {

struct BenchRow {
    std::size_t n = 0;
    std::size_t permutations = 0;
    double dcor_seconds = 0;        // one bias-corrected dcor, fast path
    double pdcor_seconds = 0;       // one partial dcor
    double dcor_test_seconds = 0;   // permutation dcor test
    double pdcor_test_seconds = 0;  // permutation pdcor test
};

namespace detail {

/// Mean wall time per call, repeating until `min_total` seconds have elapsed.
/// `fn` receives the call index.
template <typename Fn>
double time_per_call(Fn&& fn, double min_total) {
    using clock = std::chrono::steady_clock;
    std::size_t calls = 0;
    const auto start = clock::now();
    double elapsed = 0.0;
    do {
        fn(calls);
        ++calls;
        elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < min_total);
    return elapsed / static_cast<double>(calls);
}

}  // namespace detail

/// Distinct samples cycled through by the timing loops. Re-running one fixed
/// input lets the branch predictor learn its comparison pattern at small n.
inline constexpr std::size_t kBenchPool = 8;

/// Times the four kernels on independent N(0,1) samples of size n.
inline BenchRow bench_one(std::size_t n, std::size_t permutations, std::uint64_t seed,
                          double min_seconds = 0.2) {
    if (n < 4) throw ConfigError("bench: n must be >= 4");
    RngStream rng(seed, n);
    std::vector<Sample> xs, ys, zs;
    for (std::size_t k = 0; k < kBenchPool; ++k) {
        xs.push_back(standard_normal_sample(n, rng));
        ys.push_back(standard_normal_sample(n, rng));
        zs.push_back(standard_normal_sample(n, rng));
    }
    volatile double sink = 0.0;
    BenchRow row{n, permutations, 0, 0, 0, 0};
    row.dcor_seconds = detail::time_per_call(
        [&](std::size_t c) {
            const std::size_t k = c % kBenchPool;
            sink = sink + dcor_bias_corrected(xs[k], ys[k]).value;
        },
        min_seconds);
    row.pdcor_seconds = detail::time_per_call(
        [&](std::size_t c) {
            const std::size_t k = c % kBenchPool;
            sink = sink + pdcor(xs[k], ys[k], zs[k]).value;
        },
        min_seconds);
    row.dcor_test_seconds = detail::time_per_call(
        [&](std::size_t c) {
            const std::size_t k = c % kBenchPool;
            sink = sink + dcor_test_permutation(xs[k], ys[k], permutations, RngStream(seed, 1)).p_value;
        },
        min_seconds);
    row.pdcor_test_seconds = detail::time_per_call(
        [&](std::size_t c) {
            const std::size_t k = c % kBenchPool;
            sink = sink + pdcor_test_permutation(xs[k], ys[k], zs[k], permutations, RngStream(seed, 2)).p_value;
        },
        min_seconds);
    return row;
}

inline std::vector<BenchRow> run_bench(const std::vector<std::size_t>& n_grid, std::size_t permutations,
                                       std::uint64_t seed, double min_seconds = 0.2) {
    std::vector<BenchRow> rows;
    for (std::size_t n : n_grid) rows.push_back(bench_one(n, permutations, seed, min_seconds));
    return rows;
}

inline constexpr const char* kBenchHeader =
    "n,permutations,dcor_seconds,pdcor_seconds,dcor_test_seconds,pdcor_test_seconds";

inline void write_bench(std::ostream& out, const std::vector<BenchRow>& rows,
                        io::OutputFormat fmt = io::OutputFormat::csv) {
    if (fmt == io::OutputFormat::csv) {
        out << kBenchHeader << '\n';
        for (const auto& r : rows) {
            out << r.n << ',' << r.permutations << ',' << io::format_number(r.dcor_seconds, 6) << ','
                << io::format_number(r.pdcor_seconds, 6) << ',' << io::format_number(r.dcor_test_seconds, 6)
                << ',' << io::format_number(r.pdcor_test_seconds, 6) << '\n';
        }
        return;
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"n", r.n},
                     {"permutations", r.permutations},
                     {"dcor_seconds", r.dcor_seconds},
                     {"pdcor_seconds", r.pdcor_seconds},
                     {"dcor_test_seconds", r.dcor_test_seconds},
                     {"pdcor_test_seconds", r.pdcor_test_seconds}});
    }
    out << j.dump(2) << '\n';
}

}  // namespace dcortest
