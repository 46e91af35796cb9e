#pragma once

#include <cstdint>
#include <string_view>

namespace dcortest {

enum class TestMethod { permutation, asymptotic, pearson };

inline constexpr std::string_view to_string(TestMethod m) noexcept {
    switch (m) {
        case TestMethod::permutation: return "permutation";
        case TestMethod::asymptotic: return "asymptotic";
        case TestMethod::pearson: return "pearson";
    }
    return "unknown";
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    TestMethod method = TestMethod::permutation;
    std::uint64_t n_permutations = 0;
    std::uint64_t seed = 0;
};

}  // namespace dcortest
