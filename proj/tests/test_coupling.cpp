#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "binsim/allocators.hpp"
#include "binsim/coupling.hpp"
#include "binsim/stats.hpp"

using binsim::Algorithm;
using binsim::CoupledAlg;
using binsim::LoadVector;

TEST_CASE("increment_rank keeps the vector descending") {
    LoadVector v{3, 2, 2, 2, 1, 0};
    binsim::detail::increment_rank(v, 3);  // a load-2 slot; run head is index 1
    REQUIRE(v == LoadVector{3, 3, 2, 2, 1, 0});
    binsim::detail::increment_rank(v, 5);
    REQUIRE(v == LoadVector{3, 3, 2, 2, 1, 1});
    binsim::detail::increment_rank(v, 0);
    REQUIRE(v == LoadVector{4, 3, 2, 2, 1, 1});
}

TEST_CASE("greedy2 majorizes coupled firstdiff at every step") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto trace = binsim::couple_firstdiff_greedy2(64, 640, 6, 17, seed);
        REQUIRE(trace.steps.size() == 640);
        REQUIRE(trace.all_majorized);
        REQUIRE(trace.violations.empty());
    }
}

TEST_CASE("coupling holds at the minimum cap") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto trace = binsim::couple_firstdiff_greedy2(32, 320, 2, 3, seed);
        REQUIRE(trace.all_majorized);
    }
}

TEST_CASE("coupled vectors stay sorted and conserve balls") {
    const auto trace = binsim::couple_firstdiff_greedy2(16, 64, 4, 5, 0);
    for (const auto& step : trace.steps) {
        REQUIRE(std::is_sorted(step.dominated.begin(), step.dominated.end(),
                               std::greater<>()));
        REQUIRE(std::is_sorted(step.dominating.begin(), step.dominating.end(),
                               std::greater<>()));
        const auto total = [](const LoadVector& v) {
            return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
        };
        REQUIRE(total(step.dominated) == step.step);
        REQUIRE(total(step.dominating) == step.step);
    }
}

TEST_CASE("any bounded-probe process majorizes coupled greedy_k") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto uniform =
            binsim::couple_alg_greedyk(CoupledAlg{Algorithm::Uniform, 2}, 2, 32, 320, 9, seed);
        REQUIRE(uniform.all_majorized);
        const auto firstdiff = binsim::couple_alg_greedyk(
            CoupledAlg{Algorithm::FirstDiff, 10}, 10, 32, 320, 9, seed);
        REQUIRE(firstdiff.all_majorized);
    }
}

TEST_CASE("coupling rejects a cap above the greedy probe count") {
    REQUIRE_THROWS_AS(
        binsim::couple_alg_greedyk(CoupledAlg{Algorithm::FirstDiff, 10}, 4, 32, 32, 0),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        binsim::couple_alg_greedyk(CoupledAlg{Algorithm::Greedy, 2}, 2, 32, 32, 0),
        std::invalid_argument);
}

TEST_CASE("one-sided ks detects and accepts dominance correctly") {
    std::vector<double> base(400);
    for (std::size_t i = 0; i < base.size(); ++i)
        base[i] = static_cast<double>(i % 7);
    std::vector<double> shifted = base;
    for (double& x : shifted) x += 1.0;

    // base is dominated by shifted: no rejection
    REQUIRE_FALSE(binsim::ks_dominated_by(base, shifted).reject);
    REQUIRE_FALSE(binsim::ks_dominated_by(base, base).reject);
    // shifted is NOT dominated by base: strong rejection
    REQUIRE(binsim::ks_dominated_by(shifted, base).reject);
    REQUIRE_THROWS_AS(binsim::ks_dominated_by({}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(binsim::ks_dominated_by({1.0}, {1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("gap distribution grows stochastically over time") {
    // Gaps sampled at 4n and 16n balls across seeds; the earlier sample
    // must not stochastically exceed the later one.
    const std::uint64_t n = 256;
    std::vector<double> early;
    std::vector<double> late;
    for (std::uint32_t t = 0; t < 100; ++t) {
        binsim::SimConfig cfg;
        cfg.algorithm = Algorithm::FirstDiff;
        cfg.n = n;
        cfg.m = 16 * n;
        cfg.d = 4;
        cfg.k = 6;
        cfg.seed = 41;
        const auto stats = binsim::run_stats(cfg, t);
        for (const auto& sample : stats.gap_series) {
            if (sample.balls_placed == 4 * n) early.push_back(sample.gap);
            if (sample.balls_placed == 16 * n) late.push_back(sample.gap);
        }
    }
    REQUIRE(early.size() == 100);
    REQUIRE(late.size() == 100);
    const auto ks = binsim::ks_dominated_by(early, late, 0.01);
    INFO("D=" << ks.d_stat << " critical=" << ks.critical);
    REQUIRE_FALSE(ks.reject);
}
