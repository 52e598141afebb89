#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Load vectors, placement records and the summary statistics shared by the
// allocators and the analysis tooling.

namespace binsim {

inline constexpr const char* version = "0.1.0";

// One entry per bin; loads are ball counts. Totals are capped well below
// 2^40 by config validation so sums and prefix sums stay exact in uint64.
using LoadVector = std::vector<std::uint64_t>;

// Outcome taxonomy of a probe sequence, classified against the first
// observed load: a zero-load first probe, all probes equal, or the first
// differing probe being lower respectively higher than the first.
enum class PlacementCase : std::uint8_t {
    ZeroBin,
    AllEqual,
    HighThenLow,
    LowThenHigh,
};

inline const char* to_string(PlacementCase c) {
    switch (c) {
        case PlacementCase::ZeroBin: return "zero_bin";
        case PlacementCase::AllEqual: return "all_equal";
        case PlacementCase::HighThenLow: return "high_then_low";
        case PlacementCase::LowThenHigh: return "low_then_high";
    }
    return "unknown";
}

struct PlacementRecord {
    std::uint64_t ball_index = 0;
    std::uint64_t chosen_bin = 0;
    std::uint32_t probes_used = 0;  // >= 1
    PlacementCase placement_case = PlacementCase::AllEqual;
};

struct GapSample {
    std::uint64_t balls_placed = 0;
    double gap = 0.0;
};

struct RunStats {
    std::uint64_t max_load = 0;
    std::vector<GapSample> gap_series;  // sampled every cadence balls
    std::uint64_t total_probes = 0;
    std::map<std::uint32_t, std::uint64_t> probe_histogram;  // probes -> balls
    std::vector<double> level_fractions;  // index i: fraction of bins with load >= i
};

// Max load minus average load. The numerator max*n - sum is formed in
// 128-bit integer arithmetic, so the single division is the only rounding
// step: relative error <= 1e-12 whenever max*n < 2^52, which covers every
// supported configuration.
inline double gap(const LoadVector& loads) {
    if (loads.empty()) throw std::invalid_argument("gap: empty load vector");
    std::uint64_t max = 0;
    unsigned __int128 sum = 0;
    for (std::uint64_t v : loads) {
        max = std::max(max, v);
        sum += v;
    }
    const unsigned __int128 num =
        static_cast<unsigned __int128>(max) * loads.size() - sum;
    return static_cast<double>(num) / static_cast<double>(loads.size());
}

// Fraction of bins with load >= level; level 0 is 1 by convention.
inline double fraction_at_least(const LoadVector& loads, std::uint64_t level) {
    if (loads.empty()) throw std::invalid_argument("fraction_at_least: empty load vector");
    if (level == 0) return 1.0;
    std::uint64_t count = 0;
    for (std::uint64_t v : loads)
        if (v >= level) ++count;
    return static_cast<double>(count) / static_cast<double>(loads.size());
}

// v_i = fraction of bins with load >= i for i = 0..max_load.
inline std::vector<double> level_fractions(const LoadVector& loads) {
    if (loads.empty()) throw std::invalid_argument("level_fractions: empty load vector");
    const std::uint64_t max = *std::max_element(loads.begin(), loads.end());
    std::vector<std::uint64_t> at_level(max + 1, 0);
    for (std::uint64_t v : loads) at_level[v] += 1;
    std::vector<double> out(max + 1, 0.0);
    std::uint64_t ge = 0;
    for (std::uint64_t i = max + 1; i-- > 0;) {
        ge += at_level[i];
        out[i] = static_cast<double>(ge) / static_cast<double>(loads.size());
    }
    return out;
}

// Prefix-sum dominance of the descending rearrangements: u majorizes v when
// every prefix sum of sorted(u) is >= the matching prefix sum of sorted(v).
// Equal totals are not required.
inline bool majorizes(const LoadVector& u, const LoadVector& v) {
    if (u.size() != v.size())
        throw std::invalid_argument("majorizes: length mismatch");
    LoadVector su = u;
    LoadVector sv = v;
    std::sort(su.begin(), su.end(), std::greater<>());
    std::sort(sv.begin(), sv.end(), std::greater<>());
    std::uint64_t pu = 0;
    std::uint64_t pv = 0;
    for (std::size_t i = 0; i < su.size(); ++i) {
        pu += su[i];
        pv += sv[i];
        if (pu < pv) return false;
    }
    return true;
}

}  // namespace binsim
