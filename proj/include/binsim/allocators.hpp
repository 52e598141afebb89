#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "binsim/core.hpp"
#include "binsim/probe.hpp"

// Placement policies. Each place_* op draws probes (with replacement) from
// the given stream, increments the chosen bin and returns the record for
// that ball. Streams are taken as a template parameter so tests can script
// exact probe sequences.

namespace binsim {

enum class Algorithm : std::uint8_t { Uniform, Greedy, Left, FirstDiff };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Uniform: return "uniform";
        case Algorithm::Greedy: return "greedy";
        case Algorithm::Left: return "left";
        case Algorithm::FirstDiff: return "firstdiff";
    }
    return "unknown";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "uniform") return Algorithm::Uniform;
    if (s == "greedy") return Algorithm::Greedy;
    if (s == "left") return Algorithm::Left;
    if (s == "firstdiff") return Algorithm::FirstDiff;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct SimConfig {
    Algorithm algorithm = Algorithm::FirstDiff;
    std::uint64_t n = 0;  // bins
    std::uint64_t m = 0;  // balls
    std::uint32_t d = 1;  // probes per ball (Greedy/Left); nominal budget for FirstDiff
    std::uint32_t k = 2;  // probe cap for FirstDiff, typically theoretical_k(d, regime)
    std::uint64_t seed = 0;
    std::uint64_t gap_cadence = 0;  // balls between gap samples; 0 means every n
};

// Loads stay exact in uint64 and n*max_load stays below 2^52 for the gap
// arithmetic; a total above 2^40 would also make single runs unreasonably
// large, so reject it outright.
inline constexpr std::uint64_t max_balls = 1ull << 40;

inline void validate(const SimConfig& cfg) {
    if (cfg.n == 0) throw std::invalid_argument("config: n must be positive");
    if (cfg.m > max_balls) throw std::invalid_argument("config: m exceeds 2^40 cap");
    if (cfg.d == 0) throw std::invalid_argument("config: d must be positive");
    switch (cfg.algorithm) {
        case Algorithm::FirstDiff:
            if (cfg.k < 2) throw std::invalid_argument("config: firstdiff requires k >= 2");
            break;
        case Algorithm::Left:
            if (cfg.n % cfg.d != 0)
                throw std::invalid_argument("config: left requires d to divide n");
            break;
        case Algorithm::Uniform:
            if (cfg.d != 1) throw std::invalid_argument("config: uniform requires d = 1");
            break;
        case Algorithm::Greedy:
            break;
    }
}

namespace detail {

// Case labels are always relative to the first observed load: a zero first
// probe, all equal, or first difference downwards/upwards.
inline PlacementCase classify(std::uint64_t first_load, bool saw_difference,
                              bool difference_was_lower) {
    if (first_load == 0) return PlacementCase::ZeroBin;
    if (!saw_difference) return PlacementCase::AllEqual;
    return difference_was_lower ? PlacementCase::HighThenLow
                                : PlacementCase::LowThenHigh;
}

}  // namespace detail

// Probe until a bin's load differs from the first probe's load, up to k
// probes total. A zero-load first probe places immediately; a first
// difference places in the least loaded probed bin (ties between probed
// bins holding the minimum go to the most recently probed one); k equal
// loads place in the last probed bin.
template <typename Stream>
PlacementRecord place_firstdiff(LoadVector& loads, Stream& stream, std::uint32_t k,
                                std::uint64_t ball_index = 0) {
    if (k < 2) throw std::invalid_argument("place_firstdiff: k must be >= 2");
    const std::uint64_t n = loads.size();
    const std::uint64_t first_bin = stream.next_below(n);
    const std::uint64_t first_load = loads[first_bin];
    if (first_load == 0) {
        loads[first_bin] += 1;
        return {ball_index, first_bin, 1, PlacementCase::ZeroBin};
    }
    std::uint64_t prev_bin = first_bin;
    for (std::uint32_t probe = 2; probe <= k; ++probe) {
        const std::uint64_t bin = stream.next_below(n);
        const std::uint64_t load = loads[bin];
        if (load < first_load) {
            loads[bin] += 1;
            return {ball_index, bin, probe, PlacementCase::HighThenLow};
        }
        if (load > first_load) {
            // All earlier probes saw first_load, the shared minimum; the
            // most recently probed of them is prev_bin.
            loads[prev_bin] += 1;
            return {ball_index, prev_bin, probe, PlacementCase::LowThenHigh};
        }
        prev_bin = bin;
    }
    loads[prev_bin] += 1;  // all k probes equal: the last probed bin wins
    return {ball_index, prev_bin, k, PlacementCase::AllEqual};
}

// d independent probes, least loaded wins, ties to the earliest probe.
template <typename Stream>
PlacementRecord place_greedy(LoadVector& loads, Stream& stream, std::uint32_t d,
                             std::uint64_t ball_index = 0) {
    if (d == 0) throw std::invalid_argument("place_greedy: d must be >= 1");
    const std::uint64_t n = loads.size();
    std::uint64_t best_bin = stream.next_below(n);
    std::uint64_t best_load = loads[best_bin];
    const std::uint64_t first_load = best_load;
    bool saw_difference = false;
    bool difference_was_lower = false;
    for (std::uint32_t probe = 1; probe < d; ++probe) {
        const std::uint64_t bin = stream.next_below(n);
        const std::uint64_t load = loads[bin];
        if (!saw_difference && load != first_load) {
            saw_difference = true;
            difference_was_lower = load < first_load;
        }
        if (load < best_load) {
            best_load = load;
            best_bin = bin;
        }
    }
    loads[best_bin] += 1;
    return {ball_index, best_bin, d,
            detail::classify(first_load, saw_difference, difference_was_lower)};
}

// One probe in each of d contiguous groups of n/d bins, least loaded wins,
// ties to the leftmost group. Requires d to divide n.
template <typename Stream>
PlacementRecord place_left(LoadVector& loads, Stream& stream, std::uint32_t d,
                           std::uint64_t ball_index = 0) {
    const std::uint64_t n = loads.size();
    if (d == 0 || n % d != 0)
        throw std::invalid_argument("place_left: d must divide n");
    const std::uint64_t group_size = n / d;
    std::uint64_t best_bin = 0;
    std::uint64_t best_load = 0;
    std::uint64_t first_load = 0;
    bool saw_difference = false;
    bool difference_was_lower = false;
    for (std::uint32_t group = 0; group < d; ++group) {
        const std::uint64_t bin = group * group_size + stream.next_below(group_size);
        const std::uint64_t load = loads[bin];
        if (group == 0) {
            best_bin = bin;
            best_load = load;
            first_load = load;
            continue;
        }
        if (!saw_difference && load != first_load) {
            saw_difference = true;
            difference_was_lower = load < first_load;
        }
        if (load < best_load) {  // strict: ties keep the leftmost group
            best_load = load;
            best_bin = bin;
        }
    }
    loads[best_bin] += 1;
    return {ball_index, best_bin, d,
            detail::classify(first_load, saw_difference, difference_was_lower)};
}

template <typename Stream>
PlacementRecord place_one(LoadVector& loads, Stream& stream, const SimConfig& cfg,
                          std::uint64_t ball_index) {
    switch (cfg.algorithm) {
        case Algorithm::Uniform: return place_greedy(loads, stream, 1, ball_index);
        case Algorithm::Greedy: return place_greedy(loads, stream, cfg.d, ball_index);
        case Algorithm::Left: return place_left(loads, stream, cfg.d, ball_index);
        case Algorithm::FirstDiff: return place_firstdiff(loads, stream, cfg.k, ball_index);
    }
    throw std::logic_error("place_one: unhandled algorithm");
}

struct RunResult {
    LoadVector loads;
    RunStats stats;
    std::vector<PlacementRecord> records;
};

namespace detail {

template <typename RecordSink>
RunStats run_impl(const SimConfig& cfg, std::uint64_t stream_id, LoadVector& loads,
                  RecordSink&& sink) {
    validate(cfg);
    loads.assign(cfg.n, 0);
    ProbeStream stream = substream(cfg.seed, stream_id);
    RunStats stats;
    const std::uint64_t cadence = cfg.gap_cadence ? cfg.gap_cadence : cfg.n;
    for (std::uint64_t ball = 0; ball < cfg.m; ++ball) {
        const PlacementRecord rec = place_one(loads, stream, cfg, ball);
        stats.total_probes += rec.probes_used;
        stats.probe_histogram[rec.probes_used] += 1;
        sink(rec);
        if ((ball + 1) % cadence == 0)
            stats.gap_series.push_back({ball + 1, gap(loads)});
    }
    if (cfg.m > 0 && cfg.m % cadence != 0)
        stats.gap_series.push_back({cfg.m, gap(loads)});
    stats.level_fractions = level_fractions(loads);
    stats.max_load = *std::max_element(loads.begin(), loads.end());
    return stats;
}

}  // namespace detail

// Full run keeping every placement record.
inline RunResult run(const SimConfig& cfg, std::uint64_t stream_id = 0) {
    RunResult result;
    result.records.reserve(cfg.m);
    result.stats = detail::run_impl(cfg, stream_id, result.loads,
                                    [&](const PlacementRecord& r) { result.records.push_back(r); });
    return result;
}

// Same trajectory as run() but without storing records.
inline RunStats run_stats(const SimConfig& cfg, std::uint64_t stream_id = 0) {
    LoadVector loads;
    return detail::run_impl(cfg, stream_id, loads, [](const PlacementRecord&) {});
}

enum class Regime : std::uint8_t { Light, Heavy };

// Probe cap matching a nominal per-ball budget d: floor(2^(2d/3)) when
// m = n (d >= 4), floor(2^(d/2.17)) when m >> n (d >= 6), never below 2.
// Exact-power cases are computed in integer arithmetic so the floor cannot
// be perturbed by libm rounding.
inline std::uint64_t theoretical_k(std::uint32_t d, Regime regime) {
    std::uint64_t k = 0;
    if (regime == Regime::Light) {
        if (d < 4) throw std::invalid_argument("theoretical_k: light regime requires d >= 4");
        if ((2ull * d) % 3 == 0)
            k = 1ull << (2ull * d / 3);
        else
            k = static_cast<std::uint64_t>(std::floor(std::exp2(2.0 * d / 3.0)));
    } else {
        if (d < 6) throw std::invalid_argument("theoretical_k: heavy regime requires d >= 6");
        k = static_cast<std::uint64_t>(std::floor(std::exp2(d / 2.17)));
    }
    return std::max<std::uint64_t>(k, 2);
}

}  // namespace binsim
