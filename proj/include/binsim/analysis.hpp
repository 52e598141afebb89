#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "binsim/core.hpp"

// Plateau structure, canonical configurations and the closed-form bounds.
// All logarithms are base 2 except the natural log inside the Poisson-style
// tail bound.

namespace binsim {

struct Plateau {
    std::uint64_t level = 0;
    std::uint64_t balls = 0;  // balls at this level = bins with load >= level

    friend bool operator==(const Plateau&, const Plateau&) = default;
};

// Levels at or above the highest complete level that hold at least one
// ball, in increasing level order. A complete level (all n bins reach it)
// is emitted with count n; level 0 acts as the complete ground, so it is
// only emitted for the all-empty configuration, as the sentinel (0, n).
inline std::vector<Plateau> plateaus(const LoadVector& loads) {
    if (loads.empty()) throw std::invalid_argument("plateaus: empty load vector");
    const std::uint64_t n = loads.size();
    const std::uint64_t max = *std::max_element(loads.begin(), loads.end());
    if (max == 0) return {{0, n}};
    std::vector<std::uint64_t> at_level(max + 1, 0);
    for (std::uint64_t v : loads) at_level[v] += 1;
    std::vector<std::uint64_t> at_least(max + 2, 0);
    for (std::uint64_t level = max + 1; level-- > 1;)
        at_least[level] = at_least[level + 1] + at_level[level];
    std::uint64_t complete = 0;
    while (complete + 1 <= max && at_least[complete + 1] == n) ++complete;
    std::vector<Plateau> out;
    if (complete >= 1) out.push_back({complete, n});
    for (std::uint64_t level = complete + 1; level <= max; ++level)
        out.push_back({level, at_least[level]});  // every level up to max is occupied
    return out;
}

struct CanonicalConfig {
    std::uint64_t level = 0;
    std::uint64_t balls = 0;  // balls at `level`; every level below is full

    friend auto operator<=>(const CanonicalConfig&, const CanonicalConfig&) = default;
};

using CanonicalSet = std::set<CanonicalConfig>;

// Apply one placement to the running canonical set. `placement_level` is
// the load of the receiving bin, so the ball itself lands at
// placement_level + 1. Exactly one configuration is added per call (the
// selected one, which is returned); a level reaching n balls also retires
// the now-buried configuration one level down.
inline CanonicalConfig canonical_update(CanonicalSet& set, const LoadVector& loads_before,
                                        std::uint64_t placement_level) {
    const std::uint64_t n = loads_before.size();
    if (n == 0) throw std::invalid_argument("canonical_update: empty load vector");
    bool level_exists = false;
    std::uint64_t balls_above = 0;  // bins with load >= placement_level + 1
    std::uint64_t balls_at = 0;     // bins with load >= placement_level
    for (std::uint64_t v : loads_before) {
        if (v == placement_level) level_exists = true;
        if (v >= placement_level + 1) ++balls_above;
        if (v >= placement_level) ++balls_at;
    }
    // Every bin's load is a plateau level (or the ground), so a placement
    // at a level no bin currently tops out at cannot come from a real run.
    if (!level_exists)
        throw std::invalid_argument("canonical_update: placement at a non-plateau level");
    const std::uint64_t new_level = placement_level + 1;
    const CanonicalConfig selected{new_level, balls_above + 1};
    if (balls_above == 0) {
        set.insert(selected);  // the ball opens a new plateau
    } else if (balls_above + 1 < n) {
        set.erase({new_level, balls_above});
        set.insert(selected);
    } else {
        // new_level completes: placement_level must already be full.
        set.erase({new_level, balls_above});
        set.erase({placement_level, balls_at});
        set.insert(selected);
    }
    return selected;
}

// Expected probes to place one ball into the canonical configuration with
// b bins at the top level and n-b one level down, capped at the probe
// budget k. Near-degenerate occupancies (b <= floor(n/k) - 1 or
// b >= n - floor(n/k) + 1) are given away at the full budget k.
inline double expected_probes_canonical(std::uint64_t b, std::uint64_t n, std::uint64_t k) {
    if (n == 0) throw std::invalid_argument("expected_probes_canonical: n must be positive");
    if (k < 2) throw std::invalid_argument("expected_probes_canonical: k must be >= 2");
    if (b >= n) throw std::invalid_argument("expected_probes_canonical: b must be in [0, n-1]");
    const std::uint64_t q = n / k;
    if (b == 0) return static_cast<double>(k);
    if (q >= 1 && b <= q - 1) return static_cast<double>(k);
    if (b >= n - q + 1) return static_cast<double>(k);
    const double top = static_cast<double>(b);
    const double rest = static_cast<double>(n - b);
    return std::min(top / rest + rest / top, static_cast<double>(k));
}

struct BetaSequence {
    std::vector<double> values;   // values[i] is beta_{11+i}
    double floor_value = 0.0;     // 18*log2(n)/n
    std::uint32_t floor_index = 0;  // first index i with beta_i == floor_value
    double i_star = 0.0;          // log2(log2 n)/log2(k) + 11
};

// beta_11 = 1/11, beta_{i+1} = max((10/3)*beta_i^k, 18*log2(n)/n). The
// sequence collapses doubly exponentially, so it reaches the floor within a
// handful of steps (around i_star).
inline BetaSequence beta_sequence(std::uint64_t n, std::uint64_t k) {
    if (n < 4) throw std::invalid_argument("beta_sequence: n must be >= 4");
    if (k < 2) throw std::invalid_argument("beta_sequence: k must be >= 2");
    BetaSequence out;
    out.floor_value = 18.0 * std::log2(static_cast<double>(n)) / static_cast<double>(n);
    out.i_star = std::log2(std::log2(static_cast<double>(n))) /
                     std::log2(static_cast<double>(k)) +
                 11.0;
    double beta = 1.0 / 11.0;
    out.values.push_back(beta);
    std::uint32_t index = 11;
    // The max() clamps the first sub-floor step to the floor exactly, so
    // equality is the right stopping test even when the floor sits above
    // 1/11 (tiny n).
    while (beta != out.floor_value) {
        if (index > 11 + 500) throw std::logic_error("beta_sequence: failed to reach floor");
        beta = std::max((10.0 / 3.0) * std::pow(beta, static_cast<double>(k)),
                        out.floor_value);
        out.values.push_back(beta);
        ++index;
    }
    out.floor_index = index;
    return out;
}

// exp(-p_min * mu * (lambda - 1 - ln(lambda))): the tail probability that a
// sum of independent indicators with min success probability p_min and mean
// mu exceeds lambda times its mean.
inline double janson_tail(double p_min, double mu, double lambda) {
    if (!(p_min > 0.0) || p_min > 1.0)
        throw std::invalid_argument("janson_tail: p_min must be in (0, 1]");
    if (!(mu > 0.0)) throw std::invalid_argument("janson_tail: mu must be positive");
    if (!(lambda >= 1.0)) throw std::invalid_argument("janson_tail: lambda must be >= 1");
    return std::exp(-p_min * mu * (lambda - 1.0 - std::log(lambda)));
}

// Constants: empirical defaults.
struct BoundParams {
    double lambda = 4.0;   // layers above m/n treated as the active band
    double a = 0.5;        // fraction constant of the weighted-layer argument
    double b_const = 4.0;  // additive constant of the weighted-layer argument
    double gamma = 15.0;   // additive slack on the max-load level bound
};

struct HeavyProbeBound {
    double total_bound = 0.0;     // 2.17 * m * log2(k)
    double per_ball_bound = 0.0;  // 2.17 * log2(k); equals d when k = 2^(d/2.17)
    bool in_regime = false;       // m >= 72 * (n * lambda * log2(n) + n)
};

inline HeavyProbeBound heavy_probe_bound(std::uint64_t m, std::uint64_t n, std::uint64_t k,
                                         const BoundParams& params = {}) {
    if (n == 0) throw std::invalid_argument("heavy_probe_bound: n must be positive");
    if (k < 2) throw std::invalid_argument("heavy_probe_bound: k must be >= 2");
    HeavyProbeBound out;
    const double log_k = std::log2(static_cast<double>(k));
    out.per_ball_bound = 2.17 * log_k;
    out.total_bound = 2.17 * static_cast<double>(m) * log_k;
    const double threshold =
        72.0 * (static_cast<double>(n) * params.lambda * std::log2(static_cast<double>(n)) +
                static_cast<double>(n));
    out.in_regime = static_cast<double>(m) >= threshold;
    return out;
}

struct OvercountReport {
    std::vector<CanonicalConfig> selected;  // one per ball, in placement order
    std::uint64_t duplicate_selected = 0;   // must be 0
    double expected_probe_sum = 0.0;        // sum of per-config expected probes
    std::uint64_t actual_total_probes = 0;
    bool overcount_holds = false;  // actual <= expected + sampling slack
};

// Replay a placement trace, maintain the canonical set step by step and
// check the two overcounting properties: no canonical configuration is
// ever selected twice, and the summed per-config probe expectations bound
// the realized probe total (up to sampling noise; per-ball probes are
// capped by k, so a 5 sigma slack of 5*sqrt(k*expected_sum) is generous).
inline OvercountReport overcount_audit(const std::vector<PlacementRecord>& trace,
                                       std::uint64_t n, std::uint64_t k) {
    if (n == 0) throw std::invalid_argument("overcount_audit: n must be positive");
    if (k < 2) throw std::invalid_argument("overcount_audit: k must be >= 2");
    LoadVector loads(n, 0);
    CanonicalSet running;
    std::set<CanonicalConfig> seen;
    OvercountReport report;
    report.selected.reserve(trace.size());
    for (const PlacementRecord& rec : trace) {
        if (rec.chosen_bin >= n)
            throw std::invalid_argument("overcount_audit: chosen bin out of range");
        if (rec.probes_used < 1 || rec.probes_used > k)
            throw std::invalid_argument("overcount_audit: probes outside [1, k]");
        const CanonicalConfig sel = canonical_update(running, loads, loads[rec.chosen_bin]);
        if (!seen.insert(sel).second) report.duplicate_selected += 1;
        report.selected.push_back(sel);
        report.expected_probe_sum += expected_probes_canonical(sel.balls - 1, n, k);
        report.actual_total_probes += rec.probes_used;
        loads[rec.chosen_bin] += 1;
    }
    const double slack =
        5.0 * std::sqrt(static_cast<double>(k) * report.expected_probe_sum);
    report.overcount_holds =
        static_cast<double>(report.actual_total_probes) <= report.expected_probe_sum + slack;
    return report;
}

}  // namespace binsim
