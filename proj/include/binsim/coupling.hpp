#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "binsim/allocators.hpp"
#include "binsim/core.hpp"
#include "binsim/probe.hpp"

// Rank couplings. Both processes consume one shared stream of uniform ranks
// per ball: a probe at rank r inspects position r of the process's own
// descending load vector, so each process sees the correct marginal
// distribution while the pair stays perfectly correlated. The multi-probe
// side reuses the other side's draws first and pads with fresh draws, which
// keeps per-ball stream consumption independent of either side's decisions.

namespace binsim {

namespace detail {

// Increment the entry at rank `r` of a descending vector. All positions
// holding the same value collapse to the run head, so the vector stays
// sorted and equal-value rank ties cannot change the trajectory.
inline void increment_rank(LoadVector& sorted_loads, std::uint64_t r) {
    const std::uint64_t value = sorted_loads[r];
    auto head = std::lower_bound(sorted_loads.begin(), sorted_loads.end(), value,
                                 std::greater<>());
    *head += 1;
}

// FirstDiff's probe logic replayed on ranks. Appends every rank it draws to
// `drawn` and returns the rank it places in.
template <typename Stream>
std::uint64_t firstdiff_rank_choice(const LoadVector& sorted_loads, Stream& stream,
                                    std::uint32_t k, std::vector<std::uint64_t>& drawn) {
    const std::uint64_t n = sorted_loads.size();
    const std::uint64_t first_rank = stream.next_below(n);
    drawn.push_back(first_rank);
    const std::uint64_t first_load = sorted_loads[first_rank];
    if (first_load == 0) return first_rank;
    std::uint64_t prev_rank = first_rank;
    for (std::uint32_t probe = 2; probe <= k; ++probe) {
        const std::uint64_t rank = stream.next_below(n);
        drawn.push_back(rank);
        const std::uint64_t load = sorted_loads[rank];
        if (load < first_load) return rank;
        if (load > first_load) return prev_rank;
        prev_rank = rank;
    }
    return prev_rank;
}

}  // namespace detail

struct CoupledStep {
    std::uint64_t step = 0;        // balls placed so far
    LoadVector dominated;          // descending
    LoadVector dominating;         // descending
    bool majorized = false;        // dominating majorizes dominated
};

struct CoupledTrace {
    std::vector<CoupledStep> steps;
    bool all_majorized = true;
    std::vector<std::uint64_t> violations;  // step numbers
};

// The `alg` side of a coupling: Uniform (one probe) or FirstDiff with cap k.
struct CoupledAlg {
    Algorithm algorithm = Algorithm::FirstDiff;
    std::uint32_t k = 2;  // probe cap; ignored for Uniform
};

namespace detail {

// One coupled ball. Returns how the greedy side's probes were laid out:
// the alg side draws its ranks first, the greedy side reuses the first
// min(w, greedy_k) of them and pads with fresh draws up to greedy_k.
template <typename Stream>
void coupled_ball(LoadVector& alg_loads, LoadVector& greedy_loads, Stream& stream,
                  const CoupledAlg& alg, std::uint32_t greedy_k) {
    std::vector<std::uint64_t> drawn;
    std::uint64_t alg_rank;
    if (alg.algorithm == Algorithm::Uniform) {
        alg_rank = stream.next_below(alg_loads.size());
        drawn.push_back(alg_rank);
    } else {
        alg_rank = firstdiff_rank_choice(alg_loads, stream, alg.k, drawn);
    }
    while (drawn.size() < greedy_k) drawn.push_back(stream.next_below(greedy_loads.size()));

    std::uint64_t best_rank = drawn[0];
    std::uint64_t best_load = greedy_loads[best_rank];
    for (std::uint32_t probe = 1; probe < greedy_k; ++probe) {
        const std::uint64_t rank = drawn[probe];
        if (greedy_loads[rank] < best_load) {
            best_load = greedy_loads[rank];
            best_rank = rank;
        }
    }
    increment_rank(alg_loads, alg_rank);
    increment_rank(greedy_loads, best_rank);
}

template <typename DominatedSide>
CoupledTrace couple_impl(const CoupledAlg& alg, std::uint32_t greedy_k, std::uint64_t n,
                         std::uint64_t m, std::uint64_t seed, std::uint64_t stream_id,
                         DominatedSide&& dominated_is_alg) {
    if (n == 0) throw std::invalid_argument("couple: n must be positive");
    if (greedy_k == 0) throw std::invalid_argument("couple: greedy k must be positive");
    if (alg.algorithm == Algorithm::FirstDiff && alg.k < 2)
        throw std::invalid_argument("couple: firstdiff cap must be >= 2");
    if (alg.algorithm != Algorithm::FirstDiff && alg.algorithm != Algorithm::Uniform)
        throw std::invalid_argument("couple: alg side must be uniform or firstdiff");
    LoadVector alg_loads(n, 0);
    LoadVector greedy_loads(n, 0);
    ProbeStream stream = substream(seed, stream_id);
    CoupledTrace trace;
    trace.steps.reserve(m);
    for (std::uint64_t ball = 0; ball < m; ++ball) {
        coupled_ball(alg_loads, greedy_loads, stream, alg, greedy_k);
        CoupledStep step;
        step.step = ball + 1;
        if (dominated_is_alg(ball)) {
            step.dominated = alg_loads;
            step.dominating = greedy_loads;
        } else {
            step.dominated = greedy_loads;
            step.dominating = alg_loads;
        }
        step.majorized = majorizes(step.dominating, step.dominated);
        if (!step.majorized) {
            trace.all_majorized = false;
            trace.violations.push_back(step.step);
        }
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace detail

// FirstDiff[d] with cap k against Greedy[2]: Greedy[2] reuses FirstDiff's
// first two rank draws. Expected ordering: Greedy[2]'s vector majorizes
// FirstDiff's at every step.
inline CoupledTrace couple_firstdiff_greedy2(std::uint64_t n, std::uint64_t m,
                                             std::uint32_t k, std::uint64_t seed,
                                             std::uint64_t stream_id = 0) {
    return detail::couple_impl(CoupledAlg{Algorithm::FirstDiff, k}, 2, n, m, seed,
                               stream_id, [](std::uint64_t) { return true; });
}

// An at-most-k-probe process (Uniform or FirstDiff with cap k) against
// Greedy[k]: Greedy[k] reuses the alg side's draws and pads to k. Expected
// ordering: the alg side's vector majorizes Greedy[k]'s at every step.
inline CoupledTrace couple_alg_greedyk(const CoupledAlg& alg, std::uint32_t k,
                                       std::uint64_t n, std::uint64_t m,
                                       std::uint64_t seed, std::uint64_t stream_id = 0) {
    if (alg.algorithm == Algorithm::FirstDiff && alg.k > k)
        throw std::invalid_argument("couple_alg_greedyk: alg cap must be <= greedy k");
    return detail::couple_impl(alg, k, n, m, seed, stream_id,
                               [](std::uint64_t) { return false; });
}

}  // namespace binsim
