#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "binsim/allocators.hpp"
#include "binsim/core.hpp"

// Experiment grids and result emission. Trials are keyed by trial index
// (stream_id = trial index under the master seed) and aggregated in index
// order, so results are byte-identical for any thread count.

namespace binsim {

enum class OutputFormat : std::uint8_t { Csv, Json };

inline OutputFormat format_from_string(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw std::invalid_argument("unknown output format: " + s);
}

struct GridCell {
    Algorithm algorithm = Algorithm::FirstDiff;
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    std::uint32_t d = 1;
    std::uint32_t k = 2;
};

struct ExperimentGrid {
    std::vector<GridCell> cells;
    std::uint32_t trials = 100;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
};

struct TrialSummary {
    GridCell cell;                  // effective parameters (after any rounding)
    std::uint64_t requested_n = 0;  // n as configured; differs when Left rounds
    std::uint32_t trials = 0;
    std::uint64_t seed = 0;
    std::map<std::uint64_t, double> max_load_pct;            // max load -> % of trials
    std::map<std::uint32_t, std::uint64_t> probe_histogram;  // probes -> balls, all trials
    double avg_probes_per_ball = 0.0;
    std::vector<std::uint64_t> per_trial_max;  // by trial index; not serialized
    double wall_time_s = 0.0;                  // not serialized
};

// Left needs d | n; the runner rounds n down to the nearest multiple (and
// keeps m = n when the cell was configured that way).
inline GridCell effective_cell(const GridCell& cell) {
    GridCell out = cell;
    if (cell.algorithm == Algorithm::Left && cell.d != 0 && cell.n % cell.d != 0) {
        out.n = cell.n - cell.n % cell.d;
        if (cell.m == cell.n) out.m = out.n;
    }
    return out;
}

inline TrialSummary run_cell(const GridCell& cell, std::uint32_t trials,
                             std::uint64_t master_seed, unsigned threads = 1) {
    if (trials == 0) throw std::invalid_argument("run_cell: trials must be positive");
    const auto start = std::chrono::steady_clock::now();
    const GridCell eff = effective_cell(cell);
    SimConfig cfg;
    cfg.algorithm = eff.algorithm;
    cfg.n = eff.n;
    cfg.m = eff.m;
    cfg.d = eff.d;
    cfg.k = eff.k;
    cfg.seed = master_seed;
    validate(cfg);

    struct TrialOutcome {
        std::uint64_t max_load = 0;
        std::uint64_t total_probes = 0;
        std::map<std::uint32_t, std::uint64_t> probe_histogram;
    };
    std::vector<TrialOutcome> outcomes(trials);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, trials));
    auto work = [&](unsigned worker) {
        for (std::uint32_t t = worker; t < trials; t += workers) {
            const RunStats stats = run_stats(cfg, t);
            outcomes[t] = {stats.max_load, stats.total_probes, stats.probe_histogram};
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    TrialSummary summary;
    summary.cell = eff;
    summary.requested_n = cell.n;
    summary.trials = trials;
    summary.seed = master_seed;
    summary.per_trial_max.reserve(trials);
    std::map<std::uint64_t, std::uint64_t> max_counts;
    std::uint64_t total_probes = 0;
    for (const TrialOutcome& o : outcomes) {  // trial-index order: deterministic
        summary.per_trial_max.push_back(o.max_load);
        max_counts[o.max_load] += 1;
        total_probes += o.total_probes;
        for (const auto& [probes, balls] : o.probe_histogram)
            summary.probe_histogram[probes] += balls;
    }
    for (const auto& [load, count] : max_counts)
        summary.max_load_pct[load] = 100.0 * static_cast<double>(count) / trials;
    const std::uint64_t total_balls = eff.m * static_cast<std::uint64_t>(trials);
    summary.avg_probes_per_ball =
        total_balls ? static_cast<double>(total_probes) / static_cast<double>(total_balls) : 0.0;
    summary.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

inline std::vector<TrialSummary> run_grid(const ExperimentGrid& grid) {
    std::vector<TrialSummary> out;
    out.reserve(grid.cells.size());
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
        try {
            out.push_back(run_cell(grid.cells[i], grid.trials, grid.master_seed, grid.threads));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("cell " + std::to_string(i) + " (" +
                                        to_string(grid.cells[i].algorithm) + ", n=" +
                                        std::to_string(grid.cells[i].n) + "): " + e.what());
        }
    }
    return out;
}

// Max-load distribution table: every cell runs m = n balls.
inline std::vector<TrialSummary> run_table1(const ExperimentGrid& grid) {
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        if (grid.cells[i].m != grid.cells[i].n)
            throw std::invalid_argument("table cell " + std::to_string(i) +
                                        " must have m = n");
    return run_grid(grid);
}

// The desk-scale grid: both n values, Greedy/Left/FirstDiff at the three
// budget pairs plus the uniform baseline.
inline std::vector<GridCell> default_table1_cells() {
    std::vector<GridCell> cells;
    for (std::uint64_t n : {1ull << 8, 1ull << 12}) {
        cells.push_back({Algorithm::Uniform, n, n, 1, 2});
        for (std::uint32_t d : {2u, 3u, 4u}) cells.push_back({Algorithm::Greedy, n, n, d, 2});
        for (std::uint32_t d : {2u, 3u, 4u}) cells.push_back({Algorithm::Left, n, n, d, 2});
        for (auto [d, k] : {std::pair<std::uint32_t, std::uint32_t>{2, 3}, {3, 10}, {4, 30}})
            cells.push_back({Algorithm::FirstDiff, n, n, d, k});
    }
    return cells;
}

namespace detail {

inline std::string fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

// One row per (cell, max_load) histogram entry. Percentages use one
// decimal place, averages four; map iteration keeps rows sorted, so equal
// inputs produce byte-identical output.
inline std::string to_csv(const std::vector<TrialSummary>& summaries) {
    std::string out = "algo,n,m,d,k,trials,seed,max_load,pct,avg_probes\n";
    for (const TrialSummary& s : summaries) {
        for (const auto& [load, pct] : s.max_load_pct) {
            out += to_string(s.cell.algorithm);
            out += ',' + std::to_string(s.cell.n);
            out += ',' + std::to_string(s.cell.m);
            out += ',' + std::to_string(s.cell.d);
            out += ',' + std::to_string(s.cell.k);
            out += ',' + std::to_string(s.trials);
            out += ',' + std::to_string(s.seed);
            out += ',' + std::to_string(load);
            out += ',' + detail::fixed(pct, 1);
            out += ',' + detail::fixed(s.avg_probes_per_ball, 4);
            out += '\n';
        }
    }
    return out;
}

// Full histograms plus config per cell. The timestamp is the only field
// that differs between reruns with identical inputs.
inline nlohmann::ordered_json to_json(const std::vector<TrialSummary>& summaries,
                                      bool include_timestamp = true) {
    nlohmann::ordered_json doc;
    doc["metadata"] = {{"tool", "binsim"}, {"version", version}};
    if (include_timestamp) doc["metadata"]["timestamp"] = detail::utc_timestamp();
    doc["cells"] = nlohmann::ordered_json::array();
    for (const TrialSummary& s : summaries) {
        nlohmann::ordered_json cell;
        cell["algo"] = to_string(s.cell.algorithm);
        cell["n"] = s.cell.n;
        cell["requested_n"] = s.requested_n;
        cell["m"] = s.cell.m;
        cell["d"] = s.cell.d;
        cell["k"] = s.cell.k;
        cell["trials"] = s.trials;
        cell["seed"] = s.seed;
        cell["stream_ids"] = "trial index 0.." + std::to_string(s.trials - 1);
        nlohmann::ordered_json hist;
        for (const auto& [load, pct] : s.max_load_pct)
            hist[std::to_string(load)] = pct;
        cell["max_load_histogram"] = hist;
        nlohmann::ordered_json probes;
        for (const auto& [count, balls] : s.probe_histogram)
            probes[std::to_string(count)] = balls;
        cell["probe_histogram"] = probes;
        cell["avg_probes_per_ball"] = s.avg_probes_per_ball;
        doc["cells"].push_back(std::move(cell));
    }
    return doc;
}

inline void write_text(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_results(const std::vector<TrialSummary>& summaries, const std::string& path,
                         OutputFormat format) {
    if (format == OutputFormat::Csv)
        write_text(path, to_csv(summaries));
    else
        write_text(path, to_json(summaries).dump(2) + "\n");
}

struct ProbeBudgetReport {
    std::uint32_t budget_d = 0;
    std::vector<double> per_trial_mean;  // probes per ball, by trial index
    double overall_mean = 0.0;
    std::uint32_t max_probes = 0;
    std::map<std::uint32_t, std::uint64_t> histogram;
    std::uint32_t trials_over_budget = 0;  // trials with mean > d
};

// FirstDiff probe accounting against the nominal budget d.
inline ProbeBudgetReport probe_budget_report(const SimConfig& cfg, std::uint32_t trials) {
    if (cfg.algorithm != Algorithm::FirstDiff)
        throw std::invalid_argument("probe_budget_report: firstdiff only");
    if (trials == 0) throw std::invalid_argument("probe_budget_report: trials must be positive");
    validate(cfg);
    if (cfg.m == 0) throw std::invalid_argument("probe_budget_report: m must be positive");
    ProbeBudgetReport report;
    report.budget_d = cfg.d;
    report.per_trial_mean.reserve(trials);
    std::uint64_t total = 0;
    for (std::uint32_t t = 0; t < trials; ++t) {
        const RunStats stats = run_stats(cfg, t);
        const double mean =
            static_cast<double>(stats.total_probes) / static_cast<double>(cfg.m);
        report.per_trial_mean.push_back(mean);
        if (mean > static_cast<double>(cfg.d)) report.trials_over_budget += 1;
        total += stats.total_probes;
        for (const auto& [probes, balls] : stats.probe_histogram) {
            report.histogram[probes] += balls;
            report.max_probes = std::max(report.max_probes, probes);
        }
    }
    report.overall_mean = static_cast<double>(total) /
                          (static_cast<double>(cfg.m) * static_cast<double>(trials));
    return report;
}

struct HeavyGapReport {
    std::vector<double> gaps;  // final gap per trial, by trial index
    double c = 0.0;
    double threshold = 0.0;  // log2(log2 n)/(0.46 d) + c * log2(log2(log2 n))
    std::uint64_t trials_exceeding = 0;
};

// Final-gap distribution for FirstDiff in the many-balls regime, compared
// against the additive-above-average threshold with caller-chosen c.
inline HeavyGapReport heavy_gap_report(std::uint64_t n, std::uint64_t m, std::uint32_t d,
                                       std::uint32_t k, std::uint32_t trials,
                                       std::uint64_t seed, double c = 1.0) {
    if (n < 4) throw std::invalid_argument("heavy_gap_report: n must be >= 4");
    if (trials == 0) throw std::invalid_argument("heavy_gap_report: trials must be positive");
    SimConfig cfg;
    cfg.algorithm = Algorithm::FirstDiff;
    cfg.n = n;
    cfg.m = m;
    cfg.d = d;
    cfg.k = k;
    cfg.seed = seed;
    validate(cfg);
    HeavyGapReport report;
    report.c = c;
    const double loglog = std::log2(std::log2(static_cast<double>(n)));
    report.threshold = loglog / (0.46 * static_cast<double>(d)) +
                       (loglog > 0.0 ? c * std::log2(loglog) : 0.0);
    report.gaps.reserve(trials);
    for (std::uint32_t t = 0; t < trials; ++t) {
        const RunStats stats = run_stats(cfg, t);
        const double final_gap = stats.gap_series.empty()
                                     ? 0.0
                                     : stats.gap_series.back().gap;
        report.gaps.push_back(final_gap);
        if (final_gap > report.threshold) report.trials_exceeding += 1;
    }
    return report;
}

}  // namespace binsim
