#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "binsim/analysis.hpp"
#include "binsim/coupling.hpp"
#include "binsim/experiments.hpp"

namespace {

nlohmann::ordered_json metadata() {
    return {{"tool", "binsim"}, {"version", binsim::version}};
}

struct SimulateOpts {
    std::string algo = "firstdiff";
    std::uint64_t n = 0;
    std::uint64_t m = 0;  // 0 means m = n
    std::uint32_t d = 2;
    std::uint32_t k = 2;
    std::uint32_t trials = 100;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string format = "csv";
    unsigned threads = 1;
    std::string probe_profile;
};

// Per-ball-index probe averages across trials, for congruence-class
// exploration. Reuses the same per-trial streams as the main run.
void write_probe_profile(const binsim::GridCell& cell, std::uint32_t trials,
                         std::uint64_t seed, const std::string& path) {
    binsim::SimConfig cfg{cell.algorithm, cell.n, cell.m, cell.d, cell.k, seed, 0};
    std::vector<std::uint64_t> probe_totals(cfg.m, 0);
    for (std::uint32_t t = 0; t < trials; ++t) {
        const binsim::RunResult result = binsim::run(cfg, t);
        for (const binsim::PlacementRecord& r : result.records)
            probe_totals[r.ball_index] += r.probes_used;
    }
    std::string text = "ball,avg_probes\n";
    for (std::uint64_t i = 0; i < cfg.m; ++i) {
        text += std::to_string(i);
        text += ',' + binsim::detail::fixed(
                          static_cast<double>(probe_totals[i]) / trials, 4);
        text += '\n';
    }
    binsim::write_text(path, text);
}

int run_simulate(const SimulateOpts& opt) {
    binsim::GridCell cell;
    cell.algorithm = binsim::algorithm_from_string(opt.algo);
    cell.n = opt.n;
    cell.m = opt.m == 0 ? opt.n : opt.m;
    cell.d = cell.algorithm == binsim::Algorithm::Uniform ? 1 : opt.d;
    cell.k = opt.k;
    const auto summary = binsim::run_cell(cell, opt.trials, opt.seed, opt.threads);
    binsim::emit_results({summary}, opt.out, binsim::format_from_string(opt.format));
    if (!opt.probe_profile.empty())
        write_probe_profile(binsim::effective_cell(cell), opt.trials, opt.seed,
                            opt.probe_profile);
    return 0;
}

binsim::GridCell cell_from_json(const nlohmann::json& j) {
    binsim::GridCell cell;
    cell.algorithm = binsim::algorithm_from_string(j.at("algo").get<std::string>());
    cell.n = j.at("n").get<std::uint64_t>();
    cell.m = j.value("m", cell.n);
    cell.d = j.value("d", cell.algorithm == binsim::Algorithm::Uniform ? 1u : 2u);
    cell.k = j.value("k", 2u);
    return cell;
}

struct Table1Opts {
    std::string grid_path;
    std::uint32_t trials = 100;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string format = "csv";
    unsigned threads = 1;
};

int run_table1_cmd(const Table1Opts& opt) {
    binsim::ExperimentGrid grid;
    grid.trials = opt.trials;
    grid.master_seed = opt.seed;
    grid.threads = opt.threads;
    if (opt.grid_path.empty()) {
        grid.cells = binsim::default_table1_cells();
    } else {
        std::ifstream in(opt.grid_path);
        if (!in) throw std::runtime_error("cannot open grid file: " + opt.grid_path);
        nlohmann::json doc = nlohmann::json::parse(in);
        for (const auto& j : doc) grid.cells.push_back(cell_from_json(j));
    }
    const auto summaries = binsim::run_table1(grid);
    binsim::emit_results(summaries, opt.out, binsim::format_from_string(opt.format));
    return 0;
}

struct CoupleOpts {
    std::string against;
    std::string algo = "firstdiff";
    std::uint64_t n = 64;
    std::uint64_t steps = 640;
    std::uint32_t max_probes = 6;
    std::uint32_t greedy_k = 2;
    std::uint32_t seeds = 10;
    std::uint64_t seed = 0;
    std::string out = "-";
    bool trace = false;
};

int run_couple(const CoupleOpts& opt) {
    nlohmann::ordered_json doc;
    doc["metadata"] = metadata();
    doc["against"] = opt.against;
    doc["n"] = opt.n;
    doc["steps"] = opt.steps;
    doc["seed"] = opt.seed;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    bool all_ok = true;
    for (std::uint32_t s = 0; s < opt.seeds; ++s) {
        binsim::CoupledTrace trace;
        if (opt.against == "greedy2") {
            doc["algo"] = "firstdiff";
            doc["max_probes"] = opt.max_probes;
            trace = binsim::couple_firstdiff_greedy2(opt.n, opt.steps, opt.max_probes,
                                                     opt.seed, s);
        } else {
            doc["algo"] = opt.algo;
            doc["max_probes"] = opt.max_probes;
            doc["greedy_k"] = opt.greedy_k;
            binsim::CoupledAlg alg;
            alg.algorithm = binsim::algorithm_from_string(opt.algo);
            alg.k = opt.max_probes;
            trace = binsim::couple_alg_greedyk(alg, opt.greedy_k, opt.n, opt.steps,
                                               opt.seed, s);
        }
        nlohmann::ordered_json run;
        run["stream_id"] = s;
        run["all_majorized"] = trace.all_majorized;
        run["violations"] = trace.violations;
        if (opt.trace) {
            std::vector<bool> per_step;
            per_step.reserve(trace.steps.size());
            for (const auto& step : trace.steps) per_step.push_back(step.majorized);
            run["majorized_per_step"] = per_step;
        }
        runs.push_back(std::move(run));
        all_ok = all_ok && trace.all_majorized;
    }
    doc["runs"] = std::move(runs);
    doc["all_majorized"] = all_ok;
    binsim::write_text(opt.out, doc.dump(2) + "\n");
    return all_ok ? 0 : 2;
}

struct BoundsOpts {
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    std::uint32_t max_probes = 0;
    std::uint32_t d = 0;
    std::string regime = "light";
    double lambda = 4.0;
    double janson_pmin = 0.0;
    double janson_mu = 0.0;
    double janson_lambda = 0.0;
    std::string out = "-";
};

int run_bounds(const BoundsOpts& opt) {
    nlohmann::ordered_json doc;
    doc["metadata"] = metadata();
    bool emitted = false;
    if (opt.n != 0 && opt.max_probes != 0 && opt.m == 0) {
        const auto beta = binsim::beta_sequence(opt.n, opt.max_probes);
        doc["beta"] = {{"n", opt.n},
                       {"k", opt.max_probes},
                       {"values", beta.values},
                       {"floor", beta.floor_value},
                       {"floor_index", beta.floor_index},
                       {"i_star", beta.i_star}};
        emitted = true;
    }
    if (opt.d != 0) {
        const auto regime =
            opt.regime == "heavy" ? binsim::Regime::Heavy : binsim::Regime::Light;
        doc["theoretical_k"] = {{"d", opt.d},
                                {"regime", opt.regime},
                                {"k", binsim::theoretical_k(opt.d, regime)}};
        emitted = true;
    }
    if (opt.m != 0) {
        if (opt.n == 0 || opt.max_probes == 0)
            throw CLI::ValidationError("bounds", "--m requires --n and --max-probes");
        binsim::BoundParams params;
        params.lambda = opt.lambda;
        const auto bound = binsim::heavy_probe_bound(opt.m, opt.n, opt.max_probes, params);
        doc["heavy_probe_bound"] = {{"m", opt.m},
                                    {"n", opt.n},
                                    {"k", opt.max_probes},
                                    {"lambda", opt.lambda},
                                    {"total_bound", bound.total_bound},
                                    {"per_ball_bound", bound.per_ball_bound},
                                    {"in_regime", bound.in_regime}};
        emitted = true;
    }
    if (opt.janson_pmin != 0.0 || opt.janson_mu != 0.0 || opt.janson_lambda != 0.0) {
        doc["janson"] = {
            {"p_min", opt.janson_pmin},
            {"mu", opt.janson_mu},
            {"lambda", opt.janson_lambda},
            {"bound", binsim::janson_tail(opt.janson_pmin, opt.janson_mu,
                                          opt.janson_lambda)}};
        emitted = true;
    }
    if (!emitted)
        throw CLI::ValidationError(
            "bounds", "nothing to compute; pass --n/--max-probes, --d, --m, or --janson-*");
    binsim::write_text(opt.out, doc.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic balls-into-bins simulator and bound calculator"};
    app.require_subcommand(1);

    SimulateOpts sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Run one allocation cell");
    simulate->add_option("--algo", sim.algo, "uniform|greedy|left|firstdiff")
        ->check(CLI::IsMember({"uniform", "greedy", "left", "firstdiff"}));
    simulate->add_option("--n", sim.n, "number of bins")->required();
    simulate->add_option("--m", sim.m, "number of balls (default n)");
    simulate->add_option("--d", sim.d, "probes per ball (greedy/left) or budget (firstdiff)");
    simulate->add_option("--max-probes", sim.k, "firstdiff probe cap k");
    simulate->add_option("--trials", sim.trials, "independent trials");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--out", sim.out, "output path, - for stdout");
    simulate->add_option("--format", sim.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    simulate->add_option("--threads", sim.threads, "worker threads");
    simulate->add_option("--probe-profile", sim.probe_profile,
                         "also write per-ball-index probe averages (csv) here");

    Table1Opts tbl;
    CLI::App* table1 = app.add_subcommand("table1", "Run the max-load distribution grid");
    table1->add_option("--grid", tbl.grid_path, "JSON grid file (default: built-in grid)");
    table1->add_option("--trials", tbl.trials, "independent trials per cell");
    table1->add_option("--seed", tbl.seed, "master seed");
    table1->add_option("--out", tbl.out, "output path, - for stdout");
    table1->add_option("--format", tbl.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    table1->add_option("--threads", tbl.threads, "worker threads");

    CoupleOpts cpl;
    CLI::App* couple = app.add_subcommand("couple", "Audit majorization couplings");
    couple->add_option("--against", cpl.against, "greedy2|greedyk")
        ->required()
        ->check(CLI::IsMember({"greedy2", "greedyk"}));
    couple->add_option("--algo", cpl.algo, "alg side for greedyk: uniform|firstdiff")
        ->check(CLI::IsMember({"uniform", "firstdiff"}));
    couple->add_option("--n", cpl.n, "number of bins");
    couple->add_option("--steps", cpl.steps, "balls per coupled run");
    couple->add_option("--max-probes", cpl.max_probes, "firstdiff probe cap k");
    couple->add_option("--greedy-k", cpl.greedy_k, "greedy side probes (greedyk)");
    couple->add_option("--seeds", cpl.seeds, "stream ids 0..seeds-1");
    couple->add_option("--seed", cpl.seed, "master seed");
    couple->add_option("--out", cpl.out, "output path, - for stdout");
    couple->add_flag("--trace", cpl.trace, "include per-step majorization booleans");

    BoundsOpts bnd;
    CLI::App* bounds = app.add_subcommand("bounds", "Evaluate analytic bounds as JSON");
    bounds->add_option("--n", bnd.n, "bins (beta sequence / heavy bound)");
    bounds->add_option("--m", bnd.m, "balls (heavy probe bound)");
    bounds->add_option("--max-probes", bnd.max_probes, "probe cap k");
    bounds->add_option("--d", bnd.d, "nominal budget for theoretical k");
    bounds->add_option("--regime", bnd.regime, "light|heavy")
        ->check(CLI::IsMember({"light", "heavy"}));
    bounds->add_option("--lambda", bnd.lambda, "heavy-regime layer constant");
    bounds->add_option("--janson-pmin", bnd.janson_pmin, "tail bound p_min");
    bounds->add_option("--janson-mu", bnd.janson_mu, "tail bound mu");
    bounds->add_option("--janson-lambda", bnd.janson_lambda, "tail bound lambda");
    bounds->add_option("--out", bnd.out, "output path, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (table1->parsed()) return run_table1_cmd(tbl);
        if (couple->parsed()) return run_couple(cpl);
        return run_bounds(bnd);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
