// amv: command-line front end for the experiment runner.
//
//   amv spectrum --config cfg.json
//   amv converge --space interval --n 4000 --r 0.08 0.04 0.02 --k 3 --out sweep.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "amv/amv.h"
#include "json.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kInvalidConfig = 2, kNumericFailure = 3, kBudgetTruncated = 4 };

int exit_code(amv_status s) {
    switch (s) {
        case AMV_OK: return kOk;
        case AMV_ERR_INVALID_INPUT:
        case AMV_ERR_UNSUPPORTED_STRATEGY:
        case AMV_ERR_UNSUPPORTED_MODE:
        case AMV_ERR_UNSUPPORTED_SPACE:
        case AMV_ERR_IO: return kInvalidConfig;
        case AMV_ERR_CONVERGENCE:
        case AMV_ERR_NUMERIC: return kNumericFailure;
        case AMV_ERR_BUDGET_EXHAUSTED: return kBudgetTruncated;
        default: return kInternal;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral experiments for the symmetrized AMV Laplacian"};
    app.set_version_flag("--version", amv_version());

    std::string command;
    std::string config_path;
    std::optional<std::string> space, metric, volumes, strategy, out, test_function, points_csv, solver;
    std::optional<int> m, mode, pmax;
    std::optional<double> side, budget_ms;
    std::optional<std::size_t> k, min_ball_points;
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> n;
    std::vector<double> r;
    std::vector<int> dims;

    app.add_option("command", command, "spectrum | converge | l2limit | oracle-torus | scaling | diagnostics | sinc-scan")
        ->required();
    app.add_option("--config", config_path, "JSON config; flags given on the command line override it")
        ->check(CLI::ExistingFile);
    app.add_option("--space", space, "torus | hypercube | interval | sphere | custom");
    app.add_option("--metric", metric, "torus metric: linf | euclid");
    app.add_option("--m", m, "dimension");
    app.add_option("--side", side, "hypercube side or interval length");
    app.add_option("--points-csv", points_csv, "point cloud for --space custom");
    app.add_option("--n", n, "sample count, or one per radius");
    app.add_option("--r", r, "radius or decreasing list of radii");
    app.add_option("--k", k, "highest eigenvalue index");
    app.add_option("--strategy", strategy, "grid | iid | fibonacci");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--volumes", volumes, "empirical | analytic");
    app.add_option("--solver", solver, "auto | dense | lanczos");
    app.add_option("--test-function", test_function, "neumann_cos | linear | torus_mode | sphere_harmonic");
    app.add_option("--mode", mode, "frequency or harmonic degree of the test function");
    app.add_option("--dims", dims, "dimensions for sinc-scan");
    app.add_option("--pmax", pmax, "largest |p|_inf for torus modes");
    app.add_option("--min-ball-points", min_ball_points, "points per ball when n is omitted");
    app.add_option("--budget-ms", budget_ms, "wall-time budget in milliseconds (0: none)");
    app.add_option("--out", out, "CSV output path; metadata goes to <out>.meta.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalidConfig;
    }

    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        cfg = nlohmann::json::parse(in, nullptr, false);
        if (cfg.is_discarded() || !cfg.is_object()) {
            std::cerr << "amv: " << config_path << " is not a JSON object\n";
            return kInvalidConfig;
        }
    }
    cfg["command"] = command;
    if (space || metric || m || side || points_csv) {
        nlohmann::json s = cfg.contains("space") && cfg["space"].is_object() ? cfg["space"] : nlohmann::json::object();
        if (cfg.contains("space") && cfg["space"].is_string()) s["kind"] = cfg["space"];
        if (space) s["kind"] = *space;
        if (metric) s["metric"] = *metric;
        if (m) s["m"] = *m;
        if (side) s["side"] = *side;
        if (points_csv) s["points_csv"] = *points_csv;
        cfg["space"] = s;
    }
    if (!n.empty()) cfg["n"] = n;
    if (!r.empty()) cfg["r"] = r;
    if (!dims.empty()) cfg["dims"] = dims;
    if (k) cfg["k"] = *k;
    if (strategy) cfg["strategy"] = *strategy;
    if (seed) cfg["seed"] = *seed;
    if (volumes) cfg["volumes"] = *volumes;
    if (solver) cfg["solver"] = *solver;
    if (test_function) cfg["test_function"] = *test_function;
    if (mode) cfg["mode"] = *mode;
    if (pmax) cfg["pmax"] = *pmax;
    if (min_ball_points) cfg["min_ball_points"] = *min_ball_points;
    if (budget_ms) cfg["budget_ms"] = *budget_ms;
    if (out) cfg["out"] = *out;

    char* csv = nullptr;
    int truncated = 0;
    const std::string text = cfg.dump();
    amv_status st = amv_run(text.c_str(), cfg.contains("out") ? nullptr : &csv, &truncated);
    if (st != AMV_OK) {
        std::cerr << "amv: " << amv_status_string(st) << ": " << amv_last_error() << '\n';
        return exit_code(st);
    }
    if (csv) {
        std::fputs(csv, stdout);
        amv_string_free(csv);
    }
    if (truncated) {
        std::cerr << "amv: wall-time budget exhausted, results truncated\n";
        return kBudgetTruncated;
    }
    return kOk;
}
