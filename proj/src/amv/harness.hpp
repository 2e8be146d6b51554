#pragma once

// Experiment runner behind the CLI. Every command produces a ResultTable
// that serializes to a versioned CSV plus a JSON metadata sidecar.

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "amv/geometry.hpp"
#include "amv/spectra.hpp"
#include "json.hpp"

namespace amv {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kTableSchema = "amv-table/1";

enum class Command { Spectrum, Converge, L2Limit, OracleTorus, Scaling, Diagnostics, SincScan };

const char* to_string(Command c) noexcept;
Command parse_command(const std::string& s);

struct ExperimentConfig {
    Command command = Command::Spectrum;
    // space
    std::string space_kind = "interval";   // torus | hypercube | interval | sphere | custom
    std::string metric = "linf";           // torus only: linf | euclid
    int m = 1;
    double side = 1.0;
    std::string points_csv;                 // custom only
    // sampling and operator
    std::vector<std::size_t> n;            // empty: points-per-ball policy
    std::vector<double> r;
    std::size_t k = 5;
    SampleStrategy strategy = SampleStrategy::Grid;
    std::uint64_t seed = 42;
    VolumeMode volumes = VolumeMode::Empirical;
    SolverPath solver = SolverPath::Auto;
    // command specific
    std::string test_function = "neumann_cos";
    int mode = 1;
    std::vector<int> dims{1, 2, 3};
    int pmax = 64;
    std::size_t min_ball_points = 30;
    // output and budget
    std::string out;
    double budget_ms = 0.0;                 // 0: unlimited

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
    SpaceDescriptor space() const;
    void validate() const;
};

struct ResultRow {
    double r = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::string quantity;
    double computed = 0.0;
    double reference = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    double trend = std::numeric_limits<double>::quiet_NaN();
    std::string flag;
    double wall_time_ms = 0.0;

    // |computed - reference| / max(reference, 1e-30)
    double relative_error() const;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    nlohmann::ordered_json metadata;
    std::vector<std::string> warnings;
    bool truncated = false;

    // Rows matching a quantity, in table order.
    std::vector<const ResultRow*> select(const std::string& quantity) const;
    std::string to_csv() const;
    // Writes `path` and `<path>.meta.json`.
    void write(const std::filesystem::path& path) const;
};

// Parses the CSV produced by ResultTable::to_csv (no metadata).
std::vector<ResultRow> parse_table_csv(const std::string& text);

// Points needed so the smallest analytic ball holds `per_ball` samples,
// rounded up to a perfect power for grids.
std::size_t default_sample_count(const SpaceDescriptor& space, double r, SampleStrategy strategy,
                                 std::size_t per_ball = 30);

ResultTable run(const ExperimentConfig& cfg);
ResultTable run_spectrum(const ExperimentConfig& cfg);
ResultTable run_convergence(const ExperimentConfig& cfg);
ResultTable run_l2limit(const ExperimentConfig& cfg);
ResultTable run_oracle_torus(const ExperimentConfig& cfg);
ResultTable run_scaling(const ExperimentConfig& cfg);
ResultTable run_diagnostics(const ExperimentConfig& cfg);
ResultTable run_sinc_scan(const ExperimentConfig& cfg);

}  // namespace amv
