#include "amv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "amv/amv_operator.hpp"
#include "amv/error.hpp"
#include "amv/format.hpp"
#include "amv/reference.hpp"

namespace amv {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kCommands[] = {"spectrum", "converge", "l2limit", "oracle-torus",
                                 "scaling", "diagnostics", "sinc-scan"};

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

class Deadline {
public:
    explicit Deadline(double budget_ms) : start_(Clock::now()), budget_(budget_ms) {}
    bool expired() const { return budget_ > 0.0 && ms_since(start_) > budget_; }
    double elapsed_ms() const { return ms_since(start_); }

private:
    Clock::time_point start_;
    double budget_;
};

template <class T>
std::vector<T> scalar_or_list(const json& v) {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
}

std::string mode_label(const std::vector<int>& p) {
    std::string s = "p=(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(p[i]);
    }
    return s + ")";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

double parse_number(const std::string& s) {
    if (s == "nan") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    require(pos == s.size(), "malformed number in table: " + s);
    return v;
}

// Sizes of runs of equal values (relative tolerance rel).
std::vector<int> group_sizes(const std::vector<double>& v, double rel) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i + 1;
        while (j < v.size() && std::fabs(v[j] - v[i]) <= rel * std::max(1.0, std::fabs(v[i]))) ++j;
        out.push_back(static_cast<int>(j - i));
        i = j;
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

double l2_norm_w(std::span<const double> w, const std::vector<double>& f) { return std::sqrt(inner_w(w, f, f)); }

// A point where the analytic ball is smallest.
std::vector<double> smallest_ball_center(const SpaceDescriptor& space) {
    if (space.kind == SpaceKind::Sphere2) return {0.0, 0.0, 1.0};
    return std::vector<double>(space.ambient, 0.0);
}

struct Instance {
    std::shared_ptr<const SampleSet> samples;
    std::unique_ptr<AmvOperator> op;
};

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), space_(cfg.space()), deadline_(cfg.budget_ms) {
        cfg_.validate();
        opts_.path = cfg.solver;
        opts_.seed = cfg.seed;
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    const SpaceDescriptor& space() const { return space_; }
    const EigOptions& opts() const { return opts_; }
    ResultTable& table() { return table_; }

    std::size_t resolve_n(double r, std::size_t idx) const {
        if (space_.kind == SpaceKind::CustomCloud) return 0;
        if (cfg_.n.empty()) return default_sample_count(space_, r, cfg_.strategy, cfg_.min_ball_points);
        if (cfg_.n.size() == 1) return cfg_.n.front();
        return cfg_.n.at(idx);
    }

    Instance build(const SpaceDescriptor& space, std::size_t n, double r) {
        Instance inst;
        if (space.kind == SpaceKind::CustomCloud) {
            if (!cloud_) cloud_ = std::make_shared<const SampleSet>(load_cloud_csv(cfg_.points_csv, cfg_.m));
            inst.samples = cloud_;
        } else {
            inst.samples = std::make_shared<const SampleSet>(sample(space, n, cfg_.strategy, cfg_.seed));
        }
        inst.op = std::make_unique<AmvOperator>(build_operator(inst.samples, r, cfg_.volumes));
        if (!inst.op->connected()) {
            std::string msg = "ball graph is disconnected at r=" + format_double(r);
            if (std::find(table_.warnings.begin(), table_.warnings.end(), msg) == table_.warnings.end())
                table_.warnings.push_back(msg);
        }
        return inst;
    }

    // False once the budget is gone; the table is then marked truncated.
    bool proceed() {
        if (!deadline_.expired()) return true;
        table_.truncated = true;
        return false;
    }

    void add(ResultRow row, Clock::time_point t0) {
        row.wall_time_ms = ms_since(t0);
        table_.rows.push_back(std::move(row));
    }

    void record_instance(double r, const Instance& inst, const SpectralResult* sr) {
        ojson o;
        o["r"] = r;
        o["n"] = inst.samples->size();
        o["volume_mode"] = to_string(inst.op->volumes().mode);
        o["connected"] = inst.op->connected();
        o["min_volume"] = inst.op->min_volume();
        o["max_volume"] = inst.op->max_volume();
        o["essential_threshold"] = inst.op->essential_threshold();
        o["norm_bound"] = inst.op->norm_bound();
        if (sr) {
            o["solver"] = sr->solver;
            o["spectral_radius"] = sr->spectral_radius;
            o["matvecs"] = sr->matvecs;
        }
        instances_.push_back(std::move(o));
    }

    ResultTable finish() {
        std::stable_sort(table_.rows.begin(), table_.rows.end(), [](const ResultRow& a, const ResultRow& b) {
            if (a.r != b.r) return a.r > b.r;
            return a.k < b.k;
        });
        if (table_.truncated) {
            ResultRow marker;
            marker.quantity = "truncated";
            marker.computed = kNaN;
            marker.flag = "budget_exhausted";
            table_.rows.push_back(marker);
        }
        ojson meta;
        meta["schema"] = kTableSchema;
        meta["library_version"] = kLibraryVersion;
        meta["command"] = to_string(cfg_.command);
        meta["config"] = cfg_.to_json();
        ojson target;
        if (space_.kind == SpaceKind::FlatTorusLinf || space_.kind == SpaceKind::Hypercube ||
            space_.kind == SpaceKind::Interval) {
            target["kind"] = "cube-ball 1/6 per coordinate";
        } else {
            target["kind"] = "C_m = 1/(2(m+2))";
        }
        target["value"] = limit_constant(space_);
        meta["target_constant"] = target;
        ojson policy;
        policy["min_ball_points"] = cfg_.min_ball_points;
        policy["n_explicit"] = !cfg_.n.empty();
        meta["sampling_policy"] = policy;
        meta["instances"] = instances_;
        meta["truncated"] = table_.truncated;
        meta["warnings"] = table_.warnings;
        std::vector<double> times;
        for (const auto& row : table_.rows) times.push_back(row.wall_time_ms);
        meta["wall_time_ms"] = times;
        meta["total_wall_time_ms"] = deadline_.elapsed_ms();
        table_.metadata = std::move(meta);
        return std::move(table_);
    }

private:
    ExperimentConfig cfg_;
    SpaceDescriptor space_;
    Deadline deadline_;
    EigOptions opts_;
    ResultTable table_;
    ojson instances_ = ojson::array();
    std::shared_ptr<const SampleSet> cloud_;
};

// Reference eigenvalues c * mu_k for k = 0..K, or NaN when none exist.
std::vector<double> reference_values(const SpaceDescriptor& space, std::size_t K) {
    if (space.kind == SpaceKind::CustomCloud) return std::vector<double>(K + 1, kNaN);
    auto ref = laplace_spectrum(space, K + 1).expanded();
    const double c = limit_constant(space);
    std::vector<double> out(K + 1);
    for (std::size_t k = 0; k <= K; ++k) out[k] = c * ref[k];
    return out;
}

struct TestFunction {
    std::vector<double> f;
    std::vector<double> laplacian;   // Δ_g f at the samples
};

TestFunction evaluate_test_function(const std::string& name, int mode, const SampleSet& s) {
    const auto& space = s.space;
    const std::size_t n = s.size();
    TestFunction t{std::vector<double>(n), std::vector<double>(n)};
    const double pi = std::numbers::pi;
    const bool box = space.kind == SpaceKind::Interval || space.kind == SpaceKind::Hypercube;
    const bool torus = space.kind == SpaceKind::FlatTorusLinf || space.kind == SpaceKind::FlatTorusEuclid;
    if (name == "neumann_cos" && box) {
        const double kx = pi * mode / space.side;
        for (std::size_t i = 0; i < n; ++i) {
            t.f[i] = std::cos(kx * s.point(i)[0]);
            t.laplacian[i] = -kx * kx * t.f[i];
        }
    } else if (name == "linear" && box) {
        for (std::size_t i = 0; i < n; ++i) t.f[i] = s.point(i)[0];
    } else if (name == "torus_mode" && torus) {
        const double kx = pi * mode;
        for (std::size_t i = 0; i < n; ++i) {
            t.f[i] = std::cos(kx * s.point(i)[0]);
            t.laplacian[i] = -kx * kx * t.f[i];
        }
    } else if (name == "sphere_harmonic" && space.kind == SpaceKind::Sphere2) {
        require(mode >= 0, "spherical harmonic degree must be nonnegative");
        const double ev = static_cast<double>(mode) * (mode + 1);
        for (std::size_t i = 0; i < n; ++i) {
            t.f[i] = std::legendre(static_cast<unsigned>(mode), s.point(i)[2]);
            t.laplacian[i] = -ev * t.f[i];
        }
    } else {
        fail(ErrorCode::InvalidInput,
             "test function '" + name + "' is not defined on " + std::string(to_string(space.kind)));
    }
    return t;
}

}  // namespace

const char* to_string(Command c) noexcept { return kCommands[static_cast<int>(c)]; }

Command parse_command(const std::string& s) {
    for (int i = 0; i < 7; ++i)
        if (s == kCommands[i]) return static_cast<Command>(i);
    fail(ErrorCode::InvalidInput, "unknown command '" + s + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    require(j.is_object(), "config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("command")) c.command = parse_command(j.at("command").get<std::string>());
        if (j.contains("space")) {
            const auto& s = j.at("space");
            if (s.is_string()) {
                c.space_kind = s.get<std::string>();
            } else {
                c.space_kind = s.value("kind", c.space_kind);
                c.metric = s.value("metric", c.metric);
                c.m = s.value("m", c.m);
                c.side = s.value("side", c.side);
                c.points_csv = s.value("points_csv", c.points_csv);
            }
        }
        c.metric = j.value("metric", c.metric);
        c.m = j.value("m", c.m);
        c.side = j.value("side", c.side);
        c.points_csv = j.value("points_csv", c.points_csv);
        if (j.contains("n") && !j.at("n").is_null()) c.n = scalar_or_list<std::size_t>(j.at("n"));
        if (j.contains("r")) c.r = scalar_or_list<double>(j.at("r"));
        c.k = j.value("k", c.k);
        if (j.contains("strategy")) {
            c.strategy = parse_strategy(j.at("strategy").get<std::string>());
        } else if (c.space_kind == "sphere") {
            c.strategy = SampleStrategy::Fibonacci;
        } else if (c.space_kind == "custom") {
            c.strategy = SampleStrategy::Imported;
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("volumes")) c.volumes = parse_volume_mode(j.at("volumes").get<std::string>());
        if (j.contains("volume_mode")) c.volumes = parse_volume_mode(j.at("volume_mode").get<std::string>());
        if (j.contains("solver")) {
            auto s = j.at("solver").get<std::string>();
            if (s == "auto") c.solver = SolverPath::Auto;
            else if (s == "dense") c.solver = SolverPath::Dense;
            else if (s == "lanczos") c.solver = SolverPath::Lanczos;
            else fail(ErrorCode::InvalidInput, "unknown solver '" + s + "'");
        }
        c.test_function = j.value("test_function", c.test_function);
        c.mode = j.value("mode", c.mode);
        if (j.contains("dims")) c.dims = scalar_or_list<int>(j.at("dims"));
        c.pmax = j.value("pmax", c.pmax);
        c.min_ball_points = j.value("min_ball_points", c.min_ball_points);
        c.out = j.value("out", c.out);
        c.budget_ms = j.value("budget_ms", c.budget_ms);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidInput, std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

ojson ExperimentConfig::to_json() const {
    ojson j;
    j["command"] = to_string(command);
    ojson s;
    s["kind"] = space_kind;
    if (space_kind == "torus") s["metric"] = metric;
    s["m"] = m;
    s["side"] = side;
    if (!points_csv.empty()) s["points_csv"] = points_csv;
    j["space"] = s;
    j["n"] = n;
    j["r"] = r;
    j["k"] = k;
    j["strategy"] = to_string(strategy);
    j["seed"] = seed;
    j["volumes"] = to_string(volumes);
    j["solver"] = solver == SolverPath::Auto ? "auto" : solver == SolverPath::Dense ? "dense" : "lanczos";
    j["test_function"] = test_function;
    j["mode"] = mode;
    j["dims"] = dims;
    j["pmax"] = pmax;
    j["min_ball_points"] = min_ball_points;
    j["out"] = out;
    j["budget_ms"] = budget_ms;
    return j;
}

SpaceDescriptor ExperimentConfig::space() const {
    if (space_kind == "torus") {
        if (metric == "linf") return SpaceDescriptor::torus_linf(m);
        if (metric == "euclid") return SpaceDescriptor::torus_euclid(m);
        fail(ErrorCode::InvalidInput, "torus metric must be linf or euclid");
    }
    if (space_kind == "hypercube") return SpaceDescriptor::hypercube(m, side);
    if (space_kind == "interval") return SpaceDescriptor::interval(side);
    if (space_kind == "sphere") return SpaceDescriptor::sphere2();
    if (space_kind == "custom") {
        require(!points_csv.empty(), "custom space needs points_csv");
        // ambient dimension and measure come from the file
        return SpaceDescriptor::custom_cloud(m, m, 1.0);
    }
    fail(ErrorCode::InvalidInput, "unknown space kind '" + space_kind + "'");
}

void ExperimentConfig::validate() const {
    require(m >= 1, "dimension m must be positive");
    require(side > 0.0 && std::isfinite(side), "side length must be positive");
    require(pmax >= 1, "pmax must be at least 1");
    require(min_ball_points >= 1, "min_ball_points must be at least 1");
    require(budget_ms >= 0.0, "budget must be nonnegative");
    for (std::size_t v : n) require(v >= 1, "sample counts must be positive");
    const SpaceDescriptor sp = space();
    if (command == Command::SincScan) {
        require(!dims.empty(), "sinc-scan needs at least one dimension");
        for (int d : dims) require(d >= 1 && d <= 6, "sinc-scan dimensions must lie in 1..6");
        for (double v : r) require(v > 0.0 && v <= 1.0, "sinc-scan radii must lie in (0, 1]");
        return;
    }
    require(!r.empty(), "at least one radius is required");
    if (sp.kind != SpaceKind::CustomCloud)
        for (double v : r)
            require(v > 0.0 && v < sp.diameter_bound(),
                    "radius " + format_double(v) + " outside (0, " + format_double(sp.diameter_bound()) + ")");
    if (command == Command::Converge || command == Command::L2Limit)
        for (std::size_t i = 1; i < r.size(); ++i) require(r[i] < r[i - 1], "r list must be strictly decreasing");
    if (n.size() > 1 && command != Command::Scaling)
        require(n.size() == r.size(), "n list must have one entry per radius");
}

double ResultRow::relative_error() const {
    if (std::isnan(reference)) return kNaN;
    return std::fabs(computed - reference) / std::max(reference, 1e-30);
}

std::vector<const ResultRow*> ResultTable::select(const std::string& quantity) const {
    std::vector<const ResultRow*> out;
    for (const auto& row : rows)
        if (row.quantity == quantity) out.push_back(&row);
    return out;
}

std::string ResultTable::to_csv() const {
    std::string s = "r,n,k,quantity,lambda_computed,reference_value,relative_error,residual,trend,flag\n";
    for (const auto& row : rows) {
        s += format_double(row.r) + ',' + std::to_string(row.n) + ',' + std::to_string(row.k) + ',' +
             csv_field(row.quantity) + ',' + format_double(row.computed) + ',' + format_double(row.reference) + ',' +
             format_double(row.relative_error()) + ',' + format_double(row.residual) + ',' +
             format_double(row.trend) + ',' + csv_field(row.flag) + '\n';
    }
    return s;
}

void ResultTable::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << to_csv();
    std::filesystem::path meta = path;
    meta += ".meta.json";
    std::ofstream m(meta, std::ios::binary);
    if (!m) fail(ErrorCode::Io, "cannot open " + meta.string() + " for writing");
    m << metadata.dump(2) << '\n';
    if (!out || !m) fail(ErrorCode::Io, "write to " + path.string() + " failed");
}

std::vector<ResultRow> parse_table_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty table");
    require(line.rfind("r,n,k,quantity,", 0) == 0, "unexpected table header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        require(f.size() == 10, "table row has " + std::to_string(f.size()) + " fields");
        ResultRow row;
        row.r = parse_number(f[0]);
        row.n = std::stoull(f[1]);
        row.k = std::stoull(f[2]);
        row.quantity = f[3];
        row.computed = parse_number(f[4]);
        row.reference = parse_number(f[5]);
        row.residual = parse_number(f[7]);
        row.trend = parse_number(f[8]);
        row.flag = f[9];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::size_t default_sample_count(const SpaceDescriptor& space, double r, SampleStrategy strategy,
                                 std::size_t per_ball) {
    require(space.has_analytic_volume(), "custom clouds take their size from the point file");
    require(r > 0.0 && r < space.diameter_bound(), "radius outside the valid range");
    const double vmin = analytic_ball_volume(space, smallest_ball_center(space), r);
    const double need = std::ceil(static_cast<double>(per_ball) * space.total_measure / vmin);
    require(need < 1e9, "radius too small for the sampling policy");
    auto n = static_cast<std::size_t>(need);
    if (strategy == SampleStrategy::Grid) {
        auto side = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / space.m) - 1e-9));
        std::size_t total = 1;
        for (int d = 0; d < space.m; ++d) total *= side;
        if (total < n) {
            ++side;
            total = 1;
            for (int d = 0; d < space.m; ++d) total *= side;
        }
        n = total;
    }
    return n;
}

ResultTable run_spectrum(const ExperimentConfig& cfg) {
    Runner run(cfg);
    const std::size_t K = cfg.k;
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        Instance inst = run.build(run.space(), run.resolve_n(r, idx), r);
        SpectralResult sr = eig_lowest(*inst.op, K, run.opts());
        run.record_instance(r, inst, &sr);
        auto ref = reference_values(inst.samples->space, K);
        for (std::size_t k = 0; k <= K; ++k) {
            ResultRow row;
            row.r = r;
            row.n = inst.samples->size();
            row.k = k;
            row.quantity = "lambda";
            row.computed = sr.eigenvalues[k];
            row.reference = ref[k];
            row.residual = sr.residuals[k];
            row.flag = sr.eigenvalues[k] < sr.essential_threshold ? "isolated" : "above-threshold";
            run.add(row, t0);
        }
    }
    return run.finish();
}

ResultTable run_convergence(const ExperimentConfig& cfg) {
    Runner run(cfg);
    if (run.space().kind == SpaceKind::CustomCloud)
        fail(ErrorCode::UnsupportedSpace, "convergence studies need a reference spectrum");
    const std::size_t K = cfg.k;
    auto ref = reference_values(run.space(), K);
    std::vector<double> prev(K + 1, kNaN);
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        Instance inst = run.build(run.space(), run.resolve_n(r, idx), r);
        SpectralResult sr = eig_lowest(*inst.op, K, run.opts());
        run.record_instance(r, inst, &sr);
        for (std::size_t k = 0; k <= K; ++k) {
            ResultRow row;
            row.r = r;
            row.n = inst.samples->size();
            row.k = k;
            row.quantity = "lambda";
            row.computed = sr.eigenvalues[k];
            row.reference = ref[k];
            row.residual = sr.residuals[k];
            const double err = row.relative_error();
            row.trend = err / prev[k];
            if (!std::isnan(prev[k]) && k > 0) row.flag = err < prev[k] ? "decreasing" : "not-decreasing";
            prev[k] = err;
            run.add(row, t0);
        }
    }
    return run.finish();
}

ResultTable run_l2limit(const ExperimentConfig& cfg) {
    Runner run(cfg);
    const double c = limit_constant(run.space());
    const bool linear = cfg.test_function == "linear";
    const auto k = static_cast<std::size_t>(std::max(cfg.mode, 0));
    double prev_err = kNaN, prev_norm = kNaN;
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        Instance inst = run.build(run.space(), run.resolve_n(r, idx), r);
        run.record_instance(r, inst, nullptr);
        TestFunction tf = evaluate_test_function(cfg.test_function, cfg.mode, *inst.samples);
        auto lf = inst.op->apply_amv(tf.f);
        std::vector<double> diff(lf.size());
        double sup = 0.0;
        for (std::size_t i = 0; i < lf.size(); ++i) {
            diff[i] = lf[i] - c * tf.laplacian[i];
            sup = std::max(sup, std::fabs(lf[i]));
        }
        const auto w = inst.op->weights();
        const double err = l2_norm_w(w, diff);
        const double nrm = l2_norm_w(w, lf);

        ResultRow base;
        base.r = r;
        base.n = inst.samples->size();
        base.k = k;

        ResultRow e = base;
        e.quantity = "l2_error";
        e.computed = err;
        e.trend = err / prev_err;
        if (!linear && !std::isnan(prev_err)) e.flag = err < prev_err ? "decreasing" : "not-decreasing";
        run.add(e, t0);

        ResultRow q = base;
        q.quantity = "l2_norm";
        q.computed = nrm;
        q.trend = nrm / prev_norm;
        if (linear && !std::isnan(prev_norm)) q.flag = nrm >= 1.25 * prev_norm ? "growth>=1.25" : "growth<1.25";
        run.add(q, t0);

        ResultRow s = base;
        s.quantity = "sup_norm";
        s.computed = sup;
        run.add(s, t0);

        prev_err = err;
        prev_norm = nrm;
    }
    return run.finish();
}

ResultTable run_oracle_torus(const ExperimentConfig& cfg) {
    Runner run(cfg);
    require(run.space().kind == SpaceKind::FlatTorusLinf, "oracle-torus needs the d_inf torus");
    require(cfg.strategy == SampleStrategy::Grid, "oracle-torus needs grid sampling");
    require(cfg.volumes == VolumeMode::Analytic, "oracle-torus needs analytic volumes");
    const std::size_t K = cfg.k;
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        require(r < 1.0, "oracle-torus needs r < 1");
        Instance inst = run.build(run.space(), run.resolve_n(r, idx), r);
        SpectralResult sr = eig_lowest(*inst.op, K, run.opts());
        run.record_instance(r, inst, &sr);
        SincSpectrum ref = torus_linf_amv_spectrum(cfg.m, r, cfg.pmax);
        require(ref.entries.size() > K, "pmax too small for the requested k");

        double worst = 0.0;
        for (std::size_t k = 0; k <= K; ++k) {
            ResultRow row;
            row.r = r;
            row.n = inst.samples->size();
            row.k = k;
            row.quantity = "lambda";
            row.computed = sr.eigenvalues[k];
            row.reference = ref.entries[k].value;
            row.residual = sr.residuals[k];
            row.flag = mode_label(ref.entries[k].p);
            if (k > 0) worst = std::max(worst, row.relative_error());
            run.add(row, t0);
        }
        ResultRow mm;
        mm.r = r;
        mm.n = inst.samples->size();
        mm.k = K;
        mm.quantity = "max_rel_mismatch";
        mm.computed = worst;
        run.add(mm, t0);

        std::vector<double> got(sr.eigenvalues.begin() + 1, sr.eigenvalues.end());
        std::vector<double> want;
        for (std::size_t k = 1; k <= K; ++k) want.push_back(ref.entries[k].value);
        auto g = group_sizes(got, 1e-9), h = group_sizes(want, 1e-9);
        ResultRow mp = mm;
        mp.quantity = "multiplicity_pattern";
        mp.computed = g == h ? 1.0 : 0.0;
        mp.flag = (g == h ? "match:" : "mismatch:") + join_ints(g) + "|" + join_ints(h);
        run.add(mp, t0);
    }
    return run.finish();
}

ResultTable run_scaling(const ExperimentConfig& cfg) {
    Runner run(cfg);
    require(run.space().kind == SpaceKind::Hypercube, "scaling needs a hypercube space");
    require(cfg.strategy == SampleStrategy::Grid, "scaling needs geometrically scaled grids");
    if (cfg.n.size() > 1)
        for (std::size_t v : cfg.n) require(v == cfg.n.front(), "scaling pairs must use the same n");
    const double b = cfg.side;
    const SpaceDescriptor unit = SpaceDescriptor::hypercube(cfg.m, 1.0);
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        const double r1 = r / b;
        require(r1 < unit.diameter_bound(), "r/b outside the unit cube's radius range");
        const std::size_t n = cfg.n.empty() ? run.resolve_n(r, idx) : cfg.n.front();
        Instance scaled = run.build(run.space(), n, r);
        Instance base = run.build(unit, n, r1);
        SpectralResult a = eig_lowest(*scaled.op, 1, run.opts());
        SpectralResult u = eig_lowest(*base.op, 1, run.opts());
        run.record_instance(r, scaled, &a);
        run.record_instance(r1, base, &u);

        ResultRow row;
        row.r = r;
        row.n = n;
        row.k = 1;
        row.quantity = "lambda_1_scaled";
        row.computed = a.eigenvalues[1];
        row.reference = u.eigenvalues[1] / (b * b);
        row.residual = a.residuals[1];
        row.flag = row.relative_error() <= 1e-10 ? "exact" : "mismatch";
        run.add(row, t0);

        ResultRow ur;
        ur.r = r;
        ur.n = n;
        ur.k = 1;
        ur.quantity = "lambda_1_unit";
        ur.computed = u.eigenvalues[1];
        ur.residual = u.residuals[1];
        ur.flag = "r=" + format_double(r1);
        run.add(ur, t0);
    }
    return run.finish();
}

ResultTable run_diagnostics(const ExperimentConfig& cfg) {
    Runner run(cfg);
    for (std::size_t idx = 0; idx < cfg.r.size(); ++idx) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        const double r = cfg.r[idx];
        Instance inst = run.build(run.space(), run.resolve_n(r, idx), r);
        const AmvOperator& op = *inst.op;
        const std::size_t n = inst.samples->size();
        const double rho = spectral_radius(op, run.opts());
        run.record_instance(r, inst, nullptr);

        auto emit = [&](const std::string& q, double v, double ref, const std::string& flag) {
            ResultRow row;
            row.r = r;
            row.n = n;
            row.quantity = q;
            row.computed = v;
            row.reference = ref;
            row.flag = flag;
            run.add(row, t0);
        };
        emit("condition_ir", op.condition_ir(), kNaN, "");
        emit("volume_min", op.min_volume(), kNaN, "");
        emit("volume_max", op.max_volume(), kNaN, "");

        const double cap = std::pow(4.0, inst.samples->space.m);
        if (2.0 * r < inst.samples->space.diameter_bound() || inst.samples->space.kind == SpaceKind::CustomCloud) {
            BallIndex big = ball_index(*inst.samples, 2.0 * r);
            VolumeField v2 = ball_volume(*inst.samples, big, cfg.volumes);
            double worst = 0.0;
            const auto& v1 = op.volumes().values;
            for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, v2.values[i] / v1[i]);
            emit("doubling_ratio", worst, cap, worst <= cap ? "ok" : "violation");
        } else {
            emit("doubling_ratio", kNaN, cap, "skipped");
        }

        const double bound = op.norm_bound();
        emit("norm_bound", bound, kNaN, "");
        emit("spectral_radius", rho, bound, rho <= bound ? "ok" : "violation");
        const double lower = 1.0 / (2.0 * r * r);
        const double thr = op.essential_threshold();
        emit("essential_threshold", thr, lower, thr >= lower ? "ok" : "violation");
        const double rm = std::pow(r, inst.samples->space.m);
        emit("ahlfors_ratio", (op.max_volume() / rm) / (op.min_volume() / rm), kNaN, "");
    }
    return run.finish();
}

ResultTable run_sinc_scan(const ExperimentConfig& cfg) {
    Runner run(cfg);
    const std::vector<double> grid = cfg.r.empty() ? default_scan_grid() : cfg.r;
    for (int m : cfg.dims) {
        if (!run.proceed()) break;
        auto t0 = Clock::now();
        SincScan s = sinc_scan(m, grid, cfg.pmax);
        ResultRow row;
        row.r = s.argmin_r;
        row.n = 0;
        row.k = static_cast<std::size_t>(m);
        row.quantity = "sinc_min";
        row.computed = s.minimum;
        row.trend = static_cast<double>(s.argmin_pinf);
        row.flag = mode_label(s.argmin_p) + (s.minimum > 0.5 ? " above-half" : " below-half");
        run.add(row, t0);
    }
    return run.finish();
}

ResultTable run(const ExperimentConfig& cfg) {
    try {
        switch (cfg.command) {
            case Command::Spectrum: return run_spectrum(cfg);
            case Command::Converge: return run_convergence(cfg);
            case Command::L2Limit: return run_l2limit(cfg);
            case Command::OracleTorus: return run_oracle_torus(cfg);
            case Command::Scaling: return run_scaling(cfg);
            case Command::Diagnostics: return run_diagnostics(cfg);
            case Command::SincScan: return run_sinc_scan(cfg);
        }
    } catch (const ConvergenceFailure& e) {
        throw ConvergenceFailure(std::string(to_string(cfg.command)) + ": " + e.what(), e.best_residuals());
    } catch (const Error& e) {
        throw Error(e.code(), std::string(to_string(cfg.command)) + ": " + e.what());
    }
    fail(ErrorCode::InvalidInput, "unknown command");
}

}  // namespace amv
