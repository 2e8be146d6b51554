#include "amv/geometry.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "amv/error.hpp"
#include "amv/format.hpp"
#include "amv/parallel.hpp"
#include "json.hpp"

namespace amv {

const char* to_string(SpaceKind kind) noexcept {
    switch (kind) {
        case SpaceKind::FlatTorusLinf: return "torus-linf";
        case SpaceKind::FlatTorusEuclid: return "torus-euclid";
        case SpaceKind::Hypercube: return "hypercube";
        case SpaceKind::Interval: return "interval";
        case SpaceKind::Sphere2: return "sphere";
        case SpaceKind::CustomCloud: return "custom";
    }
    return "unknown";
}

const char* to_string(SampleStrategy s) noexcept {
    switch (s) {
        case SampleStrategy::Grid: return "grid";
        case SampleStrategy::Iid: return "iid";
        case SampleStrategy::Fibonacci: return "fibonacci";
        case SampleStrategy::Imported: return "imported";
    }
    return "unknown";
}

const char* to_string(VolumeMode v) noexcept { return v == VolumeMode::Empirical ? "empirical" : "analytic"; }

SampleStrategy parse_strategy(const std::string& s) {
    if (s == "grid") return SampleStrategy::Grid;
    if (s == "iid") return SampleStrategy::Iid;
    if (s == "fibonacci") return SampleStrategy::Fibonacci;
    fail(ErrorCode::InvalidInput, "unknown sampling strategy '" + s + "'");
}

VolumeMode parse_volume_mode(const std::string& s) {
    if (s == "empirical") return VolumeMode::Empirical;
    if (s == "analytic") return VolumeMode::Analytic;
    fail(ErrorCode::InvalidInput, "unknown volume mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Spaces

SpaceDescriptor SpaceDescriptor::torus_linf(int m) {
    require(m >= 1, "torus dimension must be positive");
    return {SpaceKind::FlatTorusLinf, m, m, 2.0, 1.0, false};
}

SpaceDescriptor SpaceDescriptor::torus_euclid(int m) {
    require(m >= 1, "torus dimension must be positive");
    return {SpaceKind::FlatTorusEuclid, m, m, 2.0, 1.0, false};
}

SpaceDescriptor SpaceDescriptor::hypercube(int m, double b) {
    require(m >= 1, "hypercube dimension must be positive");
    require(b > 0.0 && std::isfinite(b), "hypercube side must be positive");
    return {SpaceKind::Hypercube, m, m, b, std::pow(b, m), true};
}

SpaceDescriptor SpaceDescriptor::interval(double length) {
    require(length > 0.0 && std::isfinite(length), "interval length must be positive");
    return {SpaceKind::Interval, 1, 1, length, length, true};
}

SpaceDescriptor SpaceDescriptor::sphere2() {
    return {SpaceKind::Sphere2, 2, 3, 1.0, 4.0 * std::numbers::pi, false};
}

SpaceDescriptor SpaceDescriptor::custom_cloud(int ambient, int m, double total_measure) {
    require(ambient >= 1, "cloud needs at least one coordinate");
    require(m >= 1, "intrinsic dimension must be positive");
    require(total_measure > 0.0, "cloud total measure must be positive");
    // side holds the bounding-box diagonal once points are known
    return {SpaceKind::CustomCloud, m, ambient, 0.0, total_measure, false};
}

double SpaceDescriptor::diameter_bound() const {
    switch (kind) {
        case SpaceKind::FlatTorusLinf:
        case SpaceKind::FlatTorusEuclid: return 1.0;  // balls must embed in the fundamental domain
        case SpaceKind::Hypercube:
        case SpaceKind::Interval: return side;
        case SpaceKind::Sphere2: return std::numbers::pi;
        case SpaceKind::CustomCloud: return side > 0.0 ? side : std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double distance_unchecked(const SpaceDescriptor& space, const double* x, const double* y) noexcept {
    switch (space.kind) {
        case SpaceKind::FlatTorusLinf: {
            double d = 0.0;
            for (int i = 0; i < space.m; ++i) {
                double t = std::fabs(x[i] - y[i]);
                d = std::max(d, std::min(t, 2.0 - t));
            }
            return d;
        }
        case SpaceKind::FlatTorusEuclid: {
            double s = 0.0;
            for (int i = 0; i < space.m; ++i) {
                double t = std::fabs(x[i] - y[i]);
                t = std::min(t, 2.0 - t);
                s += t * t;
            }
            return std::sqrt(s);
        }
        case SpaceKind::Hypercube:
        case SpaceKind::Interval: {
            double d = 0.0;
            for (int i = 0; i < space.m; ++i) d = std::max(d, std::fabs(x[i] - y[i]));
            return d;
        }
        case SpaceKind::Sphere2: {
            double c = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
            double cx = x[1] * y[2] - x[2] * y[1];
            double cy = x[2] * y[0] - x[0] * y[2];
            double cz = x[0] * y[1] - x[1] * y[0];
            return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), c);
        }
        case SpaceKind::CustomCloud: {
            double s = 0.0;
            for (int i = 0; i < space.ambient; ++i) {
                double t = x[i] - y[i];
                s += t * t;
            }
            return std::sqrt(s);
        }
    }
    return 0.0;
}

double distance(const SpaceDescriptor& space, std::span<const double> x, std::span<const double> y) {
    auto dim = static_cast<std::size_t>(space.ambient);
    if (x.size() != dim || y.size() != dim)
        fail(ErrorCode::InvalidInput, "point dimension does not match the space (expected " +
                                          std::to_string(dim) + ")");
    return distance_unchecked(space, x.data(), y.data());
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::size_t grid_side(std::size_t n, int m) {
    auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / m)));
    for (std::size_t c : {k > 0 ? k - 1 : 0, k, k + 1}) {
        if (c == 0) continue;
        std::size_t p = 1;
        for (int i = 0; i < m; ++i) p *= c;
        if (p == n) return c;
    }
    fail(ErrorCode::InvalidInput, "grid sampling needs n = k^" + std::to_string(m) + ", got n = " + std::to_string(n));
}

}  // namespace

void SampleSet::validate() const {
    require(!weights.empty(), "sample set is empty");
    require(coords.size() == weights.size() * static_cast<std::size_t>(space.ambient),
            "coordinate array does not match the point count");
    long double total = 0.0L;
    for (double w : weights) {
        require(w > 0.0 && std::isfinite(w), "sample weights must be positive");
        total += w;
    }
    require(std::fabs(static_cast<double>(total) - space.total_measure) <= 1e-12 * space.total_measure,
            "sample weights do not sum to the total measure");
    for (std::size_t i = 0; i < size(); ++i) {
        const double* x = point_ptr(i);
        switch (space.kind) {
            case SpaceKind::FlatTorusLinf:
            case SpaceKind::FlatTorusEuclid:
                for (int c = 0; c < space.m; ++c) require(x[c] >= -1.0 && x[c] < 1.0, "torus point outside [-1,1)^m");
                break;
            case SpaceKind::Hypercube:
            case SpaceKind::Interval:
                for (int c = 0; c < space.m; ++c)
                    require(x[c] >= 0.0 && x[c] <= space.side, "point outside the hypercube");
                break;
            case SpaceKind::Sphere2: {
                double nrm = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                require(std::fabs(nrm - 1.0) <= 1e-12, "sphere point is not a unit vector");
                break;
            }
            case SpaceKind::CustomCloud:
                for (int c = 0; c < space.ambient; ++c) require(std::isfinite(x[c]), "cloud coordinate is not finite");
                break;
        }
    }
}

SampleSet sample(const SpaceDescriptor& space, std::size_t n, SampleStrategy strategy, std::uint64_t seed) {
    require(n >= 2, "need at least two samples");
    if (space.kind == SpaceKind::CustomCloud)
        fail(ErrorCode::UnsupportedStrategy, "custom clouds are imported, not sampled");
    if (strategy == SampleStrategy::Fibonacci && space.kind != SpaceKind::Sphere2)
        fail(ErrorCode::UnsupportedStrategy, "fibonacci sampling is only defined on the sphere");
    if (strategy == SampleStrategy::Grid && space.kind == SpaceKind::Sphere2)
        fail(ErrorCode::UnsupportedStrategy, "the sphere has no grid sampler; use fibonacci or iid");
    if (strategy == SampleStrategy::Imported)
        fail(ErrorCode::UnsupportedStrategy, "imported is not a sampling strategy");

    SampleSet s;
    s.space = space;
    s.strategy = strategy;
    s.seed = seed;
    s.coords.resize(n * static_cast<std::size_t>(space.ambient));
    s.weights.assign(n, space.total_measure / static_cast<double>(n));

    const int m = space.m;
    const bool torus = space.kind == SpaceKind::FlatTorusLinf || space.kind == SpaceKind::FlatTorusEuclid;

    if (strategy == SampleStrategy::Grid) {
        std::size_t k = grid_side(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t rest = i;
            for (int c = m - 1; c >= 0; --c) {
                std::size_t q = rest % k;
                rest /= k;
                // cell midpoints; the torus chart is [-1,1), cubes are [0,b]
                double u = (2.0 * static_cast<double>(q) + 1.0) / (2.0 * static_cast<double>(k));
                s.coords[i * m + c] = torus ? 2.0 * u - 1.0 : space.side * u;
            }
        }
    } else if (strategy == SampleStrategy::Iid) {
        std::mt19937_64 g(seed);
        if (space.kind == SpaceKind::Sphere2) {
            for (std::size_t i = 0; i < n; ++i) {
                double z = 2.0 * uniform01(g) - 1.0;
                double phi = 2.0 * std::numbers::pi * uniform01(g);
                double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                s.coords[3 * i] = rho * std::cos(phi);
                s.coords[3 * i + 1] = rho * std::sin(phi);
                s.coords[3 * i + 2] = z;
            }
        } else {
            for (double& x : s.coords) {
                double u = uniform01(g);
                x = torus ? 2.0 * u - 1.0 : space.side * u;
            }
        }
    } else {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < n; ++i) {
            double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
            double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = golden * static_cast<double>(i);
            s.coords[3 * i] = rho * std::cos(phi);
            s.coords[3 * i + 1] = rho * std::sin(phi);
            s.coords[3 * i + 2] = z;
        }
    }
    return s;
}

SampleSet load_cloud_csv(const std::filesystem::path& path, int intrinsic_m) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open point cloud '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::InvalidInput, "point cloud file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    require(header.size() >= 2 && header.back() == "weight", "cloud header must be x1,...,xD,weight");
    const int dim = static_cast<int>(header.size()) - 1;
    for (int c = 0; c < dim; ++c)
        require(header[c] == "x" + std::to_string(c + 1), "cloud header must be x1,...,xD,weight");

    SampleSet s;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, comma, v);
            if (ec != std::errc() || ptr != comma)
                fail(ErrorCode::InvalidInput, "malformed number on line " + std::to_string(lineno));
            row.push_back(v);
            p = comma + 1;
        }
        require(row.size() == header.size(), "wrong column count on line " + std::to_string(lineno));
        s.coords.insert(s.coords.end(), row.begin(), row.end() - 1);
        s.weights.push_back(row.back());
    }
    require(s.weights.size() >= 2, "point cloud needs at least two points");
    long double total = 0.0L;
    for (double w : s.weights) {
        require(w > 0.0, "cloud weights must be positive");
        total += w;
    }
    s.space = SpaceDescriptor::custom_cloud(dim, intrinsic_m > 0 ? intrinsic_m : dim, static_cast<double>(total));
    double diag = 0.0;
    for (int c = 0; c < dim; ++c) {
        double lo = s.coords[c], hi = s.coords[c];
        for (std::size_t i = 0; i < s.size(); ++i) {
            lo = std::min(lo, s.coords[i * dim + c]);
            hi = std::max(hi, s.coords[i * dim + c]);
        }
        diag += (hi - lo) * (hi - lo);
    }
    s.space.side = std::sqrt(diag);
    s.strategy = SampleStrategy::Imported;
    s.validate();
    return s;
}

void save_samples(const SampleSet& samples, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    const int dim = samples.dim();
    for (int c = 0; c < dim; ++c) out << 'x' << (c + 1) << ',';
    out << "weight\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (int c = 0; c < dim; ++c) out << format_double(samples.point(i)[c]) << ',';
        out << format_double(samples.weights[i]) << '\n';
    }
    nlohmann::ordered_json meta;
    meta["space"] = {{"kind", to_string(samples.space.kind)},
                     {"m", samples.space.m},
                     {"ambient", samples.space.ambient},
                     {"side", samples.space.side},
                     {"total_measure", samples.space.total_measure},
                     {"has_boundary", samples.space.has_boundary}};
    meta["n"] = samples.size();
    meta["strategy"] = to_string(samples.strategy);
    meta["seed"] = samples.seed;
    std::ofstream side(path.string() + ".json");
    if (!side) fail(ErrorCode::Io, "cannot write sidecar for '" + path.string() + "'");
    side << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Ball queries

namespace {

void check_radius(const SampleSet& samples, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidInput, "ball radius must be positive");
    if (r >= samples.space.diameter_bound())
        fail(ErrorCode::InvalidInput, "ball radius " + format_double(r) + " is not below the diameter bound " +
                                          format_double(samples.space.diameter_bound()));
}

BallIndex flatten(double r, std::vector<std::vector<std::uint32_t>>& rows) {
    std::vector<std::size_t> offsets(rows.size() + 1, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) offsets[i + 1] = offsets[i] + rows[i].size();
    std::vector<std::uint32_t> indices;
    indices.reserve(offsets.back());
    for (auto& row : rows) indices.insert(indices.end(), row.begin(), row.end());
    return BallIndex(r, std::move(offsets), std::move(indices));
}

struct CellAxis {
    double lo = 0.0;
    double width = 1.0;
    std::size_t count = 1;
    bool periodic = false;

    std::size_t cell_of(double x) const {
        double c = std::floor((x - lo) / width);
        if (c < 0.0) return 0;
        auto i = static_cast<std::size_t>(c);
        return std::min(i, count - 1);
    }
};

}  // namespace

BallIndex ball_index_bruteforce(const SampleSet& samples, double r) {
    check_radius(samples, r);
    const std::size_t n = samples.size();
    std::vector<std::vector<std::uint32_t>> rows(n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j)
            if (inside_open_ball(distance_unchecked(samples.space, samples.point_ptr(i), samples.point_ptr(j)), r))
                rows[i].push_back(static_cast<std::uint32_t>(j));
    });
    return flatten(r, rows);
}

BallIndex ball_index(const SampleSet& samples, double r) {
    check_radius(samples, r);
    const auto& sp = samples.space;
    const std::size_t n = samples.size();
    const int dims = sp.ambient;
    if (dims > 3 || n < 64) return ball_index_bruteforce(samples, r);

    // Every metric here bounds each coordinate difference by the distance
    // (chord <= arc on the sphere), so cells of width >= r see all neighbours.
    std::vector<CellAxis> axes(dims);
    const bool torus = sp.kind == SpaceKind::FlatTorusLinf || sp.kind == SpaceKind::FlatTorusEuclid;
    const auto cap = static_cast<std::size_t>(std::max(1.0, std::floor(std::pow(4.0 * n, 1.0 / dims))));
    for (int c = 0; c < dims; ++c) {
        CellAxis& a = axes[c];
        double hi;
        if (torus) {
            a.lo = -1.0, hi = 1.0, a.periodic = true;
        } else if (sp.kind == SpaceKind::Sphere2) {
            a.lo = -1.0, hi = 1.0;
        } else if (sp.kind == SpaceKind::CustomCloud) {
            a.lo = hi = samples.coords[c];
            for (std::size_t i = 0; i < n; ++i) {
                a.lo = std::min(a.lo, samples.coords[i * dims + c]);
                hi = std::max(hi, samples.coords[i * dims + c]);
            }
        } else {
            a.lo = 0.0, hi = sp.side;
        }
        double extent = std::max(hi - a.lo, r);
        a.count = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(extent / r)), 1, cap);
        a.width = extent / static_cast<double>(a.count);
    }

    std::size_t ncells = 1;
    for (auto& a : axes) ncells *= a.count;
    std::vector<std::size_t> cell_of_point(n);
    std::vector<std::size_t> start(ncells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t id = 0;
        for (int c = 0; c < dims; ++c) id = id * axes[c].count + axes[c].cell_of(samples.point_ptr(i)[c]);
        cell_of_point[i] = id;
        ++start[id + 1];
    }
    for (std::size_t c = 0; c < ncells; ++c) start[c + 1] += start[c];
    std::vector<std::uint32_t> members(n);
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) members[fill[cell_of_point[i]]++] = static_cast<std::uint32_t>(i);
    }

    std::vector<std::vector<std::uint32_t>> rows(n);
    parallel_for(n, [&](std::size_t i) {
        const double* x = samples.point_ptr(i);
        std::array<std::size_t, 3> home{};
        for (int c = 0; c < dims; ++c) home[c] = axes[c].cell_of(x[c]);
        std::vector<std::size_t> cells;
        std::array<int, 3> off{-1, -1, -1};
        for (;;) {
            std::size_t id = 0;
            bool valid = true;
            for (int c = 0; c < dims; ++c) {
                auto count = static_cast<long long>(axes[c].count);
                long long q = static_cast<long long>(home[c]) + off[c];
                if (axes[c].periodic) {
                    q = ((q % count) + count) % count;
                } else if (q < 0 || q >= count) {
                    valid = false;
                    break;
                }
                id = id * axes[c].count + static_cast<std::size_t>(q);
            }
            if (valid) cells.push_back(id);
            int c = 0;
            while (c < dims && off[c] == 1) off[c++] = -1;
            if (c == dims) break;
            ++off[c];
        }
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        auto& row = rows[i];
        for (std::size_t cell : cells)
            for (std::size_t p = start[cell]; p < start[cell + 1]; ++p) {
                std::uint32_t j = members[p];
                if (inside_open_ball(distance_unchecked(sp, x, samples.point_ptr(j)), r)) row.push_back(j);
            }
        std::sort(row.begin(), row.end());
    });
    return flatten(r, rows);
}

bool is_connected(const BallIndex& idx) {
    const std::size_t n = idx.size();
    if (n == 0) return true;
    std::vector<char> seen(n, 0);
    std::vector<std::uint32_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        std::uint32_t i = stack.back();
        stack.pop_back();
        for (std::uint32_t j : idx.neighbors(i))
            if (!seen[j]) {
                seen[j] = 1;
                ++reached;
                stack.push_back(j);
            }
    }
    return reached == n;
}

double unit_ball_volume(int m) {
    require(m >= 1, "dimension must be positive");
    return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

double analytic_ball_volume(const SpaceDescriptor& space, std::span<const double> x, double r) {
    require(r > 0.0, "ball radius must be positive");
    require(x.size() == static_cast<std::size_t>(space.ambient), "point dimension does not match the space");
    switch (space.kind) {
        case SpaceKind::FlatTorusLinf:
            require(r <= 1.0, "analytic torus volumes need r <= 1");
            return std::pow(r, space.m);
        case SpaceKind::FlatTorusEuclid:
            require(r <= 1.0, "analytic torus volumes need r <= 1");
            return unit_ball_volume(space.m) * std::pow(r, space.m) / std::pow(2.0, space.m);
        case SpaceKind::Hypercube:
        case SpaceKind::Interval: {
            double v = 1.0;
            for (int c = 0; c < space.m; ++c) v *= std::min(x[c] + r, space.side) - std::max(x[c] - r, 0.0);
            return v;
        }
        case SpaceKind::Sphere2:
            return 2.0 * std::numbers::pi * (1.0 - std::cos(std::min(r, std::numbers::pi)));
        case SpaceKind::CustomCloud:
            break;
    }
    fail(ErrorCode::UnsupportedMode, "custom clouds have no analytic ball volume");
}

VolumeField ball_volume(const SampleSet& samples, const BallIndex& idx, VolumeMode mode) {
    require(idx.size() == samples.size(), "ball index and samples differ in size");
    if (mode == VolumeMode::Analytic && !samples.space.has_analytic_volume())
        fail(ErrorCode::UnsupportedMode, "custom clouds have no analytic ball volume");
    VolumeField vf{mode, std::vector<double>(samples.size()), idx.radius()};
    parallel_for(samples.size(), [&](std::size_t i) {
        if (mode == VolumeMode::Empirical) {
            long double v = 0.0L;
            for (std::uint32_t j : idx.neighbors(i)) v += samples.weights[j];
            vf.values[i] = static_cast<double>(v);
        } else {
            vf.values[i] = analytic_ball_volume(samples.space, samples.point(i), idx.radius());
        }
    });
    return vf;
}

}  // namespace amv
