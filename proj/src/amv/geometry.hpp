#pragma once

// Model metric measure spaces, quadrature samples, open-ball queries and
// ball volumes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace amv {

enum class SpaceKind { FlatTorusLinf, FlatTorusEuclid, Hypercube, Interval, Sphere2, CustomCloud };

enum class SampleStrategy { Grid, Iid, Fibonacci, Imported };

enum class VolumeMode { Empirical, Analytic };

const char* to_string(SpaceKind kind) noexcept;
const char* to_string(SampleStrategy s) noexcept;
const char* to_string(VolumeMode v) noexcept;
SampleStrategy parse_strategy(const std::string& s);
VolumeMode parse_volume_mode(const std::string& s);

struct SpaceDescriptor {
    SpaceKind kind = SpaceKind::FlatTorusLinf;
    int m = 1;                  // intrinsic dimension
    int ambient = 1;            // coordinates stored per point
    double side = 1.0;          // hypercube side b / interval length L
    double total_measure = 1.0;
    bool has_boundary = false;

    static SpaceDescriptor torus_linf(int m);
    static SpaceDescriptor torus_euclid(int m);
    static SpaceDescriptor hypercube(int m, double b);
    static SpaceDescriptor interval(double length);
    static SpaceDescriptor sphere2();
    // Ambient Euclidean cloud in R^ambient; m is the intrinsic dimension used
    // for the limit constant. total_measure is fixed once weights are known.
    static SpaceDescriptor custom_cloud(int ambient, int m, double total_measure);

    // Upper bound on the diameter; ball radii must stay below it.
    double diameter_bound() const;
    bool has_analytic_volume() const { return kind != SpaceKind::CustomCloud; }
    bool operator==(const SpaceDescriptor&) const = default;
};

// Metric distance between two points given in the space's stored coordinates.
double distance(const SpaceDescriptor& space, std::span<const double> x, std::span<const double> y);

// Unchecked variant used in inner loops; both pointers address `space.ambient` doubles.
double distance_unchecked(const SpaceDescriptor& space, const double* x, const double* y) noexcept;

// Open-ball predicate d < r. Distances within a relative 1e-12 of r count as
// lying on the sphere and are excluded, so lattice points whose exact distance
// equals r are treated consistently regardless of rounding.
inline constexpr double kSphereTieTolerance = 1e-12;
inline bool inside_open_ball(double d, double r) noexcept { return d < r * (1.0 - kSphereTieTolerance); }

struct SampleSet {
    SpaceDescriptor space;
    std::vector<double> coords;   // size() * space.ambient, row-major
    std::vector<double> weights;
    SampleStrategy strategy = SampleStrategy::Grid;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return weights.size(); }
    int dim() const noexcept { return space.ambient; }
    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * static_cast<std::size_t>(space.ambient), static_cast<std::size_t>(space.ambient)};
    }
    const double* point_ptr(std::size_t i) const noexcept {
        return coords.data() + i * static_cast<std::size_t>(space.ambient);
    }

    // Checks positivity of weights, total mass and fundamental-domain membership.
    void validate() const;
};

SampleSet sample(const SpaceDescriptor& space, std::size_t n, SampleStrategy strategy, std::uint64_t seed);

// CSV with header x1,...,xD,weight. The intrinsic dimension defaults to D.
SampleSet load_cloud_csv(const std::filesystem::path& path, int intrinsic_m = 0);
// Writes the CSV plus a `<path>.json` sidecar {space, n, strategy, seed}.
void save_samples(const SampleSet& samples, const std::filesystem::path& path);

/// Open-ball adjacency in CSR form. Row i lists, in ascending order, every j
/// with d(x_i, x_j) < r; i itself is always present and the relation is symmetric.
class BallIndex {
public:
    BallIndex() = default;
    BallIndex(double r, std::vector<std::size_t> offsets, std::vector<std::uint32_t> indices)
        : r_(r), offsets_(std::move(offsets)), indices_(std::move(indices)) {}

    double radius() const noexcept { return r_; }
    std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t nnz() const noexcept { return indices_.size(); }
    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {indices_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
    const std::vector<std::uint32_t>& indices() const noexcept { return indices_; }
    bool operator==(const BallIndex&) const = default;

private:
    double r_ = 0.0;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> indices_;
};

// Cell-list search; falls back to the quadratic scan when cells would not help.
BallIndex ball_index(const SampleSet& samples, double r);
// Reference O(n^2) scan with the same predicate.
BallIndex ball_index_bruteforce(const SampleSet& samples, double r);

// True when the ball graph has a single connected component.
bool is_connected(const BallIndex& idx);

struct VolumeField {
    VolumeMode mode = VolumeMode::Empirical;
    std::vector<double> values;
    double r = 0.0;
};

VolumeField ball_volume(const SampleSet& samples, const BallIndex& idx, VolumeMode mode);

// Closed-form measure of B_r(x) for the model spaces.
double analytic_ball_volume(const SpaceDescriptor& space, std::span<const double> x, double r);

// Volume of the Euclidean unit ball in R^m.
double unit_ball_volume(int m);

}  // namespace amv
