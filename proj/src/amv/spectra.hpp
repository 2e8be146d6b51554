#pragma once

// Low spectrum of -Δ in the weighted space L^2(w).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amv/amv_operator.hpp"

namespace amv {

/// Unweighted symmetric form S = D^{1/2} (-Δ) D^{-1/2}, D = diag(w), stored
/// as CSR over the ball graph. Eigenvalues of S are those of -Δ on L^2(w);
/// an eigenvector v of S maps back to f = D^{-1/2} v.
class SymmetrizedOperator {
public:
    explicit SymmetrizedOperator(const AmvOperator& op);

    std::size_t size() const noexcept { return sqrt_w_.size(); }
    void apply(std::span<const double> v, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> v) const;
    // Column-major n x n.
    std::vector<double> to_dense() const;
    std::vector<double> to_weighted(std::span<const double> v) const;   // D^{-1/2} v
    std::vector<double> from_weighted(std::span<const double> f) const; // D^{1/2} f

    const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
    const std::vector<std::uint32_t>& indices() const noexcept { return cols_; }
    const std::vector<double>& values() const noexcept { return vals_; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> vals_;
    std::vector<double> sqrt_w_;
};

SymmetrizedOperator symmetrize(const AmvOperator& op);

enum class SolverPath { Auto, Dense, Lanczos };

struct EigOptions {
    SolverPath path = SolverPath::Auto;
    std::size_t dense_limit = 4096;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;        // relative residual for the Krylov path
    std::size_t max_restarts = 0;   // 0: 10 k + 200
    bool spectral_radius = true;
};

struct SpectralResult {
    double r = 0.0;
    std::vector<double> eigenvalues;                 // ascending
    std::vector<std::vector<double>> eigenvectors;   // w-orthonormal
    std::vector<double> residuals;                   // ||(-Δ - λ) f||_{2,w}
    double essential_threshold = 0.0;
    double spectral_radius = 0.0;                    // largest eigenvalue of -Δ
    bool connected = true;
    std::string solver;
    std::size_t matvecs = 0;

    // Eigenvalues strictly below the essential-spectrum threshold.
    std::vector<bool> isolated() const;
};

// Lowest k+1 eigenpairs of -Δ.
SpectralResult eig_lowest(const AmvOperator& op, std::size_t k, const EigOptions& opts = {});

// CSV `k,lambda,residual` plus `<path>.json` {r, n, space, volume_mode,
// essential_threshold}; with `vectors_path` set, eigenvectors go there one
// column per eigenpair.
void save_spectrum(const SpectralResult& res, const AmvOperator& op, const std::filesystem::path& path,
                   const std::filesystem::path& vectors_path = {});

// Largest eigenvalue of -Δ.
double spectral_radius(const AmvOperator& op, const EigOptions& opts = {});

// Ẽ(f) / <f, f>_w
double rayleigh(const AmvOperator& op, std::span<const double> f);

// sup of the Rayleigh quotient over span(basis).
double subspace_max_rayleigh(const AmvOperator& op, const std::vector<std::vector<double>>& basis);

struct TentBound {
    double bound = 0.0;                       // max_i Ẽ(f_i)
    double rbar = 0.0;                        // min pairwise center distance / 4
    std::vector<double> energies;
    std::vector<std::vector<double>> cross;   // Ẽ(f_i, f_j)
    std::vector<std::vector<double>> tents;   // normalized f_i
};

// Upper bound for the min-max value of index centers.size()-1 built from
// normalized tent functions (1 - d(c_i, .)/rbar)^+ with disjoint supports.
TentBound tent_upper_bound(const AmvOperator& op, const std::vector<std::vector<double>>& centers);

struct ThresholdReport {
    double threshold = 0.0;     // min_i [Ã1]_i / r^2
    double lower_bound = 0.0;   // 1 / (2 r^2)
    bool holds = false;
};

ThresholdReport essential_threshold(const AmvOperator& op);

}  // namespace amv
