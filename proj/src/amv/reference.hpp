#pragma once

// Closed-form reference quantities for the model spaces.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amv/geometry.hpp"

namespace amv {

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
};

// Second-moment constant of the unit Euclidean ball, 1/(2(m+2)).
Rational cm(int m);

// Limit constant of the AMV operator on `space`: 1/6 for spaces whose balls
// are d_inf cubes (torus-linf, hypercube, interval), C_m for round balls.
double limit_constant(const SpaceDescriptor& space);

// Normalized sinc, sin(pi x)/(pi x) with sinc(0) = 1.
double sinc(double x) noexcept;

struct RefEntry {
    double value = 0.0;
    int multiplicity = 1;
    std::string label;
};

struct RefSpectrum {
    SpaceDescriptor space;
    std::vector<RefEntry> entries;   // ascending, grouped by value

    // Values repeated by multiplicity, ascending.
    std::vector<double> expanded() const;
};

// First `count` distinct eigenvalues of -Δ (Neumann on spaces with boundary).
RefSpectrum laplace_spectrum(const SpaceDescriptor& space, std::size_t count);

struct SincMode {
    std::vector<int> p;
    double value = 0.0;
};

struct SincSpectrum {
    double r = 0.0;
    int m = 1;
    std::vector<SincMode> entries;   // ascending; ties ordered by |p|_inf then lexicographically

    std::vector<double> values() const;
    // Multiplicities of consecutive equal values (relative tolerance `rel`).
    std::vector<int> multiplicities(std::size_t first, std::size_t count, double rel = 1e-12) const;
};

// CSV `label,value,multiplicity`.
std::string to_csv(const RefSpectrum& s);
// One row per distinct value, labelled by its smallest mode.
std::string to_csv(const SincSpectrum& s, std::size_t max_rows = 64);

// (1/r^2)(1 - prod_{i in J(p)} sinc(p_i r))
double torus_linf_amv_eigenvalue(std::span<const int> p, double r);

// Exact -Δ spectrum of the d_inf torus for |p|_inf <= pmax.
SincSpectrum torus_linf_amv_spectrum(int m, double r, int pmax = 64);

struct SincScan {
    int m = 1;
    double minimum = 0.0;
    double argmin_r = 0.0;
    std::vector<int> argmin_p;
    int argmin_pinf = 0;
};

// Brute-force minimum of |(1/r^2)(1 - prod sinc(p_i r))| over the grid and 0 != |p|_inf <= pmax.
SincScan sinc_scan(int m, const std::vector<double>& r_grid, int pmax = 64);

// {0.01, 0.02, ..., 1.00}
std::vector<double> default_scan_grid();

// Mean of cos(pi p.ξ) over the Euclidean ball of radius r in R^m (m in 1..3),
// evaluated by adaptive quadrature to 1e-10 absolute.
double round_ball_symbol(int m, double p_norm, double r);

}  // namespace amv
